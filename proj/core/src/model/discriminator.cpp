#include "cgan/model/discriminator.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

namespace {

ad::Var stack_memories(std::span<const DiscriminatorExample> examples, bool visual) {
  const std::size_t d = (visual ? examples[0].v_tilde : examples[0].u_tilde).size();
  ad::Tensor t = ad::Tensor::matrix(examples.size(), d);
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const auto& src = visual ? examples[b].v_tilde : examples[b].u_tilde;
    std::copy(src.data().begin(), src.data().end(), t.data().begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  return ad::Var::constant(std::move(t));
}

}  // namespace

Discriminator::Discriminator(const DiscriminatorConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.vocab == 0 || config_.d == 0 || config_.d_emb == 0 || config_.h_lstm == 0 || config_.hidden == 0) {
    throw std::invalid_argument("discriminator: every dimension must be positive");
  }
  Rng rng(seed);
  embedding_ = uniform_parameter("dis.embedding", config_.vocab + 1, config_.d_emb, 0.1, rng);
  pair_lstm_ = LstmParams::create("dis.pair_lstm", config_.d_emb, config_.h_lstm, rng);
  const std::size_t in = 2 * config_.d + config_.h_lstm;
  w_ed_ = uniform_parameter("dis.w_ed", in, config_.hidden, glorot_bound(in, config_.hidden), rng);
  b_ed_ = zero_parameter("dis.b_ed", 1, config_.hidden);
  out_w_ = uniform_parameter("dis.out_w", config_.hidden, 2, glorot_bound(config_.hidden, 2), rng);
  out_b_ = zero_parameter("dis.out_b", 1, 2);
}

ad::ParamList Discriminator::params() const {
  ad::ParamList list;
  list.add(embedding_);
  pair_lstm_.collect(list);
  list.add(w_ed_);
  list.add(b_ed_);
  list.add(out_w_);
  list.add(out_b_);
  return list;
}

void Discriminator::check(const DiscriminatorExample& example) const {
  if (example.answer.empty()) throw std::invalid_argument("discriminator: empty answer");
  if (example.question.empty()) throw std::invalid_argument("discriminator: empty question");
  for (const auto* seq : {&example.question, &example.answer}) {
    for (int id : *seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab) {
        throw std::out_of_range("discriminator: token id " + std::to_string(id) + " outside vocabulary");
      }
    }
  }
  if (example.v_tilde.size() != config_.d || example.u_tilde.size() != config_.d) {
    throw ad::ShapeError("discriminator: memories of width " + std::to_string(example.v_tilde.size()) + "/" +
                         std::to_string(example.u_tilde.size()) + ", expected " + std::to_string(config_.d));
  }
}

ad::Var Discriminator::logits(std::span<const DiscriminatorExample> examples) const {
  if (examples.empty()) throw std::invalid_argument("discriminator: no examples");
  std::vector<data::TokenIds> pairs;
  pairs.reserve(examples.size());
  for (const auto& e : examples) {
    check(e);
    data::TokenIds seq = e.question;
    seq.push_back(separator());
    seq.insert(seq.end(), e.answer.begin(), e.answer.end());
    pairs.push_back(std::move(seq));
  }
  const ad::Var u_qa = lstm_encode_tokens(pair_lstm_, embedding_, pairs).final.h;
  const std::array<ad::Var, 3> parts{stack_memories(examples, true), stack_memories(examples, false), u_qa};
  const ad::Var o = ad::tanh(ad::add_row(ad::matmul(ad::concat_cols(parts), w_ed_), b_ed_));
  return ad::add_row(ad::matmul(o, out_w_), out_b_);
}

std::vector<double> Discriminator::human_probability(std::span<const DiscriminatorExample> examples) const {
  if (examples.empty()) return {};
  ad::NoGradScope no_grad;
  const ad::Tensor z = logits(examples).value();
  std::vector<double> out(examples.size());
  for (std::size_t b = 0; b < examples.size(); ++b) {
    // Two-class softmax written as a logistic of the logit gap.
    out[b] = 1.0 / (1.0 + std::exp(z.at(b, 0) - z.at(b, kHuman)));
  }
  return out;
}

double Discriminator::discriminate(const DiscriminatorExample& example) const {
  return human_probability(std::span<const DiscriminatorExample>(&example, 1)).front();
}

ad::Var Discriminator::bce_loss(std::span<const DiscriminatorExample> positives,
                                std::span<const DiscriminatorExample> negatives) const {
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("discriminator: need both positive and negative examples");
  }
  std::vector<DiscriminatorExample> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  std::vector<int> targets(all.size(), 0);
  std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(positives.size()), static_cast<int>(kHuman));
  const std::vector<double> weights(all.size(), 1.0 / static_cast<double>(all.size()));
  return ad::cross_entropy(logits(all), targets, weights);
}

double Discriminator::accuracy(std::span<const DiscriminatorExample> positives,
                               std::span<const DiscriminatorExample> negatives) const {
  std::size_t correct = 0;
  for (double p : human_probability(positives)) correct += p > 0.5;
  for (double p : human_probability(negatives)) correct += p < 0.5;
  return static_cast<double>(correct) / static_cast<double>(positives.size() + negatives.size());
}

}  // namespace cgan::model
