#include "cgan/model/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

namespace {

using data::Vocabulary;

std::vector<double> log_softmax_row(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - mx);
  const double logz = mx + std::log(total);
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] - logz;
  return out;
}

std::span<const double> row_of(const ad::Tensor& t, std::size_t r) { return t.data().subspan(r * t.cols(), t.cols()); }

int sample_index(const std::vector<double>& log_probs, double u) {
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t j = 0; j < log_probs.size(); ++j) {
    const double p = std::exp(log_probs[j]);
    if (p <= 0.0) continue;
    last_positive = static_cast<int>(j);
    cum += p;
    if (u < cum) return static_cast<int>(j);
  }
  return last_positive;
}

int argmax_index(const std::vector<double>& log_probs) {
  return static_cast<int>(std::max_element(log_probs.begin(), log_probs.end()) - log_probs.begin());
}

}  // namespace

data::TokenIds Response::words() const {
  data::TokenIds w = tokens;
  if (terminated && !w.empty() && w.back() == Vocabulary::kEnd) w.pop_back();
  return w;
}

ad::Var stack_fused(std::span<const EncoderContext* const> contexts) {
  if (contexts.empty()) throw std::invalid_argument("stack_fused: no contexts");
  std::vector<const EncoderContext*> unique;
  std::vector<int> index;
  index.reserve(contexts.size());
  for (const EncoderContext* c : contexts) {
    auto it = std::find(unique.begin(), unique.end(), c);
    if (it == unique.end()) {
      index.push_back(static_cast<int>(unique.size()));
      unique.push_back(c);
    } else {
      index.push_back(static_cast<int>(it - unique.begin()));
    }
  }
  std::vector<ad::Var> rows;
  rows.reserve(unique.size());
  for (const EncoderContext* c : unique) rows.push_back(c->fused);
  const ad::Var stacked = rows.size() == 1 ? rows[0] : ad::concat_rows(rows);
  if (unique.size() == contexts.size()) return stacked;
  return ad::gather_rows(stacked, index);
}

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.k_max == 0) throw std::invalid_argument("generator: k_max must be positive");
  config_.dims.validate();
  if (config_.dims.vocab <= static_cast<std::size_t>(Vocabulary::kNumReserved) && !config_.fixed_length) {
    throw std::invalid_argument("generator: vocabulary has no content words");
  }
  Rng rng(seed);
  encoder_ = ContextEncoder("gen", config_.dims, rng);
  const std::size_t d = config_.dims.d, v = config_.dims.vocab;
  const double bd = glorot_bound(d, d);
  decoder_.init_h_w = uniform_parameter("gen.dec.init_h_w", d, d, bd, rng);
  decoder_.init_h_b = zero_parameter("gen.dec.init_h_b", 1, d);
  decoder_.init_c_w = uniform_parameter("gen.dec.init_c_w", d, d, bd, rng);
  decoder_.init_c_b = zero_parameter("gen.dec.init_c_b", 1, d);
  decoder_.lstm = LstmParams::create("gen.dec.lstm", config_.dims.d_emb, d, rng);
  decoder_.out_w = uniform_parameter("gen.dec.out_w", d, v, glorot_bound(d, v), rng);
  decoder_.out_b = zero_parameter("gen.dec.out_b", 1, v);

  std::vector<std::uint8_t> middle(v, 0);
  middle[Vocabulary::kPad] = 1;
  middle[Vocabulary::kStart] = 1;
  if (!config_.emit_unk) middle[Vocabulary::kUnk] = 1;
  if (config_.fixed_length) middle[Vocabulary::kEnd] = 1;
  std::vector<std::uint8_t> first = middle;
  first[Vocabulary::kEnd] = 1;
  std::vector<std::uint8_t> last(v, 1);
  last[Vocabulary::kEnd] = 0;
  if (std::all_of(middle.begin(), middle.end(), [](std::uint8_t m) { return m != 0; })) {
    throw std::invalid_argument("generator: output mask leaves no token");
  }
  masks_ = {std::move(first), std::move(middle), std::move(last)};
}

ad::ParamList Generator::params() const {
  ad::ParamList list;
  encoder_.collect(list);
  list.add(decoder_.init_h_w);
  list.add(decoder_.init_h_b);
  list.add(decoder_.init_c_w);
  list.add(decoder_.init_c_b);
  decoder_.lstm.collect(list);
  list.add(decoder_.out_w);
  list.add(decoder_.out_b);
  return list;
}

std::size_t Generator::max_steps() const { return config_.fixed_length ? config_.k_max : config_.k_max + 1; }

const std::vector<std::uint8_t>& Generator::step_mask(std::size_t k) const {
  if (config_.fixed_length) return masks_[1];
  if (k == 0) return masks_[0];
  return k >= config_.k_max ? masks_[2] : masks_[1];
}

data::TokenIds Generator::target_sequence(const data::TokenIds& words) const {
  data::TokenIds seq = words;
  if (!config_.fixed_length) seq.push_back(Vocabulary::kEnd);
  return seq;
}

void Generator::check_sequence(const data::TokenIds& tokens) const {
  if (tokens.size() > max_steps()) {
    throw std::invalid_argument("generator: sequence of " + std::to_string(tokens.size()) + " tokens exceeds " +
                                std::to_string(max_steps()));
  }
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.dims.vocab) {
      throw std::out_of_range("generator: token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

LstmState Generator::initial_state(const ad::Var& fused) const {
  return {ad::tanh(ad::add_row(ad::matmul(fused, decoder_.init_h_w), decoder_.init_h_b)),
          ad::tanh(ad::add_row(ad::matmul(fused, decoder_.init_c_w), decoder_.init_c_b))};
}

ad::Var Generator::step_logits(const LstmState& state, std::size_t k) const {
  const ad::Var logits = ad::add_row(ad::matmul(state.h, decoder_.out_w), decoder_.out_b);
  const auto& row_mask = step_mask(k);
  const std::size_t rows = logits.value().rows();
  std::vector<std::uint8_t> mask;
  mask.reserve(rows * row_mask.size());
  for (std::size_t r = 0; r < rows; ++r) mask.insert(mask.end(), row_mask.begin(), row_mask.end());
  return ad::masked_fill(logits, mask, ad::kMaskedScore);
}

std::vector<ad::Var> Generator::forced_logits(const ad::Var& fused, std::span<const data::TokenIds> sequences) const {
  std::size_t longest = 0;
  for (const auto& s : sequences) longest = std::max(longest, s.size());
  const std::size_t batch = sequences.size();
  LstmState state = initial_state(fused);
  std::vector<int> ids(batch);
  std::vector<ad::Var> out;
  out.reserve(longest);
  for (std::size_t k = 0; k < longest; ++k) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (k == 0) {
        ids[b] = Vocabulary::kStart;
      } else {
        ids[b] = k - 1 < sequences[b].size() ? sequences[b][k - 1] : Vocabulary::kPad;
      }
    }
    state = lstm_step(decoder_.lstm, embed_tokens(ids, encoder_.embedding()), state);
    out.push_back(step_logits(state, k));
  }
  return out;
}

std::vector<Response> Generator::run(const ad::Var& fused, std::span<const data::TokenIds> prefixes, DecodeMode mode,
                                     Rng& rng) const {
  ad::NoGradScope no_grad;
  const std::size_t batch = fused.value().rows();
  for (const auto& p : prefixes) check_sequence(p);
  std::vector<Response> out(batch);
  std::vector<bool> done(batch, false);
  std::size_t remaining = batch;
  std::vector<int> prev(batch, Vocabulary::kStart);
  LstmState state = initial_state(fused);
  for (std::size_t k = 0; k < max_steps() && remaining > 0; ++k) {
    state = lstm_step(decoder_.lstm, embed_tokens(prev, encoder_.embedding()), state);
    const ad::Tensor logits = step_logits(state, k).value();
    for (std::size_t b = 0; b < batch; ++b) {
      if (done[b]) {
        prev[b] = Vocabulary::kPad;
        continue;
      }
      const auto lp = log_softmax_row(row_of(logits, b));
      int tok;
      if (!prefixes.empty() && k < prefixes[b].size()) {
        tok = prefixes[b][k];
      } else if (mode == DecodeMode::kGreedy) {
        tok = argmax_index(lp);
      } else {
        tok = sample_index(lp, uniform01(rng));
      }
      out[b].tokens.push_back(tok);
      out[b].log_probs.push_back(lp[static_cast<std::size_t>(tok)]);
      prev[b] = tok;
      const bool ended = !config_.fixed_length && tok == Vocabulary::kEnd;
      if (ended) out[b].terminated = true;
      if (ended || out[b].tokens.size() == max_steps()) {
        done[b] = true;
        --remaining;
      }
    }
  }
  return out;
}

Response Generator::decode(const EncoderContext& context, DecodeMode mode, Rng& rng) const {
  return std::move(run(context.fused, {}, mode, rng).front());
}

std::vector<Response> Generator::decode_batch(std::span<const EncoderContext> contexts, DecodeMode mode,
                                              Rng& rng) const {
  if (contexts.empty()) return {};
  std::vector<const EncoderContext*> ptrs;
  for (const auto& c : contexts) ptrs.push_back(&c);
  ad::NoGradScope no_grad;
  return run(stack_fused(ptrs), {}, mode, rng);
}

std::vector<data::TokenIds> Generator::complete(const EncoderContext& context, std::span<const data::TokenIds> prefixes,
                                                Rng& rng) const {
  if (prefixes.empty()) return {};
  ad::NoGradScope no_grad;
  const std::vector<int> rows(prefixes.size(), 0);
  const auto responses = run(ad::gather_rows(context.fused, rows), prefixes, DecodeMode::kSample, rng);
  std::vector<data::TokenIds> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(r.tokens);
  return out;
}

std::vector<std::vector<double>> Generator::step_distributions(const EncoderContext& context,
                                                               const data::TokenIds& tokens) const {
  check_sequence(tokens);
  ad::NoGradScope no_grad;
  data::TokenIds padded = tokens;
  padded.push_back(Vocabulary::kPad);
  const std::array<data::TokenIds, 1> seqs{padded};
  const auto logits = forced_logits(context.fused, seqs);
  std::vector<std::vector<double>> out;
  for (const auto& l : logits) {
    auto lp = log_softmax_row(row_of(l.value(), 0));
    for (double& v : lp) v = std::exp(v);
    out.push_back(std::move(lp));
  }
  return out;
}

std::vector<std::vector<double>> Generator::token_log_probs(std::span<const EncoderContext> contexts,
                                                            std::span<const data::TokenIds> sequences) const {
  if (contexts.size() != sequences.size()) throw std::invalid_argument("token_log_probs: one context per sequence");
  if (sequences.empty()) return {};
  for (const auto& s : sequences) check_sequence(s);
  std::vector<const EncoderContext*> ptrs;
  for (const auto& c : contexts) ptrs.push_back(&c);
  ad::NoGradScope no_grad;
  const auto logits = forced_logits(stack_fused(ptrs), sequences);
  std::vector<std::vector<double>> out(sequences.size());
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    for (std::size_t k = 0; k < sequences[b].size(); ++k) {
      const auto lp = log_softmax_row(row_of(logits[k].value(), b));
      out[b].push_back(lp[static_cast<std::size_t>(sequences[b][k])]);
    }
  }
  return out;
}

double Generator::sequence_log_likelihood(const EncoderContext& context, const data::TokenIds& words) const {
  if (words.empty()) throw std::invalid_argument("sequence_log_likelihood: empty answer");
  const std::array<EncoderContext, 1> ctx{context};
  const std::array<data::TokenIds, 1> seq{target_sequence(words)};
  const auto log_probs = token_log_probs(ctx, seq);
  double total = 0.0;
  for (double lp : log_probs.front()) total += lp;
  return total;
}

std::vector<double> Generator::score_candidates(const EncoderContext& context,
                                                std::span<const data::TokenIds> candidates) const {
  if (candidates.empty()) return {};
  std::vector<data::TokenIds> seqs;
  seqs.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.empty()) throw std::invalid_argument("score_candidates: empty candidate");
    seqs.push_back(target_sequence(c));
    check_sequence(seqs.back());
  }
  ad::NoGradScope no_grad;
  const std::vector<int> rows(seqs.size(), 0);
  const auto logits = forced_logits(ad::gather_rows(context.fused, rows), seqs);
  std::vector<double> scores(seqs.size(), 0.0);
  std::vector<double> lp;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const ad::Tensor& l = logits[k].value();
    for (std::size_t b = 0; b < seqs.size(); ++b) {
      if (k >= seqs[b].size()) continue;
      lp = log_softmax_row(row_of(l, b));
      scores[b] += lp[static_cast<std::size_t>(seqs[b][k])];
    }
  }
  if (config_.length_normalized) {
    for (std::size_t b = 0; b < seqs.size(); ++b) scores[b] /= static_cast<double>(seqs[b].size());
  }
  return scores;
}

ad::Var Generator::weighted_nll(std::span<const EncoderContext* const> contexts,
                                std::span<const data::TokenIds> sequences,
                                std::span<const std::vector<double>> weights) const {
  if (sequences.empty()) throw std::invalid_argument("weighted_nll: empty batch");
  if (contexts.size() != sequences.size() || weights.size() != sequences.size()) {
    throw std::invalid_argument("weighted_nll: contexts, sequences and weights differ in length");
  }
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    check_sequence(sequences[b]);
    if (weights[b].size() != sequences[b].size()) {
      throw std::invalid_argument("weighted_nll: sequence " + std::to_string(b) + " has " +
                                  std::to_string(sequences[b].size()) + " tokens but " +
                                  std::to_string(weights[b].size()) + " weights");
    }
  }
  const auto logits = forced_logits(stack_fused(contexts), sequences);
  const std::size_t batch = sequences.size();
  std::vector<int> targets(logits.size() * batch, Vocabulary::kPad);
  std::vector<double> w(targets.size(), 0.0);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    for (std::size_t b = 0; b < batch; ++b) {
      if (k >= sequences[b].size()) continue;
      targets[k * batch + b] = sequences[b][k];
      w[k * batch + b] = weights[b][k];
    }
  }
  return ad::cross_entropy(logits.size() == 1 ? logits[0] : ad::concat_rows(logits), targets, w);
}

ad::Var Generator::mle_loss(std::span<const EncoderContext> contexts, std::span<const data::TokenIds> answers) const {
  if (answers.empty()) throw std::invalid_argument("mle_loss: empty batch");
  if (contexts.size() != answers.size()) throw std::invalid_argument("mle_loss: one context per answer");
  std::vector<data::TokenIds> seqs;
  std::vector<const EncoderContext*> ptrs;
  std::size_t count = 0;
  for (std::size_t b = 0; b < answers.size(); ++b) {
    if (answers[b].empty()) throw std::invalid_argument("mle_loss: empty answer");
    seqs.push_back(target_sequence(answers[b]));
    ptrs.push_back(&contexts[b]);
    count += seqs.back().size();
  }
  std::vector<std::vector<double>> weights;
  for (const auto& s : seqs) weights.emplace_back(s.size(), 1.0 / static_cast<double>(count));
  return weighted_nll(ptrs, seqs, weights);
}

}  // namespace cgan::model
