#include "cgan/model/encoders.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

namespace {

void require_positive(std::size_t v, const char* name) {
  if (v == 0) throw std::invalid_argument(std::string("encoder dims: ") + name + " must be positive");
}

void check_round(const data::DialogRecord& record, std::size_t t) {
  if (t >= record.rounds.size()) {
    throw std::out_of_range("round " + std::to_string(t) + " outside dialog of " +
                            std::to_string(record.rounds.size()) + " rounds");
  }
}

ad::Var leading_rows(const ad::Var& m, std::size_t count) {
  if (count == m.value().rows()) return m;
  std::vector<int> ids(count);
  std::iota(ids.begin(), ids.end(), 0);
  return ad::gather_rows(m, ids);
}

}  // namespace

void EncoderDims::validate() const {
  require_positive(vocab, "vocab");
  require_positive(d_img, "d_img");
  require_positive(d, "d");
  require_positive(d_emb, "d_emb");
  require_positive(h_att, "h_att");
}

EncoderParams EncoderParams::create(const std::string& prefix, const EncoderDims& dims, Rng& rng) {
  dims.validate();
  EncoderParams p;
  p.embedding = uniform_parameter(prefix + ".embedding", dims.vocab, dims.d_emb, 0.1, rng);
  p.image_w = uniform_parameter(prefix + ".image_w", dims.d_img, dims.d, glorot_bound(dims.d_img, dims.d), rng);
  p.image_b = zero_parameter(prefix + ".image_b", 1, dims.d);
  p.question = LstmParams::create(prefix + ".question_lstm", dims.d_emb, dims.d, rng);
  p.history = LstmParams::create(prefix + ".history_lstm", dims.d_emb, dims.d, rng);
  return p;
}

void EncoderParams::collect(ad::ParamList& out) const {
  out.add(embedding);
  out.add(image_w);
  out.add(image_b);
  question.collect(out);
  history.collect(out);
}

data::TokenIds utterance(const data::DialogRound& round) {
  data::TokenIds u = round.question;
  u.insert(u.end(), round.answer.begin(), round.answer.end());
  return u;
}

ImageFeatures project_image_features(const ad::Tensor& image, const EncoderParams& params) {
  if (image.rank() != 2 || image.cols() != params.image_w.value().rows()) {
    throw ad::ShapeError("image features of shape " + ad::shape_str(image.shape()) + " but d_img is " +
                         std::to_string(params.image_w.value().rows()));
  }
  return {ad::add_row(ad::matmul(ad::Var::constant(image), params.image_w), params.image_b)};
}

ContextFeatures encode_context(const data::DialogRecord& record, const ad::Tensor& image, std::size_t t,
                               const EncoderParams& params) {
  check_round(record, t);
  std::vector<data::TokenIds> history{record.caption};
  for (std::size_t r = 0; r < t; ++r) history.push_back(utterance(record.rounds[r]));
  const auto hist = lstm_encode_tokens(params.history, params.embedding, history);
  const std::array<data::TokenIds, 1> question{record.rounds[t].question};
  const auto ques = lstm_encode_tokens(params.question, params.embedding, question);
  ContextFeatures f{project_image_features(image, params), {hist.final.h, t},
                    {ques.sequence(0), ques.final.h, question[0].size()}};
  if (f.history.u.value().rows() != t + 1) throw std::logic_error("encode_context: history leaks past round t");
  return f;
}

ContextEncoder::ContextEncoder(const std::string& prefix, const EncoderDims& dims, Rng& rng)
    : dims_(dims),
      encoder_(EncoderParams::create(prefix, dims, rng)),
      attention_(CoAttentionParams::create(prefix + ".coatt", dims.d, dims.h_att, rng)) {}

std::vector<EncoderContext> ContextEncoder::encode(const data::DialogRecord& record, const ad::Tensor& image,
                                                   std::span<const std::size_t> rounds) const {
  if (rounds.empty()) return {};
  for (std::size_t t : rounds) check_round(record, t);
  const std::size_t last = *std::max_element(rounds.begin(), rounds.end());

  const ImageFeatures v = project_image_features(image, encoder_);
  const ImageProjections v_proj = project_image(v.projected, attention_);

  std::vector<data::TokenIds> history{record.caption};
  for (std::size_t r = 0; r < last; ++r) history.push_back(utterance(record.rounds[r]));
  const ad::Var u_all = lstm_encode_tokens(encoder_.history, encoder_.embedding, history).final.h;

  std::vector<data::TokenIds> questions;
  questions.reserve(rounds.size());
  for (std::size_t t : rounds) questions.push_back(record.rounds[t].question);
  const auto ques = lstm_encode_tokens(encoder_.question, encoder_.embedding, questions);

  std::vector<EncoderContext> out;
  out.reserve(rounds.size());
  for (std::size_t b = 0; b < rounds.size(); ++b) {
    const std::size_t t = rounds[b];
    const ad::Var u = leading_rows(u_all, t + 1);
    if (u.value().rows() != t + 1) throw std::logic_error("ContextEncoder: history leaks past round t");
    const int row = static_cast<int>(b);
    const ad::Var q_init =
        rounds.size() == 1 ? ques.final.h : ad::gather_rows(ques.final.h, std::span<const int>(&row, 1));
    EncoderContext ctx = sequential_encode(v.projected, v_proj, u, ques.sequence(b), q_init, attention_);
    ctx.question = questions[b];
    out.push_back(std::move(ctx));
  }
  return out;
}

EncoderContext ContextEncoder::encode_round(const data::DialogRecord& record, const ad::Tensor& image,
                                            std::size_t t) const {
  const std::array<std::size_t, 1> rounds{t};
  return std::move(encode(record, image, rounds).front());
}

void ContextEncoder::collect(ad::ParamList& out) const {
  encoder_.collect(out);
  attention_.collect(out);
}

}  // namespace cgan::model
