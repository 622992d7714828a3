#include "cgan/model/lstm.hpp"

#include <stdexcept>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

LstmParams LstmParams::create(const std::string& prefix, std::size_t input_size, std::size_t hidden, Rng& rng) {
  if (input_size == 0 || hidden == 0) throw std::invalid_argument("lstm: zero-sized layer " + prefix);
  LstmParams p;
  p.w_x = uniform_parameter(prefix + ".w_x", input_size, 4 * hidden, glorot_bound(input_size, hidden), rng);
  p.w_h = uniform_parameter(prefix + ".w_h", hidden, 4 * hidden, glorot_bound(hidden, hidden), rng);
  ad::Tensor b = ad::Tensor::matrix(1, 4 * hidden);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  p.bias = ad::Var::parameter(std::move(b), prefix + ".bias");
  return p;
}

void LstmParams::collect(ad::ParamList& out) const {
  out.add(w_x);
  out.add(w_h);
  out.add(bias);
}

LstmState zero_state(std::size_t batch, std::size_t hidden) {
  return {ad::Var::constant(ad::Tensor::matrix(batch, hidden)), ad::Var::constant(ad::Tensor::matrix(batch, hidden))};
}

LstmState lstm_step(const LstmParams& params, const ad::Var& x, const LstmState& prev,
                    std::span<const std::uint8_t> active) {
  const std::size_t h = params.hidden_size();
  const ad::Var z = ad::add_row(ad::add(ad::matmul(x, params.w_x), ad::matmul(prev.h, params.w_h)), params.bias);
  const ad::Var i = ad::sigmoid(ad::slice_cols(z, 0, h));
  const ad::Var f = ad::sigmoid(ad::slice_cols(z, h, 2 * h));
  const ad::Var g = ad::tanh(ad::slice_cols(z, 2 * h, 3 * h));
  const ad::Var o = ad::sigmoid(ad::slice_cols(z, 3 * h, 4 * h));
  ad::Var c = ad::add(ad::mul(f, prev.c), ad::mul(i, g));
  ad::Var hn = ad::mul(o, ad::tanh(c));
  if (active.empty()) return {hn, c};
  return {ad::select_rows(active, hn, prev.h), ad::select_rows(active, c, prev.c)};
}

LstmOutput lstm_encode(const ad::Var& inputs, std::span<const std::uint8_t> mask, const LstmParams& params) {
  const std::size_t steps = inputs.value().rows();
  if (mask.size() != steps) throw ad::ShapeError("lstm_encode: mask length does not match input rows");
  if (inputs.value().cols() != params.input_size()) {
    throw ad::ShapeError("lstm_encode: input width " + std::to_string(inputs.value().cols()) + " but layer expects " +
                         std::to_string(params.input_size()));
  }
  LstmState state = zero_state(1, params.hidden_size());
  std::vector<ad::Var> hiddens;
  for (std::size_t t = 0; t < steps; ++t) {
    if (!mask[t]) continue;
    const int row = static_cast<int>(t);
    state = lstm_step(params, ad::gather_rows(inputs, std::span<const int>(&row, 1)), state);
    hiddens.push_back(state.h);
  }
  if (hiddens.empty()) throw std::invalid_argument("lstm_encode: every step is masked");
  return {ad::concat_rows(hiddens), state};
}

ad::Var BatchedLstmOutput::sequence(std::size_t b) const {
  const std::size_t batch = lengths.size();
  std::vector<ad::Var> rows;
  rows.reserve(lengths.at(b));
  for (std::size_t t = 0; t < lengths[b]; ++t) {
    const int r = static_cast<int>(b);
    rows.push_back(batch == 1 ? steps[t] : ad::gather_rows(steps[t], std::span<const int>(&r, 1)));
  }
  return ad::concat_rows(rows);
}

BatchedLstmOutput lstm_encode_tokens(const LstmParams& params, const ad::Var& embedding,
                                     std::span<const data::TokenIds> sequences) {
  if (sequences.empty()) throw std::invalid_argument("lstm_encode_tokens: no sequences");
  BatchedLstmOutput out;
  std::size_t longest = 0;
  for (const auto& s : sequences) {
    if (s.empty()) throw std::invalid_argument("lstm_encode_tokens: empty sequence");
    out.lengths.push_back(s.size());
    longest = std::max(longest, s.size());
  }
  const std::size_t batch = sequences.size();
  LstmState state = zero_state(batch, params.hidden_size());
  std::vector<int> ids(batch);
  std::vector<std::uint8_t> active(batch);
  for (std::size_t t = 0; t < longest; ++t) {
    bool all_active = true;
    for (std::size_t b = 0; b < batch; ++b) {
      active[b] = t < sequences[b].size();
      all_active = all_active && active[b];
      ids[b] = active[b] ? sequences[b][t] : data::Vocabulary::kPad;
    }
    const ad::Var x = embed_tokens(ids, embedding);
    state = lstm_step(params, x, state, all_active ? std::span<const std::uint8_t>{} : std::span<const std::uint8_t>(active));
    out.steps.push_back(state.h);
  }
  out.final = state;
  return out;
}

ad::Var embed_tokens(std::span<const int> ids, const ad::Var& table) {
  const std::size_t vocab = table.value().rows();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embed_tokens: id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(vocab));
    }
  }
  return ad::gather_rows(table, ids);
}

}  // namespace cgan::model
