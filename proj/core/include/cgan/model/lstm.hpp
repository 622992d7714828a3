#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgan/autodiff/optim.hpp"
#include "cgan/data/vocabulary.hpp"
#include "cgan/model/init.hpp"

namespace cgan::model {

/// Single-layer LSTM, row-vector convention: gates = x W_x + h W_h + b with
/// the four gate blocks laid out as [input | forget | cell | output].
struct LstmParams {
  ad::Var w_x;   // input_size x 4h
  ad::Var w_h;   // h x 4h
  ad::Var bias;  // 1 x 4h

  static LstmParams create(const std::string& prefix, std::size_t input_size, std::size_t hidden, Rng& rng);

  [[nodiscard]] std::size_t input_size() const { return w_x.value().rows(); }
  [[nodiscard]] std::size_t hidden_size() const { return w_h.value().rows(); }
  void collect(ad::ParamList& out) const;
};

/// Hidden and cell state for a batch, each B x h.
struct LstmState {
  ad::Var h;
  ad::Var c;
};

LstmState zero_state(std::size_t batch, std::size_t hidden);

/// One step for a batch of rows. Rows whose `active` flag is 0 carry `prev`
/// through unchanged; an empty `active` means every row steps.
LstmState lstm_step(const LstmParams& params, const ad::Var& x, const LstmState& prev,
                    std::span<const std::uint8_t> active = {});

struct LstmOutput {
  ad::Var hiddens;    // one row per unmasked step, in order
  LstmState final;    // state after the last unmasked step (1 x h)
};

/// Runs a single sequence. `inputs` is L x input_size and `mask` flags the
/// real steps; masked steps leave the state untouched. Throws when nothing
/// is unmasked.
LstmOutput lstm_encode(const ad::Var& inputs, std::span<const std::uint8_t> mask, const LstmParams& params);

/// Runs B token sequences of different lengths side by side.
struct BatchedLstmOutput {
  std::vector<ad::Var> steps;  // per time step, B x h (rows past a sequence's end repeat its final state)
  LstmState final;             // B x h
  std::vector<std::size_t> lengths;

  /// Row b's hidden states stacked as lengths[b] x h.
  [[nodiscard]] ad::Var sequence(std::size_t b) const;
};

/// Embeds and encodes every sequence; all sequences must be non-empty.
BatchedLstmOutput lstm_encode_tokens(const LstmParams& params, const ad::Var& embedding,
                                     std::span<const data::TokenIds> sequences);

/// Row lookup with a vocabulary range check.
ad::Var embed_tokens(std::span<const int> ids, const ad::Var& table);

}  // namespace cgan::model
