#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgan/model/encoders.hpp"

namespace cgan::model {

struct GeneratorConfig {
  EncoderDims dims;
  std::size_t k_max = 20;
  /// Every answer is exactly k_max words and END is never emitted.
  bool fixed_length = false;
  /// When false, UNK is removed from the output distribution.
  bool emit_unk = true;
  /// Candidate scores divided by the scored token count.
  bool length_normalized = false;
};

enum class DecodeMode { kGreedy, kSample };

struct Response {
  data::TokenIds tokens;  // ends with END when terminated
  std::vector<double> log_probs;
  bool terminated = false;

  /// Tokens without the trailing END.
  [[nodiscard]] data::TokenIds words() const;
};

/// The answer policy: a context encoder whose fused feature F sets the
/// initial state of a decoder LSTM over the shared embedding table.
///
/// Output mask: PAD and START are never emitted; END is unavailable at the
/// first step, so answers have at least one word, and it is the only choice
/// once k_max words have been emitted.
class Generator {
 public:
  Generator(const GeneratorConfig& config, std::uint64_t seed);

  [[nodiscard]] const GeneratorConfig& config() const { return config_; }
  [[nodiscard]] const ContextEncoder& encoder() const { return encoder_; }
  [[nodiscard]] ad::ParamList params() const;

  [[nodiscard]] std::vector<EncoderContext> encode(const data::DialogRecord& record, const ad::Tensor& image,
                                                   std::span<const std::size_t> rounds) const {
    return encoder_.encode(record, image, rounds);
  }

  /// Answer words followed by END (words unchanged in fixed-length mode).
  [[nodiscard]] data::TokenIds target_sequence(const data::TokenIds& words) const;

  [[nodiscard]] Response decode(const EncoderContext& context, DecodeMode mode, Rng& rng) const;
  [[nodiscard]] std::vector<Response> decode_batch(std::span<const EncoderContext> contexts, DecodeMode mode,
                                                   Rng& rng) const;

  /// Samples a continuation of every prefix from the policy. Prefixes that
  /// are already complete come back unchanged.
  [[nodiscard]] std::vector<data::TokenIds> complete(const EncoderContext& context,
                                                     std::span<const data::TokenIds> prefixes, Rng& rng) const;

  /// Output distribution before each token of `tokens` (teacher forced), plus
  /// the distribution after the last one. Rows are full-vocabulary.
  [[nodiscard]] std::vector<std::vector<double>> step_distributions(const EncoderContext& context,
                                                                    const data::TokenIds& tokens) const;

  /// log p(a_k | context, a_<k) for each token of raw sequences (teacher forced).
  [[nodiscard]] std::vector<std::vector<double>> token_log_probs(std::span<const EncoderContext> contexts,
                                                                 std::span<const data::TokenIds> sequences) const;

  /// Sum of token log-probabilities of `words` plus END.
  [[nodiscard]] double sequence_log_likelihood(const EncoderContext& context, const data::TokenIds& words) const;

  /// Candidate scores for one context, batched. Summed log-likelihood, or
  /// per-token mean when length_normalized is set.
  [[nodiscard]] std::vector<double> score_candidates(const EncoderContext& context,
                                                     std::span<const data::TokenIds> candidates) const;

  /// sum_b sum_k weights[b][k] * -log p(sequences[b][k]); contexts[b] may
  /// repeat. Recorded on the active tape.
  [[nodiscard]] ad::Var weighted_nll(std::span<const EncoderContext* const> contexts,
                                     std::span<const data::TokenIds> sequences,
                                     std::span<const std::vector<double>> weights) const;

  /// Mean token cross-entropy of the human answers (END appended).
  [[nodiscard]] ad::Var mle_loss(std::span<const EncoderContext> contexts, std::span<const data::TokenIds> answers) const;

 private:
  struct Decoder {
    ad::Var init_h_w, init_h_b, init_c_w, init_c_b;
    LstmParams lstm;
    ad::Var out_w, out_b;
  };

  [[nodiscard]] std::size_t max_steps() const;
  [[nodiscard]] const std::vector<std::uint8_t>& step_mask(std::size_t k) const;
  [[nodiscard]] LstmState initial_state(const ad::Var& fused) const;
  [[nodiscard]] ad::Var step_logits(const LstmState& state, std::size_t k) const;
  [[nodiscard]] std::vector<ad::Var> forced_logits(const ad::Var& fused, std::span<const data::TokenIds> sequences) const;
  [[nodiscard]] std::vector<Response> run(const ad::Var& fused, std::span<const data::TokenIds> prefixes,
                                          DecodeMode mode, Rng& rng) const;
  void check_sequence(const data::TokenIds& tokens) const;

  GeneratorConfig config_;
  ContextEncoder encoder_;
  Decoder decoder_;
  std::vector<std::vector<std::uint8_t>> masks_;  // first, middle, final step
};

/// Rows of every context's F stacked in order (B x d).
ad::Var stack_fused(std::span<const EncoderContext* const> contexts);

}  // namespace cgan::model
