#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgan/model/lstm.hpp"

namespace cgan::model {

struct DiscriminatorConfig {
  std::size_t vocab = 0;   // generator vocabulary; the separator takes id `vocab`
  std::size_t d = 64;      // width of the attention memories
  std::size_t d_emb = 64;
  std::size_t h_lstm = 64;
  std::size_t hidden = 64;  // width of O
};

/// One (v~, u~, Q, A) tuple. The memories come from the generator's encoder
/// and are plain values here, so no gradient can reach the generator.
struct DiscriminatorExample {
  ad::Tensor v_tilde;  // 1 x d
  ad::Tensor u_tilde;  // 1 x d
  data::TokenIds question;
  data::TokenIds answer;  // words only, no END
};

/// Human/machine classifier: an LSTM over Q, a separator and A gives u_QA;
/// O = tanh([v~; u~; u_QA] W_ed), then a 2-way softmax head. Class 1 is
/// "human" and its probability is the reward.
class Discriminator {
 public:
  static constexpr std::size_t kHuman = 1;

  Discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

  [[nodiscard]] const DiscriminatorConfig& config() const { return config_; }
  [[nodiscard]] int separator() const { return static_cast<int>(config_.vocab); }
  [[nodiscard]] ad::ParamList params() const;

  /// B x 2 logits, recorded on the active tape.
  [[nodiscard]] ad::Var logits(std::span<const DiscriminatorExample> examples) const;
  /// Human-class probability per example; no recording.
  [[nodiscard]] std::vector<double> human_probability(std::span<const DiscriminatorExample> examples) const;
  [[nodiscard]] double discriminate(const DiscriminatorExample& example) const;

  /// Mean binary cross-entropy with positives labelled human.
  [[nodiscard]] ad::Var bce_loss(std::span<const DiscriminatorExample> positives,
                                 std::span<const DiscriminatorExample> negatives) const;

  /// Accuracy of the argmax class over both sets.
  [[nodiscard]] double accuracy(std::span<const DiscriminatorExample> positives,
                                std::span<const DiscriminatorExample> negatives) const;

 private:
  void check(const DiscriminatorExample& example) const;

  DiscriminatorConfig config_;
  ad::Var embedding_;  // (vocab + 1) x d_emb
  LstmParams pair_lstm_;
  ad::Var w_ed_;       // (2d + h_lstm) x hidden
  ad::Var b_ed_;
  ad::Var out_w_;      // hidden x 2
  ad::Var out_b_;
};

}  // namespace cgan::model
