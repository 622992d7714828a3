#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgan/model/encoders.hpp"

namespace cgan::model {

/// Baseline estimator: its own context encoder and a scalar head on F. The
/// head starts at zero, so a fresh critic predicts b = 0 everywhere.
class Critic {
 public:
  Critic(const EncoderDims& dims, std::uint64_t seed);

  [[nodiscard]] const ContextEncoder& encoder() const { return encoder_; }
  [[nodiscard]] ad::ParamList params() const;

  [[nodiscard]] std::vector<EncoderContext> encode(const data::DialogRecord& record, const ad::Tensor& image,
                                                   std::span<const std::size_t> rounds) const {
    return encoder_.encode(record, image, rounds);
  }

  /// B x 1 baselines, recorded on the active tape.
  [[nodiscard]] ad::Var baseline(std::span<const EncoderContext> contexts) const;

 private:
  ContextEncoder encoder_;
  ad::Var head_w_;  // d x 1
  ad::Var head_b_;  // 1 x 1
};

}  // namespace cgan::model
