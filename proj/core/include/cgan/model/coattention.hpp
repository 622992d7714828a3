#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "cgan/autodiff/optim.hpp"
#include "cgan/data/vocabulary.hpp"
#include "cgan/model/init.hpp"

namespace cgan::model {

/// One attention step: H = tanh(X W_x + g1 W_g1 + g2 W_g2), alpha = softmax(H w).
struct CoAttentionStepParams {
  ad::Var w_x;   // d x h
  ad::Var w_g1;  // d x h
  ad::Var w_g2;  // d x h
  ad::Var w;     // h x 1

  static CoAttentionStepParams create(const std::string& prefix, std::size_t d, std::size_t h, Rng& rng);
  void collect(ad::ParamList& out) const;
};

struct AttentionResult {
  ad::Var weights;   // 1 x M
  ad::Var attended;  // 1 x d
};

/// `mask` flags real rows of X with 1; an empty mask means every row is real.
/// Masked rows get exactly zero weight. Throws when every row is masked.
AttentionResult co_atten(const ad::Var& x, const ad::Var& g1, const ad::Var& g2, std::span<const std::uint8_t> mask,
                         const CoAttentionStepParams& params);

/// Same as co_atten with X W_x already computed (the image term is shared by
/// every round of a dialog).
AttentionResult co_atten_projected(const ad::Var& x, const ad::Var& x_proj, const ad::Var& g1, const ad::Var& g2,
                                   std::span<const std::uint8_t> mask, const CoAttentionStepParams& params);

enum AttentionStep : std::size_t { kImageFirst = 0, kHistory = 1, kQuestion = 2, kImageSecond = 3 };

struct CoAttentionParams {
  std::array<CoAttentionStepParams, 4> steps;
  ad::Var w_eg;  // 3d x d

  static CoAttentionParams create(const std::string& prefix, std::size_t d, std::size_t h, Rng& rng);
  void collect(ad::ParamList& out) const;
};

struct EncoderContext {
  ad::Var v_tilde;  // 1 x d
  ad::Var u_tilde;
  ad::Var q_tilde;
  ad::Var fused;    // F, 1 x d
  std::array<ad::Tensor, 4> alphas;  // indexed by AttentionStep
  data::TokenIds question;
};

/// F = tanh([v; u; q] W_eg).
ad::Var fuse(const ad::Var& v_tilde, const ad::Var& u_tilde, const ad::Var& q_tilde, const ad::Var& w_eg);

/// X W_x for both image passes.
struct ImageProjections {
  ad::Var first;
  ad::Var second;
};
ImageProjections project_image(const ad::Var& v, const CoAttentionParams& params);

/// The four-step chain: image guided by the question, history guided by the
/// image and question, question guided by both, then the image again.
EncoderContext sequential_encode(const ad::Var& v, const ad::Var& u, const ad::Var& q, const ad::Var& q_init,
                                 const CoAttentionParams& params);
EncoderContext sequential_encode(const ad::Var& v, const ImageProjections& v_proj, const ad::Var& u, const ad::Var& q,
                                 const ad::Var& q_init, const CoAttentionParams& params);

}  // namespace cgan::model
