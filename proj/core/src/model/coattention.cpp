#include "cgan/model/coattention.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

CoAttentionStepParams CoAttentionStepParams::create(const std::string& prefix, std::size_t d, std::size_t h,
                                                    Rng& rng) {
  const double b = glorot_bound(d, h);
  return {uniform_parameter(prefix + ".w_x", d, h, b, rng), uniform_parameter(prefix + ".w_g1", d, h, b, rng),
          uniform_parameter(prefix + ".w_g2", d, h, b, rng),
          uniform_parameter(prefix + ".w", h, 1, glorot_bound(h, 1), rng)};
}

void CoAttentionStepParams::collect(ad::ParamList& out) const {
  out.add(w_x);
  out.add(w_g1);
  out.add(w_g2);
  out.add(w);
}

AttentionResult co_atten_projected(const ad::Var& x, const ad::Var& x_proj, const ad::Var& g1, const ad::Var& g2,
                                   std::span<const std::uint8_t> mask, const CoAttentionStepParams& params) {
  const std::size_t m = x.value().rows();
  if (m == 0) throw ad::ShapeError("co_atten: empty feature sequence");
  if (g1.value().size() != x.value().cols() || g2.value().size() != x.value().cols()) {
    throw ad::ShapeError("co_atten: guidance of shape " + ad::shape_str(g1.shape()) + " / " +
                         ad::shape_str(g2.shape()) + " for features " + ad::shape_str(x.shape()));
  }
  bool any_masked = false;
  if (!mask.empty()) {
    if (mask.size() != m) throw ad::ShapeError("co_atten: mask length does not match feature rows");
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t f) { return f != 0; })) {
      throw std::invalid_argument("co_atten: every row is masked");
    }
    any_masked = std::any_of(mask.begin(), mask.end(), [](std::uint8_t f) { return f == 0; });
  }
  const ad::Var guide = ad::add(ad::matmul(g1, params.w_g1), ad::matmul(g2, params.w_g2));
  const ad::Var hidden = ad::tanh(ad::add_row(x_proj, guide));
  ad::Var scores = ad::transpose(ad::matmul(hidden, params.w));
  if (any_masked) {
    std::vector<std::uint8_t> fill(m);
    for (std::size_t i = 0; i < m; ++i) fill[i] = mask[i] == 0;
    scores = ad::masked_fill(scores, fill, ad::kMaskedScore);
  }
  const ad::Var alpha = ad::softmax(scores);
  return {alpha, ad::matmul(alpha, x)};
}

AttentionResult co_atten(const ad::Var& x, const ad::Var& g1, const ad::Var& g2, std::span<const std::uint8_t> mask,
                         const CoAttentionStepParams& params) {
  return co_atten_projected(x, ad::matmul(x, params.w_x), g1, g2, mask, params);
}

CoAttentionParams CoAttentionParams::create(const std::string& prefix, std::size_t d, std::size_t h, Rng& rng) {
  CoAttentionParams p;
  for (std::size_t s = 0; s < 4; ++s) p.steps[s] = CoAttentionStepParams::create(prefix + ".step" + std::to_string(s + 1), d, h, rng);
  p.w_eg = uniform_parameter(prefix + ".w_eg", 3 * d, d, glorot_bound(3 * d, d), rng);
  return p;
}

void CoAttentionParams::collect(ad::ParamList& out) const {
  for (const auto& s : steps) s.collect(out);
  out.add(w_eg);
}

ad::Var fuse(const ad::Var& v_tilde, const ad::Var& u_tilde, const ad::Var& q_tilde, const ad::Var& w_eg) {
  const std::array<ad::Var, 3> parts{v_tilde, u_tilde, q_tilde};
  return ad::tanh(ad::matmul(ad::concat_cols(parts), w_eg));
}

ImageProjections project_image(const ad::Var& v, const CoAttentionParams& params) {
  return {ad::matmul(v, params.steps[kImageFirst].w_x), ad::matmul(v, params.steps[kImageSecond].w_x)};
}

EncoderContext sequential_encode(const ad::Var& v, const ImageProjections& v_proj, const ad::Var& u, const ad::Var& q,
                                 const ad::Var& q_init, const CoAttentionParams& params) {
  const ad::Var zero = ad::Var::constant(ad::Tensor::matrix(1, v.value().cols()));
  const auto img1 = co_atten_projected(v, v_proj.first, q_init, zero, {}, params.steps[kImageFirst]);
  const auto hist = co_atten(u, img1.attended, q_init, {}, params.steps[kHistory]);
  const auto ques = co_atten(q, hist.attended, img1.attended, {}, params.steps[kQuestion]);
  const auto img2 = co_atten_projected(v, v_proj.second, ques.attended, hist.attended, {}, params.steps[kImageSecond]);
  EncoderContext ctx;
  ctx.v_tilde = img2.attended;
  ctx.u_tilde = hist.attended;
  ctx.q_tilde = ques.attended;
  ctx.fused = fuse(ctx.v_tilde, ctx.u_tilde, ctx.q_tilde, params.w_eg);
  ctx.alphas = {img1.weights.value(), hist.weights.value(), ques.weights.value(), img2.weights.value()};
  return ctx;
}

EncoderContext sequential_encode(const ad::Var& v, const ad::Var& u, const ad::Var& q, const ad::Var& q_init,
                                 const CoAttentionParams& params) {
  return sequential_encode(v, project_image(v, params), u, q, q_init, params);
}

}  // namespace cgan::model
