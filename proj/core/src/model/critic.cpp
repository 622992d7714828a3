#include "cgan/model/critic.hpp"

#include <stdexcept>

#include "cgan/autodiff/ops.hpp"

namespace cgan::model {

Critic::Critic(const EncoderDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  encoder_ = ContextEncoder("critic", dims, rng);
  head_w_ = zero_parameter("critic.head_w", dims.d, 1);
  head_b_ = zero_parameter("critic.head_b", 1, 1);
}

ad::ParamList Critic::params() const {
  ad::ParamList list;
  encoder_.collect(list);
  list.add(head_w_);
  list.add(head_b_);
  return list;
}

ad::Var Critic::baseline(std::span<const EncoderContext> contexts) const {
  if (contexts.empty()) throw std::invalid_argument("critic: no contexts");
  std::vector<ad::Var> rows;
  rows.reserve(contexts.size());
  for (const auto& c : contexts) rows.push_back(c.fused);
  const ad::Var f = rows.size() == 1 ? rows[0] : ad::concat_rows(rows);
  return ad::add_row(ad::matmul(f, head_w_), head_b_);
}

}  // namespace cgan::model
