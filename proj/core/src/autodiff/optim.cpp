#include "cgan/autodiff/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cgan::ad {

void ParamList::add(const Var& param) {
  if (!param.valid() || !param.node()->is_parameter) throw std::invalid_argument("ParamList: not a parameter");
  if (find(param.name()) != nullptr) throw std::invalid_argument("ParamList: duplicate name " + param.name());
  params_.push_back(param);
}

void ParamList::append(const ParamList& other) {
  for (const auto& p : other.params_) add(p);
}

const Var* ParamList::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name() == name) return &p;
  return nullptr;
}

std::size_t ParamList::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value().size();
  return n;
}

void ParamList::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool ParamList::grads_all_zero() const {
  for (const auto& p : params_)
    for (double g : p.grad_span())
      if (g != 0.0) return false;
  return true;
}

double ParamList::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_)
    for (double g : p.grad_span()) sq += g * g;
  return std::sqrt(sq);
}

void adam_step(ParamList& params, AdamState& state) {
  for (const auto& p : params) {
    if (!p.has_grad()) throw std::invalid_argument("adam_step: parameter '" + p.name() + "' has no gradient");
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.value().size(), 0.0);
      state.second_moment.emplace_back(p.value().size(), 0.0);
    }
  }
  double factor = 1.0;
  if (state.clip_norm > 0.0) {
    const double norm = params.grad_norm();
    if (norm > state.clip_norm) factor = state.clip_norm / norm;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Var& p = params.params()[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.value().size()) throw std::logic_error("adam_step: moment shape drift for " + p.name());
    const auto g = p.grad_span();
    auto w = p.mutable_value().data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * factor;
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace cgan::ad
