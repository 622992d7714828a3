#include "cgan/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cgan::ad {

namespace {

double eval_value(const std::function<Var()>& loss_fn) {
  NoGradScope no_grad;
  const double v = loss_fn().value().item();
  if (!std::isfinite(v)) throw NonFiniteError("grad_check: loss is non-finite at a perturbed point");
  return v;
}

}  // namespace

double grad_check(const std::function<Var()>& loss_fn, std::span<Var> params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Var loss = loss_fn();
    if (!std::isfinite(loss.value().item())) throw NonFiniteError("grad_check: loss is non-finite");
    backward(tape, loss);
  }
  double worst = 0.0;
  for (auto& p : params) {
    const Tensor analytic = p.grad();
    auto values = p.mutable_value().data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = eval_value(loss_fn);
      values[i] = saved - step;
      const double minus = eval_value(loss_fn);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  for (auto& p : params) p.zero_grad();
  return worst;
}

}  // namespace cgan::ad
