#pragma once

#include <functional>
#include <span>

#include "cgan/autodiff/graph.hpp"

namespace cgan::ad {

/// Compares reverse-mode gradients of `loss_fn` at the current values of
/// `params` against central differences with the given step. Returns the
/// maximum over coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// `loss_fn` must build a scalar from the parameters each time it is called;
/// parameter values are restored before returning.
double grad_check(const std::function<Var()>& loss_fn, std::span<Var> params, double step = 1e-5);

}  // namespace cgan::ad
