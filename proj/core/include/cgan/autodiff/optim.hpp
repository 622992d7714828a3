#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgan/autodiff/graph.hpp"

namespace cgan::ad {

/// Named, ordered collection of parameters. The order is the checkpoint order.
class ParamList {
 public:
  void add(const Var& param);
  void append(const ParamList& other);

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] const std::vector<Var>& params() const { return params_; }
  [[nodiscard]] std::vector<Var>& params() { return params_; }
  [[nodiscard]] const Var* find(const std::string& name) const;
  [[nodiscard]] std::size_t num_values() const;

  void zero_grad();
  /// True when no parameter holds a nonzero gradient entry.
  [[nodiscard]] bool grads_all_zero() const;
  [[nodiscard]] double grad_norm() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Var> params_;
};

/// Adam moments plus hyperparameters. Gradients are rescaled to a global
/// norm of at most `clip_norm` (0 disables) inside every step.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One Adam update on `params`. Reads gradients without modifying them.
/// Throws if any parameter has no gradient buffer.
void adam_step(ParamList& params, AdamState& state);

}  // namespace cgan::ad
