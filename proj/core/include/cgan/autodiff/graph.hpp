#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgan/autodiff/tensor.hpp"

namespace cgan::ad {

struct Node;

/// Propagates the gradient held by `out` into the gradients of its inputs.
using BackwardFn = std::function<void(const Node& out)>;

struct Node {
  Tensor value;
  std::vector<double> grad;  // empty means "zero"
  bool requires_grad = false;
  bool is_parameter = false;
  std::string_view op = "leaf";
  std::string name;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  /// Gradient buffer, allocated as zeros on first use.
  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Handle to a value in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  /// A leaf that participates in gradients and owns a persistent grad buffer.
  static Var parameter(Tensor value, std::string name);

  [[nodiscard]] bool valid() const { return node_ != nullptr; }
  [[nodiscard]] const Tensor& value() const { return node_->value; }
  /// Mutable access for optimizers and checkpoint loading.
  [[nodiscard]] Tensor& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  [[nodiscard]] const std::string& name() const { return node_->name; }
  [[nodiscard]] std::string_view op() const { return node_->op; }

  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient as a tensor of the value's shape (zeros when none is held).
  [[nodiscard]] Tensor grad() const;
  [[nodiscard]] std::span<const double> grad_span() const { return node_->grad; }
  /// Drops the gradient buffer.
  void zero_grad() { node_->grad.clear(); }

  [[nodiscard]] const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of executed ops. Ops are appended in execution order, so the
/// record is topologically sorted by construction.
class Tape {
 public:
  void record(std::shared_ptr<Node> node) { ops_.push_back(std::move(node)); }
  [[nodiscard]] std::size_t size() const { return ops_.size(); }
  [[nodiscard]] bool empty() const { return ops_.empty(); }
  [[nodiscard]] const std::vector<std::shared_ptr<Node>>& ops() const { return ops_; }
  void clear() { ops_.clear(); }

 private:
  std::vector<std::shared_ptr<Node>> ops_;
};

/// The tape ops record onto for the current thread, or nullptr.
Tape* active_tape();

/// Makes `tape` the active tape for this thread for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording for the lifetime of the scope.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

/// Reverse pass: accumulates d(loss)/d(x) into every requires-grad input
/// reachable on `tape`. Inputs recorded on the tape but off the loss path end
/// with a zero gradient.
void backward(Tape& tape, const Var& loss);

/// Builds an output node; records it on the active tape when any input
/// requires gradients. `make_backward` is only invoked when recording.
Var make_result(std::string_view op, Tensor value, std::vector<Var> inputs,
                const std::function<BackwardFn()>& make_backward);

}  // namespace cgan::ad
