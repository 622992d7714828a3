#include "cgan/autodiff/graph.hpp"

#include <algorithm>

namespace cgan::ad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Tensor value, std::string name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->is_parameter = true;
  node->name = std::move(name);
  return Var(std::move(node));
}

Tensor Var::grad() const {
  if (node_->grad.empty()) return Tensor(node_->value.shape(), 0.0);
  return Tensor(node_->value.shape(), node_->grad);
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

void backward(Tape& tape, const Var& loss) {
  if (!loss.valid() || loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.valid() ? shape_str(loss.shape()) : std::string("<null>")));
  }
  const auto& ops = tape.ops();
  if (loss.requires_grad() &&
      std::find(ops.begin(), ops.end(), loss.node()) == ops.end() && !loss.node()->is_parameter) {
    throw std::invalid_argument("backward: loss was not recorded on this tape");
  }
  // Every requires-grad input seen on the tape holds a (possibly zero) gradient.
  for (const auto& node : ops) {
    for (const auto& in : node->inputs) {
      if (in->requires_grad) in->grad_buffer();
    }
  }
  if (!loss.requires_grad()) return;
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    Node& node = **it;
    if (node.grad.empty() || !node.backward) continue;
    node.backward(node);
  }
}

Var make_result(std::string_view op, Tensor value, std::vector<Var> inputs,
                const std::function<BackwardFn()>& make_backward) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  Tape* tape = g_active_tape;
  const bool track = tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                                    [](const Var& v) { return v.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = make_backward();
    tape->record(node);
  }
  return Var(std::move(node));
}

}  // namespace cgan::ad
