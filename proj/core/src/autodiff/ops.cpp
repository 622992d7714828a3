#include "cgan/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"

namespace cgan::ad {

namespace {

void require_finite(std::string_view op, const Var& v) {
  if (!v.valid()) throw std::invalid_argument(std::string(op) + ": null operand");
  if (!v.value().all_finite()) {
    throw NonFiniteError(std::string(op) + ": non-finite input of shape " + shape_str(v.shape()));
  }
}

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

Node& in(const Node& out, std::size_t i) { return *out.inputs[i]; }

void accumulate(Node& target, std::span<const double> delta) {
  if (!target.requires_grad) return;
  auto& g = target.grad_buffer();
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_finite("matmul", a);
  require_finite("matmul", b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) shape_mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::matrix(m, n);
  kernels::gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return make_result("matmul", std::move(out), {a, b}, [m, k, n] {
    return [m, k, n](const Node& o) {
      Node& na = in(o, 0);
      Node& nb = in(o, 1);
      if (na.requires_grad) kernels::gemm_nt(o.grad.data(), nb.value.data().data(), na.grad_buffer().data(), m, n, k);
      if (nb.requires_grad) kernels::gemm_tn(na.value.data().data(), o.grad.data(), nb.grad_buffer().data(), m, k, n);
    };
  });
}

Var add(const Var& a, const Var& b) {
  require_finite("add", a);
  require_finite("add", b);
  if (a.shape() != b.shape()) shape_mismatch("add", a.shape(), b.shape());
  Tensor out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return make_result("add", std::move(out), {a, b}, [] {
    return [](const Node& o) {
      accumulate(in(o, 0), o.grad);
      accumulate(in(o, 1), o.grad);
    };
  });
}

Var sub(const Var& a, const Var& b) {
  require_finite("sub", a);
  require_finite("sub", b);
  if (a.shape() != b.shape()) shape_mismatch("sub", a.shape(), b.shape());
  Tensor out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return make_result("sub", std::move(out), {a, b}, [] {
    return [](const Node& o) {
      accumulate(in(o, 0), o.grad);
      Node& nb = in(o, 1);
      if (nb.requires_grad) {
        auto& g = nb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
      }
    };
  });
}

Var mul(const Var& a, const Var& b) {
  require_finite("mul", a);
  require_finite("mul", b);
  if (a.shape() != b.shape()) shape_mismatch("mul", a.shape(), b.shape());
  Tensor out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return make_result("mul", std::move(out), {a, b}, [] {
    return [](const Node& o) {
      Node& na = in(o, 0);
      Node& nb = in(o, 1);
      if (na.requires_grad) {
        auto& g = na.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * nb.value[i];
      }
      if (nb.requires_grad) {
        auto& g = nb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * na.value[i];
      }
    };
  });
}

Var add_row(const Var& a, const Var& row) {
  require_finite("add_row", a);
  require_finite("add_row", row);
  const std::size_t n = a.value().cols();
  if (row.value().size() != n) shape_mismatch("add_row", a.shape(), row.shape());
  Tensor out = a.value();
  const std::size_t m = out.rows();
  const auto rd = row.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) od[i * n + j] += rd[j];
  return make_result("add_row", std::move(out), {a, row}, [m, n] {
    return [m, n](const Node& o) {
      accumulate(in(o, 0), o.grad);
      Node& nr = in(o, 1);
      if (nr.requires_grad) {
        auto& g = nr.grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) g[j] += o.grad[i * n + j];
      }
    };
  });
}

Var scale(const Var& a, double factor) {
  require_finite("scale", a);
  if (!std::isfinite(factor)) throw NonFiniteError("scale: non-finite factor");
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return make_result("scale", std::move(out), {a}, [factor] {
    return [factor](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
    };
  });
}

Var tanh(const Var& a) {
  require_finite("tanh", a);
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return make_result("tanh", std::move(out), {a}, [] {
    return [](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = o.value[i];
        g[i] += o.grad[i] * (1.0 - y * y);
      }
    };
  });
}

Var sigmoid(const Var& a) {
  require_finite("sigmoid", a);
  Tensor out = a.value();
  for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
  return make_result("sigmoid", std::move(out), {a}, [] {
    return [](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = o.value[i];
        g[i] += o.grad[i] * y * (1.0 - y);
      }
    };
  });
}

Var softmax(const Var& a) {
  require_finite("softmax", a);
  Tensor out = a.value();
  const std::size_t m = out.rows(), n = out.cols();
  if (n == 0) throw ShapeError("softmax: empty last axis in shape " + shape_str(a.shape()));
  auto od = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = od.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  return make_result("softmax", std::move(out), {a}, [m, n] {
    return [m, n](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = o.value.data().data() + i * n;
        const double* gy = o.grad.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (gy[j] - dot);
      }
    };
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_finite("concat_cols", p);
    if (p.value().rows() != m) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out = Tensor::matrix(m, total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pd = parts[k].value().data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pd.data() + i * widths[k], widths[k], out.data().data() + i * total + offset);
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result("concat_cols", std::move(out), std::move(inputs), [m, total, widths] {
    return [m, total, widths](const Node& o) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        Node& np = in(o, k);
        if (np.requires_grad) {
          auto& g = np.grad_buffer();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += o.grad[i * total + off + j];
        }
        off += widths[k];
      }
    };
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t n = parts[0].value().cols();
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_finite("concat_rows", p);
    if (p.value().cols() != n) shape_mismatch("concat_rows", parts[0].shape(), p.shape());
    sizes.push_back(p.value().size());
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * n);
  for (const auto& p : parts) data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result("concat_rows", Tensor(Shape{rows, n}, std::move(data)), std::move(inputs), [sizes] {
    return [sizes](const Node& o) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        accumulate(in(o, k), std::span<const double>(o.grad).subspan(off, sizes[k]));
        off += sizes[k];
      }
    };
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require_finite("slice_cols", a);
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (begin > end || end > n) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for shape " + shape_str(a.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out = Tensor::matrix(m, w);
  const auto ad = a.value().data();
  for (std::size_t i = 0; i < m; ++i) std::copy_n(ad.data() + i * n + begin, w, out.data().data() + i * w);
  return make_result("slice_cols", std::move(out), {a}, [m, n, w, begin] {
    return [m, n, w, begin](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += o.grad[i * w + j];
    };
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  require_finite("gather_rows", table);
  const std::size_t rows = table.value().rows(), n = table.value().cols();
  Tensor out = Tensor::matrix(ids.size(), n);
  const auto td = table.value().data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " out of range for table " +
                       shape_str(table.shape()));
    }
    std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * n, n, out.data().data() + i * n);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_result("gather_rows", std::move(out), {table}, [n, idx] {
    return [n, idx](const Node& o) {
      Node& nt = in(o, 0);
      if (!nt.requires_grad) return;
      auto& g = nt.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) g[static_cast<std::size_t>(idx[i]) * n + j] += o.grad[i * n + j];
    };
  });
}

Var masked_fill(const Var& a, std::span<const std::uint8_t> mask, double fill) {
  require_finite("masked_fill", a);
  if (!std::isfinite(fill)) throw NonFiniteError("masked_fill: non-finite fill value");
  if (mask.size() != a.value().size()) {
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) + " entries for shape " +
                     shape_str(a.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out[i] = fill;
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return make_result("masked_fill", std::move(out), {a}, [m] {
    return [m](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!m[i]) g[i] += o.grad[i];
    };
  });
}

Var select_rows(std::span<const std::uint8_t> keep, const Var& a, const Var& b) {
  require_finite("select_rows", a);
  require_finite("select_rows", b);
  if (a.shape() != b.shape()) shape_mismatch("select_rows", a.shape(), b.shape());
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (keep.size() != m) {
    throw ShapeError("select_rows: " + std::to_string(keep.size()) + " flags for shape " + shape_str(a.shape()));
  }
  Tensor out = b.value();
  for (std::size_t i = 0; i < m; ++i)
    if (keep[i]) std::copy_n(a.value().data().data() + i * n, n, out.data().data() + i * n);
  std::vector<std::uint8_t> k(keep.begin(), keep.end());
  return make_result("select_rows", std::move(out), {a, b}, [k, n] {
    return [k, n](const Node& o) {
      Node& na = in(o, 0);
      Node& nb = in(o, 1);
      for (std::size_t i = 0; i < k.size(); ++i) {
        Node& target = k[i] ? na : nb;
        if (!target.requires_grad) continue;
        auto& g = target.grad_buffer();
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[i * n + j];
      }
    };
  });
}

Var transpose(const Var& a) {
  require_finite("transpose", a);
  if (a.value().rank() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_str(a.shape()));
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.value().at(i, j);
  return make_result("transpose", std::move(out), {a}, [m, n] {
    return [m, n](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j * m + i];
    };
  });
}

Var sum(const Var& a) {
  require_finite("sum", a);
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make_result("sum", Tensor::scalar(total), {a}, [] {
    return [](const Node& o) {
      Node& na = in(o, 0);
      if (!na.requires_grad) return;
      auto& g = na.grad_buffer();
      for (double& v : g) v += o.grad[0];
    };
  });
}

Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights) {
  require_finite("cross_entropy", logits);
  const std::size_t m = logits.value().rows(), n = logits.value().cols();
  if (targets.size() != m || weights.size() != m) {
    throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) + " with " +
                     std::to_string(targets.size()) + " targets and " + std::to_string(weights.size()) +
                     " weights");
  }
  // Row-wise softmax is kept for the backward pass.
  std::vector<double> probs(logits.value().data().begin(), logits.value().data().end());
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= n) {
      throw ShapeError("cross_entropy: target " + std::to_string(targets[i]) + " out of range for logits " +
                       shape_str(logits.shape()));
    }
    if (!std::isfinite(weights[i])) throw NonFiniteError("cross_entropy: non-finite weight");
    double* row = probs.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    const double logz = mx + std::log(total);
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
    if (weights[i] != 0.0) loss += weights[i] * (logz - logits.value().at(i, static_cast<std::size_t>(targets[i])));
  }
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_result("cross_entropy", Tensor::scalar(loss), {logits},
                     [m, n, t = std::move(t), w = std::move(w), p = std::move(probs)]() mutable {
                       return [m, n, t = std::move(t), w = std::move(w), p = std::move(p)](const Node& o) {
                         Node& nl = in(o, 0);
                         if (!nl.requires_grad) return;
                         auto& g = nl.grad_buffer();
                         const double go = o.grad[0];
                         for (std::size_t i = 0; i < m; ++i) {
                           if (w[i] == 0.0) continue;
                           const double s = go * w[i];
                           for (std::size_t j = 0; j < n; ++j) g[i * n + j] += s * p[i * n + j];
                           g[i * n + static_cast<std::size_t>(t[i])] -= s;
                         }
                       };
                     });
}

Var mse(const Var& a, const Var& b) {
  require_finite("mse", a);
  require_finite("mse", b);
  if (a.shape() != b.shape()) shape_mismatch("mse", a.shape(), b.shape());
  const std::size_t count = a.value().size();
  if (count == 0) throw ShapeError("mse: empty operands");
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = a.value()[i] - b.value()[i];
    total += d * d;
  }
  return make_result("mse", Tensor::scalar(total / static_cast<double>(count)), {a, b}, [count] {
    return [count](const Node& o) {
      Node& na = in(o, 0);
      Node& nb = in(o, 1);
      const double s = 2.0 * o.grad[0] / static_cast<double>(count);
      if (na.requires_grad) {
        auto& g = na.grad_buffer();
        for (std::size_t i = 0; i < count; ++i) g[i] += s * (na.value[i] - nb.value[i]);
      }
      if (nb.requires_grad) {
        auto& g = nb.grad_buffer();
        for (std::size_t i = 0; i < count; ++i) g[i] -= s * (na.value[i] - nb.value[i]);
      }
    };
  });
}

}  // namespace cgan::ad
