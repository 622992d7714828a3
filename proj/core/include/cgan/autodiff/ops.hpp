#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgan/autodiff/graph.hpp"

namespace cgan::ad {

/// Score used for masked entries before a softmax. Finite, and exp() of it
/// underflows to exactly zero.
inline constexpr double kMaskedScore = -1e30;

// Shape rules: every operand is viewed as a rows() x cols() matrix.

/// [m x k] * [k x n] -> [m x n]
Var matmul(const Var& a, const Var& b);
/// Elementwise; identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise (Hadamard) product; identical shapes.
Var mul(const Var& a, const Var& b);
/// [m x n] + row vector of n values, broadcast over rows.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double factor);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
/// Softmax over the last axis, independently per row.
Var softmax(const Var& a);
/// Concatenation along the last axis; all parts have the same row count.
Var concat_cols(std::span<const Var> parts);
/// Concatenation along rows; all parts have the same column count.
Var concat_rows(std::span<const Var> parts);
/// Columns [begin, end) of every row.
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
/// Row lookup: output row i is table row ids[i].
Var gather_rows(const Var& table, std::span<const int> ids);
/// Entries where mask != 0 are replaced by `fill`; they receive no gradient.
/// The mask has one entry per element.
Var masked_fill(const Var& a, std::span<const std::uint8_t> mask, double fill);
/// Row i is a's row i where keep[i] != 0, otherwise b's row i. Gradients
/// follow the selected operand, so unselected rows receive exactly zero.
Var select_rows(std::span<const std::uint8_t> keep, const Var& a, const Var& b);
/// [m x n] -> [n x m]
Var transpose(const Var& a);
/// Sum of all entries -> scalar.
Var sum(const Var& a);
/// Weighted token cross-entropy on logits: sum_i w_i * -log softmax(z_i)[t_i].
/// Callers normalize through the weights; the model losses use w_i = 1/count
/// on unmasked rows, i.e. the mean over unmasked tokens.
Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights);
/// Mean squared error over all elements: mean((a - b)^2).
Var mse(const Var& a, const Var& b);

}  // namespace cgan::ad
