#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "cgan/autodiff/graph.hpp"

namespace cgan::model {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output, so
/// the stream is identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Parameter with entries uniform in [-bound, bound].
ad::Var uniform_parameter(std::string name, std::size_t rows, std::size_t cols, double bound, Rng& rng);
ad::Var zero_parameter(std::string name, std::size_t rows, std::size_t cols);

/// Glorot-style bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

}  // namespace cgan::model
