#include "cgan/model/init.hpp"

#include <cmath>

namespace cgan::model {

ad::Var uniform_parameter(std::string name, std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  ad::Tensor t = ad::Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return ad::Var::parameter(std::move(t), std::move(name));
}

ad::Var zero_parameter(std::string name, std::size_t rows, std::size_t cols) {
  return ad::Var::parameter(ad::Tensor::matrix(rows, cols), std::move(name));
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace cgan::model
