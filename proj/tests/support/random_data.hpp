#pragma once

#include <cstdint>
#include <random>

#include "condcov/dataset.hpp"

namespace testing_support {

inline condcov::Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  condcov::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = nd(gen);
  return m;
}

inline std::size_t uniform_int(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

inline double uniform_real(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

// Outputs depend smoothly on the covariates plus heteroscedastic noise.
inline condcov::Dataset random_dataset(std::mt19937_64& gen, std::size_t n, std::size_t p, std::size_t q) {
  condcov::Matrix z = random_matrix(gen, n, q, 2.0);
  condcov::Matrix x = random_matrix(gen, n, p);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s = 1.0 + 0.5 * std::tanh(z(i, 0));
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = s * x(i, j) + 0.3 * z(i, j % z.cols());
  }
  return condcov::Dataset(std::move(z), std::move(x));
}

}  // namespace testing_support
