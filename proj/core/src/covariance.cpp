#include "condcov/covariance.hpp"

#include <cmath>

#include "condcov/error.hpp"

namespace condcov {

SymMatrix cov_to_corr(const SymMatrix& cov, double diagonal_floor) {
  const std::size_t p = cov.dim();
  std::vector<double> inv_sd(p);
  for (std::size_t j = 0; j < p; ++j) {
    const double v = cov(j, j);
    if (!(v > diagonal_floor)) {
      fail(ErrorCode::NonPositiveDiagonal,
           "variance " + std::to_string(j) + " is not positive (" + std::to_string(v) + ")");
    }
    inv_sd[j] = 1.0 / std::sqrt(v);
  }
  SymMatrix corr(p);
  for (std::size_t j = 0; j < p; ++j) {
    corr(j, j) = 1.0;
    for (std::size_t k = j + 1; k < p; ++k) {
      double r = cov(j, k) * inv_sd[j] * inv_sd[k];
      if (std::abs(r) > 1.0 && std::abs(r) - 1.0 <= 1e-12) r = std::copysign(1.0, r);
      corr(j, k) = r;
    }
  }
  return corr;
}

double euclidean_dist(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "euclidean_dist: lengths differ");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

SymMatrix sample_cov(const Matrix& data, std::span<const std::size_t> rows) {
  const std::size_t k = rows.size();
  if (k < 2) fail(ErrorCode::TooFewRows, "sample covariance needs at least 2 rows");
  const auto p = static_cast<std::size_t>(data.cols());
  std::vector<double> mean(p, 0.0);
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < p; ++j) mean[j] += data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
  }
  for (double& m : mean) m /= static_cast<double>(k);

  SymMatrix out(p);
  std::vector<double> centred(p);
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < p; ++j) {
      centred[j] = data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - mean[j];
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t l = j; l < p; ++l) out(j, l) += centred[j] * centred[l];
    }
  }
  out *= 1.0 / static_cast<double>(k - 1);
  return out;
}

SymMatrix sample_cov(const Matrix& rows) {
  std::vector<std::size_t> all(static_cast<std::size_t>(rows.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return sample_cov(rows, all);
}

SymMatrix rescale(const SymMatrix& cov, const Vector& scales) {
  if (static_cast<std::size_t>(scales.size()) != cov.dim()) {
    fail(ErrorCode::DimensionMismatch, "rescale: scale vector length differs from matrix dimension");
  }
  SymMatrix out = cov;
  for (std::size_t j = 0; j < cov.dim(); ++j) {
    for (std::size_t k = j; k < cov.dim(); ++k) {
      out(j, k) *= scales(static_cast<Eigen::Index>(j)) * scales(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

}  // namespace condcov
