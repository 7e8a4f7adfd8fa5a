#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace condcov {

/// Dense symmetric p x p matrix. Only the upper triangle (with diagonal) is
/// stored, so (j, k) and (k, j) always refer to the same value.
class SymMatrix {
 public:
  static constexpr double kPsdTolerance = 1e-10;

  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim, double fill = 0.0);

  /// Symmetrizes by reading the upper triangle of `dense` only.
  static SymMatrix from_upper(const Eigen::MatrixXd& dense);
  static SymMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }

  double operator()(std::size_t j, std::size_t k) const noexcept {
    return packed_[index(j, k)];
  }
  double& operator()(std::size_t j, std::size_t k) noexcept {
    return packed_[index(j, k)];
  }

  /// Row-major upper triangle including the diagonal: (0,0), (0,1), ..., (p-1,p-1).
  std::span<const double> packed() const noexcept { return packed_; }
  std::span<double> packed() noexcept { return packed_; }

  Eigen::MatrixXd dense() const;

  double max_diagonal() const noexcept;
  double min_eigenvalue() const;

  /// Smallest eigenvalue >= -tol * max(diagonal). The tolerance is relative
  /// because outer-product sums drift slightly negative in floating point.
  bool is_psd(double tol = kPsdTolerance) const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator*=(double scale) noexcept;

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t index(std::size_t j, std::size_t k) const noexcept {
    if (j > k) std::swap(j, k);
    return j * dim_ - j * (j + 1) / 2 + k;
  }

  std::size_t dim_ = 0;
  std::vector<double> packed_;
};

inline std::size_t packed_size(std::size_t dim) noexcept {
  return dim * (dim + 1) / 2;
}

}  // namespace condcov
