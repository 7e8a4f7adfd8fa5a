#include "condcov/sym_matrix.hpp"

#include <algorithm>
#include <limits>

#include "condcov/error.hpp"

namespace condcov {

SymMatrix::SymMatrix(std::size_t dim, double fill)
    : dim_(dim), packed_(packed_size(dim), fill) {
  if (dim == 0) fail(ErrorCode::InvalidArgument, "SymMatrix dimension must be positive");
}

SymMatrix SymMatrix::from_upper(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols() || dense.rows() == 0) {
    fail(ErrorCode::DimensionMismatch, "SymMatrix::from_upper needs a non-empty square matrix");
  }
  const auto p = static_cast<std::size_t>(dense.rows());
  SymMatrix out(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) {
      out(j, k) = dense(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix out(dim);
  for (std::size_t j = 0; j < dim; ++j) out(j, j) = 1.0;
  return out;
}

Eigen::MatrixXd SymMatrix::dense() const {
  const auto p = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j; k < p; ++k) {
      const double v = (*this)(static_cast<std::size_t>(j), static_cast<std::size_t>(k));
      out(j, k) = v;
      out(k, j) = v;
    }
  }
  return out;
}

double SymMatrix::max_diagonal() const noexcept {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dim_; ++j) best = std::max(best, (*this)(j, j));
  return best;
}

double SymMatrix::min_eigenvalue() const {
  if (dim_ == 1) return packed_[0];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool SymMatrix::is_psd(double tol) const {
  const double scale = std::max(max_diagonal(), 0.0);
  return min_eigenvalue() >= -tol * scale;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.dim_ != dim_) fail(ErrorCode::DimensionMismatch, "SymMatrix += with different dimensions");
  for (std::size_t i = 0; i < packed_.size(); ++i) packed_[i] += other.packed_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double scale) noexcept {
  for (double& v : packed_) v *= scale;
  return *this;
}

}  // namespace condcov
