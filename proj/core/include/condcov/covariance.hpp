#pragma once

#include <span>

#include "condcov/dataset.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov {

/// rho_jk = S_jk / sqrt(S_jj S_kk). Rounding overshoot beyond +-1 of at most
/// 1e-12 is clamped; larger excursions (non-PSD input) are kept as computed.
/// Throws NonPositiveDiagonal when some S_jj <= diagonal_floor.
SymMatrix cov_to_corr(const SymMatrix& cov, double diagonal_floor = 0.0);

double euclidean_dist(std::span<const double> a, std::span<const double> b);

/// Mean-centred sample covariance with divisor k - 1.
SymMatrix sample_cov(const Matrix& rows);

/// Same as sample_cov over the selected rows of `data` (repeats allowed).
SymMatrix sample_cov(const Matrix& data, std::span<const std::size_t> rows);

/// D * S * D with D = diag(scales); maps standardized-scale covariances back
/// to the units of the raw outputs.
SymMatrix rescale(const SymMatrix& cov, const Vector& scales);

inline std::span<const double> row_span(const Matrix& m, std::size_t i) {
  return {m.data() + i * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

}  // namespace condcov
