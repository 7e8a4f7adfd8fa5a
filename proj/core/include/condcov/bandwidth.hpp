#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "condcov/dataset.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov {

enum class LossKind { Frobenius, Trace };

enum class CombineRule {
  FrobeniusOnly,
  TraceOnly,
  GeomMeanOfMinimizers,     // sqrt(h_frobenius * h_trace)
  MinimizerOfGeomMeanLoss,  // argmin_h sqrt(L_frobenius(h) * L_trace(h))
};

std::string_view to_string(CombineRule rule) noexcept;
/// Accepts the enumerator names (e.g. "GeomMeanOfMinimizers").
CombineRule parse_combine_rule(std::string_view name);

struct BandwidthSearch {
  /// Increasing positive candidates; empty means default_bandwidth_grid().
  std::vector<double> grid;
  std::size_t folds = 5;
  CombineRule combine = CombineRule::GeomMeanOfMinimizers;
  double pseudoinverse_tol = 1e-8;
  /// Bandwidth of the conditional-mean stage that produces the residuals.
  /// When unset it is chosen by K-fold CV of the mean's squared error over
  /// the same grid.
  std::optional<double> mean_bandwidth;
  bool standardize_covariates = false;
};

struct CandidateLoss {
  double bandwidth = 0.0;
  double frobenius = 0.0;
  double trace = 0.0;
  double geometric_mean = 0.0;
};

struct BandwidthSelection {
  double bandwidth = 0.0;
  double frobenius_minimizer = 0.0;
  double trace_minimizer = 0.0;
  double mean_bandwidth = 0.0;
  CombineRule rule = CombineRule::GeomMeanOfMinimizers;
  std::vector<CandidateLoss> table;
};

/// ||y y^T - S||_F^2
double frobenius_point_loss(std::span<const double> y, const SymMatrix& estimate);
/// tr(S^+ y y^T) = y^T S^+ y, singular values below tol * largest dropped.
double trace_point_loss(std::span<const double> y, const SymMatrix& estimate, double pinv_tol);

/// Contiguous [begin, end) row blocks, in row (time) order.
std::vector<std::pair<std::size_t, std::size_t>> fold_blocks(std::size_t n, std::size_t folds);

struct CvLosses {
  std::vector<double> frobenius;
  std::vector<double> trace;
};

/// Blocked K-fold losses for every candidate bandwidth. For each held-out
/// row the covariance estimate uses only rows outside its fold; a held-out
/// row whose weight sum underflows makes that candidate's loss +inf.
/// `fold_order` permutes the order in which folds are visited (identity
/// when empty); the result does not depend on it.
CvLosses cv_losses(const Matrix& covariates, const Matrix& residuals, std::span<const double> grid,
                   std::size_t folds, double pinv_tol,
                   std::span<const std::size_t> fold_order = {});

double cv_loss(const Matrix& covariates, const Matrix& residuals, double h, std::size_t folds,
               LossKind kind, double pinv_tol);

/// Blocked K-fold squared prediction error of the conditional mean.
std::vector<double> cv_mean_losses(const Matrix& covariates, const Matrix& outputs,
                                   std::span<const double> grid, std::size_t folds);

/// Median Euclidean distance over all pairs of (at most max_rows evenly
/// strided) covariate rows.
double median_pairwise_distance(const Matrix& covariates, std::size_t max_rows = 2000);

/// `count` log-spaced points spanning [0.05, 2] x the median pairwise distance.
std::vector<double> default_bandwidth_grid(const Matrix& covariates, std::size_t count = 25);

/// Applies a combination rule to a loss table. Ties go to the smaller h.
/// Throws AllCandidatesInfeasible when the losses the rule needs are all +inf.
BandwidthSelection combine_losses(std::span<const double> grid, std::span<const double> frobenius,
                                  std::span<const double> trace, CombineRule rule);

/// Conditional-mean bandwidth: search.mean_bandwidth when set, otherwise the
/// minimizer of cv_mean_losses over the (possibly default) grid.
double select_mean_bandwidth(const Dataset& data, const BandwidthSearch& search);

BandwidthSelection select_bandwidth(const Dataset& data, const BandwidthSearch& search);

}  // namespace condcov
