#include "condcov/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/kernel.hpp"
#include "condcov/parallel.hpp"

namespace condcov {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) fail(ErrorCode::InvalidArgument, "bandwidth grid is empty");
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (!(grid[c] > 0.0) || !std::isfinite(grid[c])) {
      fail(ErrorCode::InvalidArgument, "bandwidth candidates must be positive and finite");
    }
    if (c > 0 && !(grid[c] > grid[c - 1])) {
      fail(ErrorCode::InvalidArgument, "bandwidth grid must be strictly increasing");
    }
  }
}

void validate_folds(std::size_t n, std::size_t folds) {
  if (folds < 2 || folds > n) fail(ErrorCode::InvalidArgument, "fold count must lie in [2, n]");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

struct KernelFactors {
  double exponent;  // 1 / (2 h^2)
  double norm;      // 1 / (h sqrt(2 pi))
};

std::vector<KernelFactors> kernel_factors(std::span<const double> grid) {
  std::vector<KernelFactors> out;
  out.reserve(grid.size());
  for (double h : grid) out.push_back({0.5 / (h * h), 1.0 / (h * std::sqrt(2.0 * std::numbers::pi))});
  return out;
}

std::vector<std::size_t> fold_of_rows(std::size_t n, std::size_t folds) {
  std::vector<std::size_t> fold(n);
  const auto blocks = fold_blocks(n, folds);
  for (std::size_t f = 0; f < blocks.size(); ++f) {
    for (std::size_t i = blocks[f].first; i < blocks[f].second; ++i) fold[i] = f;
  }
  return fold;
}

std::vector<std::size_t> visit_order(std::size_t folds, std::span<const std::size_t> fold_order) {
  std::vector<std::size_t> order(fold_order.begin(), fold_order.end());
  if (order.empty()) {
    order.resize(folds);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t f = 0; f < folds; ++f) {
    if (sorted.size() != folds || sorted[f] != f) {
      fail(ErrorCode::InvalidArgument, "fold order must be a permutation of the folds");
    }
  }
  return order;
}

std::size_t argmin_first(std::span<const double> losses) {
  std::size_t best = losses.size();
  for (std::size_t c = 0; c < losses.size(); ++c) {
    if (!std::isfinite(losses[c])) continue;
    if (best == losses.size() || losses[c] < losses[best]) best = c;
  }
  return best;
}

}  // namespace

std::string_view to_string(CombineRule rule) noexcept {
  switch (rule) {
    case CombineRule::FrobeniusOnly: return "FrobeniusOnly";
    case CombineRule::TraceOnly: return "TraceOnly";
    case CombineRule::GeomMeanOfMinimizers: return "GeomMeanOfMinimizers";
    case CombineRule::MinimizerOfGeomMeanLoss: return "MinimizerOfGeomMeanLoss";
  }
  return "Unknown";
}

CombineRule parse_combine_rule(std::string_view name) {
  for (auto rule : {CombineRule::FrobeniusOnly, CombineRule::TraceOnly, CombineRule::GeomMeanOfMinimizers,
                    CombineRule::MinimizerOfGeomMeanLoss}) {
    if (name == to_string(rule)) return rule;
  }
  fail(ErrorCode::InvalidArgument, "unknown bandwidth combination rule '" + std::string(name) + "'");
}

double frobenius_point_loss(std::span<const double> y, const SymMatrix& estimate) {
  const std::size_t p = estimate.dim();
  if (y.size() != p) fail(ErrorCode::DimensionMismatch, "residual length differs from matrix dimension");
  double s = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const double d = y[j] * y[k] - estimate(j, k);
      s += d * d;
    }
  }
  return s;
}

double trace_point_loss(std::span<const double> y, const SymMatrix& estimate, double pinv_tol) {
  const std::size_t p = estimate.dim();
  if (y.size() != p) fail(ErrorCode::DimensionMismatch, "residual length differs from matrix dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(estimate.dense());
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(p));
  const Eigen::VectorXd proj = solver.eigenvectors().transpose() * yv;
  double s = 0.0;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (std::abs(lambda(k)) > pinv_tol * largest && largest > 0.0) s += proj(k) * proj(k) / lambda(k);
  }
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_blocks(std::size_t n, std::size_t folds) {
  validate_folds(n, folds);
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  blocks.reserve(folds);
  for (std::size_t f = 0; f < folds; ++f) blocks.emplace_back(f * n / folds, (f + 1) * n / folds);
  return blocks;
}

CvLosses cv_losses(const Matrix& covariates, const Matrix& residuals, std::span<const double> grid,
                   std::size_t folds, double pinv_tol, std::span<const std::size_t> fold_order) {
  validate_grid(grid);
  const auto n = static_cast<std::size_t>(covariates.rows());
  const auto p = static_cast<std::size_t>(residuals.cols());
  if (static_cast<std::size_t>(residuals.rows()) != n) {
    fail(ErrorCode::DimensionMismatch, "covariate and residual row counts differ");
  }
  validate_folds(n, folds);
  const auto blocks = fold_blocks(n, folds);
  const auto fold = fold_of_rows(n, folds);
  const auto factors = kernel_factors(grid);
  const std::size_t m = packed_size(p);
  const std::size_t nc = grid.size();

  // Packed outer products y_i y_i^T, row-major by observation.
  std::vector<double> outer(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = row_span(residuals, i);
    std::size_t t = 0;
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) outer[i * m + t++] = y[j] * y[k];
    }
  }

  std::vector<double> frob(n * nc), trace(n * nc);
  auto held_out = [&](std::size_t i) {
    const auto zi = row_span(covariates, i);
    const auto [skip_begin, skip_end] = blocks[fold[i]];
    std::vector<double> weight_sum(nc, 0.0);
    std::vector<double> moment(nc * m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      if (r >= skip_begin && r < skip_end) continue;
      const double d2 = squared_distance(row_span(covariates, r), zi);
      const double* yy = &outer[r * m];
      for (std::size_t c = 0; c < nc; ++c) {
        const double w = std::exp(-d2 * factors[c].exponent) * factors[c].norm;
        if (w == 0.0) continue;
        weight_sum[c] += w;
        double* acc = &moment[c * m];
        for (std::size_t t = 0; t < m; ++t) acc[t] += w * yy[t];
      }
    }
    const auto y = row_span(residuals, i);
    SymMatrix estimate(p);
    for (std::size_t c = 0; c < nc; ++c) {
      if (!(weight_sum[c] > kWeightSumFloor)) {
        frob[i * nc + c] = kInf;
        trace[i * nc + c] = kInf;
        continue;
      }
      auto packed = estimate.packed();
      for (std::size_t t = 0; t < m; ++t) packed[t] = moment[c * m + t] / weight_sum[c];
      frob[i * nc + c] = frobenius_point_loss(y, estimate);
      trace[i * nc + c] = trace_point_loss(y, estimate, pinv_tol);
    }
  };

  for (std::size_t f : visit_order(folds, fold_order)) {
    const auto [begin, end] = blocks[f];
    parallel_for(end - begin, [&](std::size_t k) { held_out(begin + k); }, 16);
  }

  CvLosses out{std::vector<double>(nc, 0.0), std::vector<double>(nc, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < nc; ++c) {
      out.frobenius[c] += frob[i * nc + c];
      out.trace[c] += trace[i * nc + c];
    }
  }
  return out;
}

double cv_loss(const Matrix& covariates, const Matrix& residuals, double h, std::size_t folds,
               LossKind kind, double pinv_tol) {
  const double grid[] = {h};
  const auto losses = cv_losses(covariates, residuals, grid, folds, pinv_tol);
  return kind == LossKind::Frobenius ? losses.frobenius[0] : losses.trace[0];
}

std::vector<double> cv_mean_losses(const Matrix& covariates, const Matrix& outputs,
                                   std::span<const double> grid, std::size_t folds) {
  validate_grid(grid);
  const auto n = static_cast<std::size_t>(covariates.rows());
  const auto p = static_cast<std::size_t>(outputs.cols());
  validate_folds(n, folds);
  const auto blocks = fold_blocks(n, folds);
  const auto fold = fold_of_rows(n, folds);
  const auto factors = kernel_factors(grid);
  const std::size_t nc = grid.size();

  // Squared errors are taken on the scale of each output's standard deviation.
  Vector inv_var(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = outputs.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    inv_var(static_cast<Eigen::Index>(j)) = var > 0.0 ? 1.0 / var : 1.0;
  }

  std::vector<double> err(n * nc);
  parallel_for(
      n,
      [&](std::size_t i) {
        const auto zi = row_span(covariates, i);
        const auto [skip_begin, skip_end] = blocks[fold[i]];
        std::vector<double> weight_sum(nc, 0.0);
        std::vector<double> acc(nc * p, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
          if (r >= skip_begin && r < skip_end) continue;
          const double d2 = squared_distance(row_span(covariates, r), zi);
          const auto x = row_span(outputs, r);
          for (std::size_t c = 0; c < nc; ++c) {
            const double w = std::exp(-d2 * factors[c].exponent) * factors[c].norm;
            if (w == 0.0) continue;
            weight_sum[c] += w;
            for (std::size_t j = 0; j < p; ++j) acc[c * p + j] += w * x[j];
          }
        }
        const auto x = row_span(outputs, i);
        for (std::size_t c = 0; c < nc; ++c) {
          if (!(weight_sum[c] > kWeightSumFloor)) {
            err[i * nc + c] = kInf;
            continue;
          }
          double s = 0.0;
          for (std::size_t j = 0; j < p; ++j) {
            const double d = x[j] - acc[c * p + j] / weight_sum[c];
            s += d * d * inv_var(static_cast<Eigen::Index>(j));
          }
          err[i * nc + c] = s;
        }
      },
      16);

  std::vector<double> out(nc, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < nc; ++c) out[c] += err[i * nc + c];
  }
  return out;
}

double median_pairwise_distance(const Matrix& covariates, std::size_t max_rows) {
  const auto n = static_cast<std::size_t>(covariates.rows());
  const std::size_t stride = std::max<std::size_t>(1, (n + max_rows - 1) / std::max<std::size_t>(max_rows, 2));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; i += stride) rows.push_back(i);
  if (rows.size() < 2) fail(ErrorCode::TooFewRows, "median pairwise distance needs two rows");
  std::vector<double> d;
  d.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      d.push_back(euclidean_dist(row_span(covariates, rows[a]), row_span(covariates, rows[b])));
    }
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

std::vector<double> default_bandwidth_grid(const Matrix& covariates, std::size_t count) {
  const double median = median_pairwise_distance(covariates);
  if (!(median > 0.0)) fail(ErrorCode::DegenerateColumn, "all covariate rows coincide");
  if (count < 2) return {median};
  const double lo = std::log(0.05 * median);
  const double hi = std::log(2.0 * median);
  std::vector<double> grid(count);
  for (std::size_t c = 0; c < count; ++c) {
    grid[c] = std::exp(lo + (hi - lo) * static_cast<double>(c) / static_cast<double>(count - 1));
  }
  return grid;
}

BandwidthSelection combine_losses(std::span<const double> grid, std::span<const double> frobenius,
                                  std::span<const double> trace, CombineRule rule) {
  validate_grid(grid);
  if (frobenius.size() != grid.size() || trace.size() != grid.size()) {
    fail(ErrorCode::DimensionMismatch, "loss table length differs from grid length");
  }
  BandwidthSelection sel;
  sel.rule = rule;
  std::vector<double> geo(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    geo[c] = (std::isfinite(frobenius[c]) && std::isfinite(trace[c]))
                 ? std::sqrt(frobenius[c] * trace[c])
                 : kInf;
    sel.table.push_back({grid[c], frobenius[c], trace[c], geo[c]});
  }
  const std::size_t none = grid.size();
  const std::size_t i1 = argmin_first(frobenius);
  const std::size_t i2 = argmin_first(trace);
  sel.frobenius_minimizer = i1 == none ? kInf : grid[i1];
  sel.trace_minimizer = i2 == none ? kInf : grid[i2];

  auto infeasible = [] {
    fail(ErrorCode::AllCandidatesInfeasible, "every bandwidth candidate has infinite loss");
  };
  switch (rule) {
    case CombineRule::FrobeniusOnly:
      if (i1 == none) infeasible();
      sel.bandwidth = grid[i1];
      break;
    case CombineRule::TraceOnly:
      if (i2 == none) infeasible();
      sel.bandwidth = grid[i2];
      break;
    case CombineRule::GeomMeanOfMinimizers:
      if (i1 == none || i2 == none) infeasible();
      sel.bandwidth = std::sqrt(grid[i1] * grid[i2]);
      break;
    case CombineRule::MinimizerOfGeomMeanLoss: {
      const std::size_t ig = argmin_first(geo);
      if (ig == none) infeasible();
      sel.bandwidth = grid[ig];
      break;
    }
  }
  return sel;
}

namespace {

Matrix search_covariates(const Dataset& data, const BandwidthSearch& search) {
  Matrix z = data.covariates();
  if (search.standardize_covariates) {
    const Vector scale = covariate_scales(z);
    for (Eigen::Index k = 0; k < z.cols(); ++k) z.col(k) /= scale(k);
  }
  return z;
}

double mean_bandwidth_for(const Dataset& data, const Matrix& z, const std::vector<double>& grid,
                          const BandwidthSearch& search) {
  if (search.mean_bandwidth) return *search.mean_bandwidth;
  const auto losses = cv_mean_losses(z, data.outputs(), grid, search.folds);
  const std::size_t best = argmin_first(losses);
  if (best == grid.size()) {
    fail(ErrorCode::AllCandidatesInfeasible, "no feasible bandwidth for the conditional mean");
  }
  return grid[best];
}

}  // namespace

double select_mean_bandwidth(const Dataset& data, const BandwidthSearch& search) {
  validate_folds(data.n(), search.folds);
  const Matrix z = search_covariates(data, search);
  const std::vector<double> grid = search.grid.empty() ? default_bandwidth_grid(z) : search.grid;
  validate_grid(grid);
  return mean_bandwidth_for(data, z, grid, search);
}

BandwidthSelection select_bandwidth(const Dataset& data, const BandwidthSearch& search) {
  validate_folds(data.n(), search.folds);
  const Matrix z = search_covariates(data, search);
  const std::vector<double> grid = search.grid.empty() ? default_bandwidth_grid(z) : search.grid;
  validate_grid(grid);
  const double mean_bw = mean_bandwidth_for(data, z, grid, search);

  const KernelModel model = fit(data, mean_bw, KernelSpec::global(mean_bw),
                                FitOptions{.standardize_covariates = search.standardize_covariates});
  const CvLosses losses = cv_losses(model.kernel_covariates(), model.residuals(), grid, search.folds,
                                    search.pseudoinverse_tol);
  BandwidthSelection sel = combine_losses(grid, losses.frobenius, losses.trace, search.combine);
  sel.mean_bandwidth = mean_bw;
  return sel;
}

}  // namespace condcov
