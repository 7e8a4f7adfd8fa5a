#include "condcov/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/kernel.hpp"
#include "condcov/parallel.hpp"

namespace condcov::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double annual(double amplitude, double phase_day, std::size_t day) {
  return amplitude * std::sin((static_cast<double>(day) - phase_day) * kTwoPi / static_cast<double>(kDaysPerYear));
}

double daily(std::size_t hour) {
  return std::sin(std::numbers::pi * static_cast<double>(hour) / 12.0 + 0.3);
}

// Scales cov12 estimates from standardized-residual units to output units.
std::vector<double> cov12_in_output_units(const std::vector<SymMatrix>& estimates, const Vector& sigma_hat) {
  std::vector<double> out(estimates.size());
  const double scale = sigma_hat(0) * sigma_hat(1);
  for (std::size_t i = 0; i < estimates.size(); ++i) out[i] = estimates[i](0, 1) * scale;
  return out;
}

double resolve_bandwidth(const NwSettings& settings, const Dataset& data) {
  if (settings.bandwidth) return *settings.bandwidth;
  return select_bandwidth(data, settings.search).bandwidth;
}

}  // namespace

double LogisticRamp::operator()(double z1, double z2) const noexcept {
  return logistic((center - 0.5 * (z1 + z2)) / scale);
}

double TruthSurfaces::mean(std::size_t j, double z1, double z2) const {
  if (j > 1) fail(ErrorCode::InvalidArgument, "truth surfaces have two outputs");
  return j == 0 ? mu1(z1, z2) : mu2(z1, z2);
}

double TruthSurfaces::var(std::size_t j, double z1, double z2) const {
  if (j > 1) fail(ErrorCode::InvalidArgument, "truth surfaces have two outputs");
  const double s = variance_ramp(z1, z2);
  return j == 0 ? var1_base + var1_amp * s : var2_base + var2_amp * s;
}

double TruthSurfaces::rho(double z1, double z2) const { return rho_max * correlation_ramp(z1, z2); }

double TruthSurfaces::cov12(double z1, double z2) const {
  return rho(z1, z2) * std::sqrt(var(0, z1, z2) * var(1, z1, z2));
}

SymMatrix TruthSurfaces::sigma(double z1, double z2) const {
  SymMatrix s(2);
  s(0, 0) = var(0, z1, z2);
  s(1, 1) = var(1, z1, z2);
  s(0, 1) = cov12(z1, z2);
  return s;
}

void TruthSurfaces::check_psd(double z1_lo, double z1_hi, double z2_lo, double z2_hi,
                              std::size_t per_axis) const {
  const GridAxis a1{z1_lo, z1_hi, per_axis};
  const GridAxis a2{z2_lo, z2_hi, per_axis};
  for (std::size_t i = 0; i < per_axis; ++i) {
    for (std::size_t k = 0; k < per_axis; ++k) {
      const SymMatrix s = sigma(a1.at(i), a2.at(k));
      if (!(s(0, 0) >= 0.0 && s(1, 1) >= 0.0) || !s.is_psd()) {
        fail(ErrorCode::InvalidArgument, "truth covariance is not PSD at z = (" + std::to_string(a1.at(i)) +
                                             ", " + std::to_string(a2.at(k)) + ")");
      }
    }
  }
}

void NoiseSpec::validate() const {
  if (!(std::abs(phi) < 1.0)) fail(ErrorCode::InvalidArgument, "AR(1) coefficient must lie in (-1, 1)");
  for (double v : nu_sq) {
    if (!(v >= 0.0)) fail(ErrorCode::InvalidArgument, "noise variances must be non-negative");
  }
}

double ZetaInterval::lower(std::size_t day) const noexcept {
  const double w = 0.5 * (1.0 + std::sin((static_cast<double>(day) - 141.0) * kTwoPi / static_cast<double>(kDaysPerYear)));
  return a_min + (a_max - a_min) * w;
}

void SimConfig::validate() const {
  if (n_hours < 2) fail(ErrorCode::InvalidArgument, "n_hours must be at least 2");
  if (qs.empty()) fail(ErrorCode::InvalidArgument, "no covariate counts configured");
  for (std::size_t q : qs) {
    if (q < 2 || q > kCovariateCount) fail(ErrorCode::InvalidArgument, "q must be 2, 3 or 4");
  }
  if (replications == 0) fail(ErrorCode::InvalidArgument, "replications must be positive");
  for (const auto& z : zeta) {
    if (!(z.span >= 0.0)) fail(ErrorCode::InvalidArgument, "zeta interval span must be non-negative");
  }
  noise.validate();
  const auto b1 = covariate_bounds(0, zeta[0]);
  const auto b2 = covariate_bounds(1, zeta[1]);
  truth.check_psd(b1.lower, b1.upper, b2.lower, b2.upper);
}

double covariate_value(std::size_t k, std::size_t day, std::size_t hour, double zeta) noexcept {
  const SeasonalShape& s = kSeasonalShapes[k];
  return annual(s.amplitude, s.phase_day, day) - zeta * daily(hour) + s.offset;
}

CovariateBounds covariate_bounds(std::size_t k, const ZetaInterval& zeta) {
  if (k >= kCovariateCount) fail(ErrorCode::InvalidArgument, "covariate index out of range");
  const double zeta_max = std::max({std::abs(zeta.a_min), std::abs(zeta.a_max), std::abs(zeta.a_min + zeta.span),
                                    std::abs(zeta.a_max + zeta.span)});
  const SeasonalShape& s = kSeasonalShapes[k];
  return {s.offset - s.amplitude - zeta_max, s.offset + s.amplitude + zeta_max};
}

CovariateSample gen_covariates(const SimConfig& config, StreamRng& rng) {
  const std::size_t n = config.n_hours;
  const std::size_t days = (n + kHoursPerDay - 1) / kHoursPerDay;
  CovariateSample out;
  out.z.resize(static_cast<Eigen::Index>(n), kCovariateCount);
  out.zeta.resize(static_cast<Eigen::Index>(days), kCovariateCount);
  out.day.resize(n);
  out.hour.resize(n);
  for (std::size_t d = 0; d < days; ++d) {
    const std::size_t day = d % kDaysPerYear + 1;
    for (std::size_t k = 0; k < kCovariateCount; ++k) {
      const auto& zi = config.zeta[k];
      out.zeta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) =
          zi.span > 0.0 ? rng.uniform(zi.lower(day), zi.upper(day)) : zi.lower(day);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = i / kHoursPerDay;
    const std::size_t day = d % kDaysPerYear + 1;
    const std::size_t hour = i % kHoursPerDay + 1;
    out.day[i] = static_cast<std::uint16_t>(day);
    out.hour[i] = static_cast<std::uint8_t>(hour);
    for (std::size_t k = 0; k < kCovariateCount; ++k) {
      out.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          covariate_value(k, day, hour, out.zeta(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)));
    }
  }
  return out;
}

OutputSample gen_outputs(const Matrix& z12, const TruthSurfaces& truth, const NoiseSpec& noise, StreamRng& rng) {
  if (z12.cols() < 2) fail(ErrorCode::DimensionMismatch, "gen_outputs needs the two relevant covariates");
  noise.validate();
  const auto n = static_cast<std::size_t>(z12.rows());
  OutputSample out;
  out.x.resize(static_cast<Eigen::Index>(n), 2);
  out.mean.resize(static_cast<Eigen::Index>(n), 2);
  out.noise.resize(static_cast<Eigen::Index>(n), 2);
  out.sigma.reserve(n);
  out.cov12.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double z1 = z12(r, 0);
    const double z2 = z12(r, 1);
    SymMatrix s = truth.sigma(z1, z2);
    const Eigen::Matrix2d dense = s.dense();
    Eigen::LDLT<Eigen::Matrix2d> ldlt(dense);
    const Eigen::Vector2d d = ldlt.vectorD();
    const double tol = 1e-12 * std::max(1.0, dense.diagonal().cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || d.minCoeff() < -tol) {
      fail(ErrorCode::CholeskyFailure, "truth covariance is indefinite at row " + std::to_string(i));
    }
    Eigen::Vector2d xi;
    xi(0) = rng.normal();
    xi(1) = rng.normal();
    xi(0) *= std::sqrt(std::max(d(0), 0.0));
    xi(1) *= std::sqrt(std::max(d(1), 0.0));
    const Eigen::Vector2d lx = ldlt.matrixL() * xi;
    const Eigen::Vector2d u = ldlt.transpositionsP().transpose() * lx;
    out.mean(r, 0) = truth.mean(0, z1, z2);
    out.mean(r, 1) = truth.mean(1, z1, z2);
    out.x(r, 0) = out.mean(r, 0) + u(0);
    out.x(r, 1) = out.mean(r, 1) + u(1);
    out.cov12[i] = s(0, 1);
    out.sigma.push_back(std::move(s));
  }

  // Stationary AR(1) per output, started from its marginal distribution.
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double nu = std::sqrt(noise.nu_sq[static_cast<std::size_t>(j)]);
    const double innovation_sd = nu * std::sqrt(1.0 - noise.phi * noise.phi);
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      delta = i == 0 ? nu * rng.normal() : noise.phi * delta + innovation_sd * rng.normal();
      out.noise(r, j) = delta;
      out.x(r, j) += delta;
    }
  }
  return out;
}

double rmse_cov12(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) fail(ErrorCode::DimensionMismatch, "rmse: lengths differ");
  if (estimates.empty()) fail(ErrorCode::InvalidArgument, "rmse of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(estimates.size()));
}

Replicate make_replicate(const SimConfig& config, std::size_t replication) {
  StreamRng cov_rng(config.seed, {replication, 1});
  StreamRng out_rng(config.seed, {replication, 2});
  CovariateSample covariates = gen_covariates(config, cov_rng);
  OutputSample outputs = gen_outputs(covariates.z.leftCols(2), config.truth, config.noise, out_rng);
  std::vector<double> hours(config.n_hours);
  for (std::size_t i = 0; i < hours.size(); ++i) hours[i] = static_cast<double>(i);
  Dataset data(covariates.z, outputs.x, {"z1", "z2", "z3", "z4"}, {"x1", "x2"}, std::move(hours));
  return Replicate{replication, std::move(covariates), std::move(outputs), std::move(data)};
}

NamedEstimator nadaraya_watson_estimator(const NwSettings& settings) {
  return {"nw", [settings](const Dataset& data, const Replicate&, const CellContext&) {
            const double h = resolve_bandwidth(settings, data);
            const KernelModel model = fit(data, h, KernelSpec::global(h),
                                          FitOptions{.standardize_covariates = settings.search.standardize_covariates});
            std::vector<SymMatrix> est(data.n());
            parallel_for(
                data.n(), [&](std::size_t i) { est[i] = nw_covariance(model, row_span(data.covariates(), i)).matrix; },
                64);
            return cov12_in_output_units(est, model.sigma_hat());
          }};
}

NamedEstimator forest_estimator(const NwSettings& mean_settings, const ForestConfig& forest) {
  return {"forest", [mean_settings, forest](const Dataset& data, const Replicate&, const CellContext& cell) {
            const double h = resolve_bandwidth(mean_settings, data);
            const KernelModel model = fit(data, h, KernelSpec::global(h));
            ForestConfig cfg = forest;
            cfg.seed = cell.seed;
            const CovForest fitted = fit_forest(data, model.residuals(), cfg);
            std::vector<SymMatrix> est(data.n());
            parallel_for(
                data.n(), [&](std::size_t i) { est[i] = predict_cov(fitted, row_span(data.covariates(), i)); }, 256);
            return cov12_in_output_units(est, model.sigma_hat());
          }};
}

std::vector<NamedEstimator> default_estimators(const SimConfig& config) {
  return {nadaraya_watson_estimator(config.nw), forest_estimator(config.nw, config.forest)};
}

const BenchSummary& BenchResult::cell(const std::string& method, std::size_t q) const {
  for (const auto& s : summary) {
    if (s.method == method && s.q == q) return s;
  }
  fail(ErrorCode::InvalidArgument, "no benchmark cell for " + method + ", q = " + std::to_string(q));
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BenchResult run_benchmark(const SimConfig& config, const std::vector<NamedEstimator>& estimators) {
  config.validate();
  if (estimators.empty()) fail(ErrorCode::InvalidArgument, "no estimators to benchmark");
  const std::size_t nm = estimators.size();
  const std::size_t nq = config.qs.size();
  const std::size_t nr = config.replications;
  std::vector<BenchRecord> records(nm * nq * nr);
  auto slot = [&](std::size_t m, std::size_t qi, std::size_t r) -> BenchRecord& {
    return records[(m * nq + qi) * nr + r];
  };

  parallel_for(nr, [&](std::size_t r) {
    const Replicate rep = make_replicate(config, r);
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const std::size_t q = config.qs[qi];
      const Dataset data = rep.data.with_covariates(q);
      const CellContext cell{r, q, StreamRng(config.seed, {r, 3, q})()};
      for (std::size_t m = 0; m < nm; ++m) {
        BenchRecord& rec = slot(m, qi, r);
        rec.method = estimators[m].name;
        rec.q = q;
        rec.replication = r;
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto est = estimators[m].estimate(data, rep, cell);
          rec.rmse = rmse_cov12(est, rep.outputs.cov12);
        } catch (const Error& e) {
          rec.status = std::string(to_string(e.code())) + ": " + e.what();
        } catch (const std::exception& e) {
          rec.status = std::string("InternalError: ") + e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    }
  });

  BenchResult result;
  result.records = std::move(records);
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t qi = 0; qi < nq; ++qi) {
      BenchSummary s;
      s.method = estimators[m].name;
      s.q = config.qs[qi];
      std::vector<double> ok;
      for (std::size_t r = 0; r < nr; ++r) {
        const BenchRecord& rec = result.records[(m * nq + qi) * nr + r];
        if (rec.ok()) {
          ok.push_back(rec.rmse);
        } else {
          ++s.n_failed;
        }
      }
      s.n_ok = ok.size();
      s.median = quantile(ok, 0.5);
      s.q1 = quantile(ok, 0.25);
      s.q3 = quantile(ok, 0.75);
      result.summary.push_back(s);
    }
  }
  return result;
}

BenchResult run_benchmark(const SimConfig& config) { return run_benchmark(config, default_estimators(config)); }

}  // namespace condcov::sim
