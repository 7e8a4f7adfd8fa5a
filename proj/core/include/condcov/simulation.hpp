#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condcov/bandwidth.hpp"
#include "condcov/dataset.hpp"
#include "condcov/forest.hpp"
#include "condcov/rng.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov::sim {

inline constexpr std::size_t kDaysPerYear = 365;
inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kCovariateCount = 4;

/// c0 + c1 z1 + c2 z2
struct LinearSurface {
  double intercept = 0.0;
  double slope1 = 0.0;
  double slope2 = 0.0;

  double operator()(double z1, double z2) const noexcept { return intercept + slope1 * z1 + slope2 * z2; }
};

/// logistic((center - (z1 + z2) / 2) / scale), decreasing in mean temperature.
struct LogisticRamp {
  double center = 0.0;
  double scale = 1.0;

  double operator()(double z1, double z2) const noexcept;
};

/// Ground-truth conditional mean and covariance of the latent bivariate
/// output as functions of (z1, z2):
///   var_j = base_j + amp_j * variance_ramp,  cov12 = rho * sd1 * sd2,
///   rho   = rho_max * correlation_ramp.
struct TruthSurfaces {
  LinearSurface mu1{14.0, -0.02, -0.01};
  LinearSurface mu2{12.0, -0.015, -0.005};
  double var1_base = 0.05;
  double var1_amp = 0.04;
  double var2_base = 0.04;
  double var2_amp = 0.03;
  LogisticRamp variance_ramp{15.0, 5.0};
  double rho_max = 0.8;
  LogisticRamp correlation_ramp{10.0, 4.0};

  double mean(std::size_t j, double z1, double z2) const;
  double var(std::size_t j, double z1, double z2) const;
  double rho(double z1, double z2) const;
  double cov12(double z1, double z2) const;
  SymMatrix sigma(double z1, double z2) const;

  /// Throws InvalidArgument unless sigma is PSD at every node of a dense
  /// grid over [z1_lo, z1_hi] x [z2_lo, z2_hi].
  void check_psd(double z1_lo, double z1_hi, double z2_lo, double z2_hi, std::size_t per_axis = 101) const;
};

struct NoiseSpec {
  double phi = 0.8;
  std::array<double, 2> nu_sq{0.02, 0.017};

  void validate() const;
};

/// zeta_{k,d} ~ U(a(d), a(d) + span) with a(d) = a_min + (a_max - a_min) w(d),
/// w(d) = (1 + sin((d - 141) 2 pi / 365)) / 2: wider swings on warm days.
struct ZetaInterval {
  double a_min = 0.0;
  double a_max = 0.0;
  double span = 0.0;

  double lower(std::size_t day) const noexcept;
  double upper(std::size_t day) const noexcept { return lower(day) + span; }
};

struct NwSettings {
  /// Global bandwidth for mean and covariance; nullopt selects it by CV.
  std::optional<double> bandwidth = 1.9;
  BandwidthSearch search;
};

struct SimConfig {
  std::size_t n_hours = kDaysPerYear * kHoursPerDay;
  std::vector<std::size_t> qs{2, 3, 4};
  std::size_t replications = 50;
  std::uint64_t seed = 20250101;
  TruthSurfaces truth;
  NoiseSpec noise;
  std::array<ZetaInterval, kCovariateCount> zeta{{
      {1.0, 5.0, 3.0},
      {1.0, 4.0, 3.0},
      {0.5, 2.0, 1.0},
      {0.5, 3.0, 1.5},
  }};
  NwSettings nw;
  ForestConfig forest;

  void validate() const;
};

/// Annual sinusoid of covariate k: amplitude * sin((d - phase_day) 2 pi / 365) + offset.
struct SeasonalShape {
  double amplitude;
  double phase_day;
  double offset;
};
inline constexpr std::array<SeasonalShape, kCovariateCount> kSeasonalShapes{{
    {12.0, 141.0, 9.5},
    {11.0, 150.0, 7.5},
    {3.0, 270.0, 85.0},
    {5.5, 360.0, 5.5},
}};

/// z_k at (day, hour) for a given daily amplitude zeta.
double covariate_value(std::size_t k, std::size_t day, std::size_t hour, double zeta) noexcept;

struct CovariateBounds {
  double lower;
  double upper;
};
/// offset -+ (amplitude + max |zeta|) for covariate k under `zeta`.
CovariateBounds covariate_bounds(std::size_t k, const ZetaInterval& zeta);

struct CovariateSample {
  Matrix z;                        // n x 4
  std::vector<std::uint16_t> day;  // 1..365
  std::vector<std::uint8_t> hour;  // 1..24
  Matrix zeta;                     // days x 4, one draw per day and covariate
};

CovariateSample gen_covariates(const SimConfig& config, StreamRng& rng);

struct OutputSample {
  Matrix x;                        // n x 2 observed outputs
  Matrix mean;                     // n x 2 true conditional means
  std::vector<SymMatrix> sigma;    // true latent covariance per row
  std::vector<double> cov12;       // sigma[i](0, 1)
  Matrix noise;                    // n x 2 AR(1) measurement errors
};

/// x_i = u_i + delta_i with u_i ~ N(m(z_i), Sigma(z_i)) independent over i and
/// delta_j a stationary AR(1) with marginal variance nu_j^2.
OutputSample gen_outputs(const Matrix& z12, const TruthSurfaces& truth, const NoiseSpec& noise,
                         StreamRng& rng);

double rmse_cov12(std::span<const double> estimates, std::span<const double> truth);

/// One simulated year with all four covariates.
struct Replicate {
  std::size_t index = 0;
  CovariateSample covariates;
  OutputSample outputs;
  Dataset data;  // Z = z1..z4, X = x
};

Replicate make_replicate(const SimConfig& config, std::size_t replication);

struct CellContext {
  std::size_t replication;
  std::size_t q;
  std::uint64_t seed;  // per-cell seed for stochastic estimators
};

/// Returns sigma12 estimates (output units) at every observed row of `data`.
using Cov12Estimator =
    std::function<std::vector<double>(const Dataset& data, const Replicate& replicate, const CellContext& cell)>;

struct NamedEstimator {
  std::string name;
  Cov12Estimator estimate;
};

NamedEstimator nadaraya_watson_estimator(const NwSettings& settings);
NamedEstimator forest_estimator(const NwSettings& mean_settings, const ForestConfig& forest);
std::vector<NamedEstimator> default_estimators(const SimConfig& config);

struct BenchRecord {
  std::string method;
  std::size_t q = 0;
  std::size_t replication = 0;
  double rmse = 0.0;
  double wall_seconds = 0.0;
  std::string status = "ok";  // "ok" or "<ErrorCategory>: message"

  bool ok() const noexcept { return status == "ok"; }
};

struct BenchSummary {
  std::string method;
  std::size_t q = 0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct BenchResult {
  std::vector<BenchRecord> records;   // ordered by (method, q, replication)
  std::vector<BenchSummary> summary;  // ordered by (method, q)

  const BenchSummary& cell(const std::string& method, std::size_t q) const;
};

/// Linear-interpolation quantile (R type 7) of `values`.
double quantile(std::vector<double> values, double prob);

BenchResult run_benchmark(const SimConfig& config, const std::vector<NamedEstimator>& estimators);
BenchResult run_benchmark(const SimConfig& config);

// Structured-text (JSON) configuration and result files.
std::string sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const std::string& text);
SimConfig load_sim_config(const std::string& path);

/// Flat table: method,q,replication,rmse,wall_time,status. wall_time is
/// "NA" unless `with_timing`, so repeated runs stay byte-identical.
void write_results_csv(const BenchResult& result, const std::string& path, bool with_timing);
void write_summary_json(const BenchResult& result, const SimConfig& config, const std::string& path);

}  // namespace condcov::sim
