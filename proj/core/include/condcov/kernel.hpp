#pragma once

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "condcov/dataset.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov {

enum class KernelFamily { Gaussian };

/// Weight sums at or below this value are treated as underflow.
inline constexpr double kWeightSumFloor = 1e-300;

/// h^-1 (2 pi)^-1/2 exp(-u^2 / (2 h^2)).
double gaussian_kernel(double u, double h);
double kernel_value(KernelFamily family, double u, double h);

/// Kernel family plus either one global bandwidth or a symmetric p x p
/// matrix of per-output-pair bandwidths.
class KernelSpec {
 public:
  static KernelSpec global(double bandwidth, KernelFamily family = KernelFamily::Gaussian);
  static KernelSpec per_pair(SymMatrix bandwidths, KernelFamily family = KernelFamily::Gaussian);

  KernelFamily family() const noexcept { return family_; }
  bool is_per_pair() const noexcept { return std::holds_alternative<SymMatrix>(bandwidth_); }

  /// Global bandwidth; throws InvalidArgument in per-pair mode.
  double bandwidth() const;
  double bandwidth(std::size_t j, std::size_t k) const;
  const SymMatrix& pair_bandwidths() const;

 private:
  KernelSpec(KernelFamily family, std::variant<double, SymMatrix> bandwidth)
      : family_(family), bandwidth_(std::move(bandwidth)) {}

  KernelFamily family_;
  std::variant<double, SymMatrix> bandwidth_;
};

/// Normalized kernel weights of the rows of `covariates` around `z`.
/// Throws ZeroWeightSum when the raw weight sum underflows.
std::vector<double> nw_weights(const Matrix& covariates, std::span<const double> z, double h,
                               KernelFamily family = KernelFamily::Gaussian);

/// Kernel-weighted average of the outputs (conditional mean estimate).
Vector nw_mean(const Matrix& covariates, const Matrix& outputs, std::span<const double> z, double h,
               KernelFamily family = KernelFamily::Gaussian);
Vector nw_mean(const Dataset& data, std::span<const double> z, double h);

/// Kernel-weighted average of y_i y_i^T for the rows of `residuals`.
SymMatrix nw_second_moment(const Matrix& covariates, const Matrix& residuals,
                           std::span<const double> z, double h,
                           KernelFamily family = KernelFamily::Gaussian);

/// Per-column standard deviations of `covariates` (divisor n - 1), used when
/// covariates with different units are rescaled before distances are taken.
Vector covariate_scales(const Matrix& covariates);

struct FitOptions {
  bool standardize_covariates = false;
};

/// Fitted kernel estimator: standardized residuals y_i = (x_i - m(z_i)) / sigma,
/// with sigma the empirical standard deviations of the raw output columns.
class KernelModel {
 public:
  const Dataset& training() const noexcept { return *training_; }
  const Vector& sigma_hat() const noexcept { return sigma_hat_; }
  const Matrix& residuals() const noexcept { return residuals_; }
  double mean_bandwidth() const noexcept { return mean_bandwidth_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  bool standardized_covariates() const noexcept { return standardize_covariates_; }
  /// All ones unless covariate standardization is on.
  const Vector& covariate_scale() const noexcept { return covariate_scale_; }
  /// Covariates as seen by the kernel (divided by covariate_scale).
  const Matrix& kernel_covariates() const noexcept { return kernel_z_; }

  Vector mean_at(std::span<const double> z) const;
  std::vector<double> to_kernel_space(std::span<const double> z) const;

 private:
  friend KernelModel fit(const Dataset&, double, KernelSpec, FitOptions);
  KernelModel(std::shared_ptr<const Dataset> training, KernelSpec spec)
      : training_(std::move(training)), spec_(std::move(spec)) {}

  std::shared_ptr<const Dataset> training_;
  KernelSpec spec_;
  Vector sigma_hat_;
  Matrix residuals_;
  Matrix kernel_z_;
  Vector covariate_scale_;
  double mean_bandwidth_ = 0.0;
  bool standardize_covariates_ = false;
};

KernelModel fit(const Dataset& data, double mean_bandwidth, KernelSpec spec, FitOptions options = {});

struct CovarianceEstimate {
  SymMatrix matrix;
  /// Entries were computed with different bandwidths; PSD is not guaranteed.
  bool per_pair = false;
};

/// Conditional covariance of the standardized outputs at z.
CovarianceEstimate nw_covariance(const KernelModel& model, std::span<const double> z);
SymMatrix nw_correlation(const KernelModel& model, std::span<const double> z);

}  // namespace condcov
