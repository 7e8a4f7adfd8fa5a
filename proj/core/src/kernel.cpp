#include "condcov/kernel.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"

namespace condcov {
namespace {

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    fail(ErrorCode::InvalidArgument, "bandwidth must be positive and finite");
  }
}

void check_query(const Matrix& covariates, std::span<const double> z) {
  if (z.size() != static_cast<std::size_t>(covariates.cols())) {
    fail(ErrorCode::DimensionMismatch, "query dimension differs from covariate dimension");
  }
}

// Raw (unnormalized) kernel weights; returns their sum.
double raw_weights(const Matrix& covariates, std::span<const double> z, double h,
                   KernelFamily family, std::vector<double>& w) {
  const auto n = static_cast<std::size_t>(covariates.rows());
  w.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = kernel_value(family, euclidean_dist(row_span(covariates, i), z), h);
    sum += w[i];
  }
  if (!(sum > kWeightSumFloor)) {
    fail(ErrorCode::ZeroWeightSum,
         "kernel weight sum underflowed; query lies outside the support of the data");
  }
  return sum;
}

}  // namespace

double gaussian_kernel(double u, double h) {
  check_bandwidth(h);
  const double t = u / h;
  return std::exp(-0.5 * t * t) / (h * std::sqrt(2.0 * std::numbers::pi));
}

double kernel_value(KernelFamily family, double u, double h) {
  switch (family) {
    case KernelFamily::Gaussian: return gaussian_kernel(u, h);
  }
  return 0.0;
}

KernelSpec KernelSpec::global(double bandwidth, KernelFamily family) {
  check_bandwidth(bandwidth);
  return KernelSpec(family, bandwidth);
}

KernelSpec KernelSpec::per_pair(SymMatrix bandwidths, KernelFamily family) {
  for (double h : bandwidths.packed()) check_bandwidth(h);
  return KernelSpec(family, std::move(bandwidths));
}

double KernelSpec::bandwidth() const {
  if (is_per_pair()) fail(ErrorCode::InvalidArgument, "kernel spec uses per-pair bandwidths");
  return std::get<double>(bandwidth_);
}

double KernelSpec::bandwidth(std::size_t j, std::size_t k) const {
  if (is_per_pair()) return std::get<SymMatrix>(bandwidth_)(j, k);
  return std::get<double>(bandwidth_);
}

const SymMatrix& KernelSpec::pair_bandwidths() const {
  if (!is_per_pair()) fail(ErrorCode::InvalidArgument, "kernel spec uses a global bandwidth");
  return std::get<SymMatrix>(bandwidth_);
}

std::vector<double> nw_weights(const Matrix& covariates, std::span<const double> z, double h,
                               KernelFamily family) {
  check_bandwidth(h);
  check_query(covariates, z);
  std::vector<double> w;
  const double sum = raw_weights(covariates, z, h, family, w);
  for (double& v : w) v /= sum;
  return w;
}

Vector nw_mean(const Matrix& covariates, const Matrix& outputs, std::span<const double> z, double h,
               KernelFamily family) {
  check_bandwidth(h);
  check_query(covariates, z);
  std::vector<double> w;
  const double sum = raw_weights(covariates, z, h, family, w);
  const auto p = outputs.cols();
  Vector acc = Vector::Zero(p);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = w[i] / sum;
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < p; ++j) acc(j) += wi * outputs(r, j);
  }
  return acc;
}

Vector nw_mean(const Dataset& data, std::span<const double> z, double h) {
  return nw_mean(data.covariates(), data.outputs(), z, h);
}

SymMatrix nw_second_moment(const Matrix& covariates, const Matrix& residuals,
                           std::span<const double> z, double h, KernelFamily family) {
  check_bandwidth(h);
  check_query(covariates, z);
  std::vector<double> w;
  const double sum = raw_weights(covariates, z, h, family, w);
  const auto p = static_cast<std::size_t>(residuals.cols());
  SymMatrix acc(p);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double wi = w[i] / sum;
    const auto y = row_span(residuals, i);
    for (std::size_t j = 0; j < p; ++j) {
      const double wy = wi * y[j];
      for (std::size_t k = j; k < p; ++k) acc(j, k) += wy * y[k];
    }
  }
  return acc;
}

Vector covariate_scales(const Matrix& covariates) {
  const auto q = covariates.cols();
  const auto n = static_cast<double>(covariates.rows());
  Vector scale(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double mean = covariates.col(k).mean();
    const double ss = (covariates.col(k).array() - mean).square().sum();
    scale(k) = std::sqrt(ss / (n - 1.0));
    if (!(scale(k) > 0.0)) {
      fail(ErrorCode::DegenerateColumn, "covariate column " + std::to_string(k) + " is constant");
    }
  }
  return scale;
}

KernelModel fit(const Dataset& data, double mean_bandwidth, KernelSpec spec, FitOptions options) {
  check_bandwidth(mean_bandwidth);
  KernelModel model(std::make_shared<const Dataset>(data), std::move(spec));
  model.mean_bandwidth_ = mean_bandwidth;
  model.standardize_covariates_ = options.standardize_covariates;

  const Matrix& z = data.covariates();
  const Matrix& x = data.outputs();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());

  model.covariate_scale_ = options.standardize_covariates ? covariate_scales(z)
                                                          : Vector::Ones(z.cols());
  model.kernel_z_ = z;
  for (Eigen::Index k = 0; k < z.cols(); ++k) model.kernel_z_.col(k) /= model.covariate_scale_(k);

  model.sigma_hat_.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = x.col(j).mean();
    const double ss = (x.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      fail(ErrorCode::DegenerateColumn, "output column '" + data.output_names()[static_cast<std::size_t>(j)] +
                                            "' is constant");
    }
    model.sigma_hat_(j) = sd;
  }

  model.residuals_.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector m = nw_mean(model.kernel_z_, x, row_span(model.kernel_z_, static_cast<std::size_t>(i)),
                             mean_bandwidth, model.spec_.family());
    for (Eigen::Index j = 0; j < p; ++j) {
      model.residuals_(i, j) = (x(i, j) - m(j)) / model.sigma_hat_(j);
    }
  }
  return model;
}

std::vector<double> KernelModel::to_kernel_space(std::span<const double> z) const {
  if (z.size() != static_cast<std::size_t>(covariate_scale_.size())) {
    fail(ErrorCode::DimensionMismatch, "query dimension differs from covariate dimension");
  }
  std::vector<double> out(z.begin(), z.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= covariate_scale_(static_cast<Eigen::Index>(k));
  return out;
}

Vector KernelModel::mean_at(std::span<const double> z) const {
  const auto zk = to_kernel_space(z);
  return nw_mean(kernel_z_, training_->outputs(), zk, mean_bandwidth_, spec_.family());
}

CovarianceEstimate nw_covariance(const KernelModel& model, std::span<const double> z) {
  const auto zk = model.to_kernel_space(z);
  const KernelSpec& spec = model.spec();
  if (!spec.is_per_pair()) {
    return {nw_second_moment(model.kernel_covariates(), model.residuals(), zk, spec.bandwidth(),
                             spec.family()),
            false};
  }
  // One weighted second moment per distinct bandwidth; entry (j, k) is read
  // from the moment computed with h_jk.
  const std::size_t p = model.training().p();
  std::map<double, SymMatrix> by_bandwidth;
  SymMatrix out(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) {
      const double h = spec.bandwidth(j, k);
      auto it = by_bandwidth.find(h);
      if (it == by_bandwidth.end()) {
        it = by_bandwidth
                 .emplace(h, nw_second_moment(model.kernel_covariates(), model.residuals(), zk, h,
                                              spec.family()))
                 .first;
      }
      out(j, k) = it->second(j, k);
    }
  }
  return {std::move(out), true};
}

SymMatrix nw_correlation(const KernelModel& model, std::span<const double> z) {
  return cov_to_corr(nw_covariance(model, z).matrix);
}

}  // namespace condcov
