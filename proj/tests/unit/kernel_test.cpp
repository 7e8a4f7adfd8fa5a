#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/kernel.hpp"
#include "naive.hpp"
#include "random_data.hpp"

using namespace condcov;
using testing_support::random_dataset;

namespace {

double diameter(const Matrix& z) {
  double d = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = i + 1; j < z.rows(); ++j) d = std::max(d, (z.row(i) - z.row(j)).norm());
  return d;
}

}  // namespace

TEST(GaussianKernel, Values) {
  EXPECT_NEAR(gaussian_kernel(0, 1), 0.3989422804, 1e-10);
  EXPECT_NEAR(gaussian_kernel(0, 2), 0.1994711402, 1e-10);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 100; ++i) {
    const double u = testing_support::uniform_real(gen, -5, 5), h = testing_support::uniform_real(gen, 0.1, 3);
    EXPECT_EQ(gaussian_kernel(u, h), gaussian_kernel(-u, h));
    EXPECT_LE(gaussian_kernel(u, h), gaussian_kernel(0, h));
  }
  EXPECT_THROW(gaussian_kernel(0, 0), Error);
}

TEST(NwMean, SinglePointIsExact) {
  Matrix z(1, 2), x(1, 3);
  z << 0.3, -1;
  x << 1.1, 2.2, 3.3;
  const std::vector<double> q{5, 5};
  for (double h : {0.5, 2.0, 100.0}) {
    const Vector m = nw_mean(z, x, q, h);
    EXPECT_EQ(m(0), 1.1);
    EXPECT_EQ(m(1), 2.2);
    EXPECT_EQ(m(2), 3.3);
  }
}

TEST(NwMean, LargeBandwidthGivesSampleMean) {
  std::mt19937_64 gen(2);
  const auto d = random_dataset(gen, 40, 3, 2);
  const double h = 1e6 * diameter(d.covariates());
  const std::vector<double> q{0.1, 0.2};
  const Vector m = nw_mean(d, q, h);
  const Vector mean = d.outputs().colwise().mean();
  for (Eigen::Index j = 0; j < m.size(); ++j) EXPECT_NEAR(m(j), mean(j), 1e-8);
}

TEST(NwMean, ToySetAgainstExplicitLoop) {
  Matrix z(3, 1), x(3, 2);
  z << 0, 1, 3;
  x << 1, 2, 3, -1, 0, 5;
  const std::vector<double> q{0.7};
  const Vector m = nw_mean(z, x, q, 1.0);
  const auto want = naive::nw_mean(naive::rows_of(z), naive::rows_of(x), {0.7}, 1.0);
  EXPECT_NEAR(m(0), want[0], 1e-12);
  EXPECT_NEAR(m(1), want[1], 1e-12);
}

TEST(NwMean, StaysInsideOutputRange) {
  std::mt19937_64 gen(3);
  const auto d = random_dataset(gen, 30, 2, 2);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> q{testing_support::uniform_real(gen, -3, 3), testing_support::uniform_real(gen, -3, 3)};
    const Vector m = nw_mean(d, q, 0.4);
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      EXPECT_GE(m(j), d.outputs().col(j).minCoeff() - 1e-12);
      EXPECT_LE(m(j), d.outputs().col(j).maxCoeff() + 1e-12);
    }
  }
}

TEST(NwMean, ZeroWeightSumFarAway) {
  Matrix z(2, 1), x(2, 1);
  z << 0, 1;
  x << 0, 1;
  const std::vector<double> q{1e6};
  try {
    nw_mean(z, x, q, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroWeightSum);
  }
}

TEST(NwWeights, SumToOne) {
  std::mt19937_64 gen(4);
  const auto d = random_dataset(gen, 50, 2, 3);
  const std::vector<double> q{0, 1, -1};
  const auto w = nw_weights(d.covariates(), q, 0.8);
  double s = 0;
  for (double v : w) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Fit, ConstantColumnIsDegenerate) {
  Matrix z(3, 1), x(3, 2);
  z << 0, 1, 2;
  x << 1, 5, 2, 5, 3, 5;
  try {
    fit(Dataset(z, x), 1.0, KernelSpec::global(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
  }
}

TEST(Fit, ResidualsRoundTrip) {
  std::mt19937_64 gen(5);
  const auto d = random_dataset(gen, 60, 3, 2);
  const auto model = fit(d, 0.7, KernelSpec::global(0.7));
  for (std::size_t i = 0; i < d.n(); ++i) {
    const Vector m = model.mean_at(row_span(d.covariates(), i));
    for (std::size_t j = 0; j < d.p(); ++j) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      EXPECT_NEAR(model.residuals()(r, c) * model.sigma_hat()(c) + m(c), d.outputs()(r, c), 1e-10);
    }
  }
}

TEST(Fit, HugeMeanBandwidthGivesZScores) {
  std::mt19937_64 gen(6);
  const auto d = random_dataset(gen, 40, 2, 2);
  const auto model = fit(d, 1e6 * diameter(d.covariates()), KernelSpec::global(1.0));
  const Vector mean = d.outputs().colwise().mean();
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double sd = std::sqrt((d.outputs().col(j).array() - mean(j)).square().sum() / (d.n() - 1.0));
    EXPECT_DOUBLE_EQ(model.sigma_hat()(j), sd);
    for (Eigen::Index i = 0; i < 40; ++i) EXPECT_NEAR(model.residuals()(i, j), (d.outputs()(i, j) - mean(j)) / sd, 1e-6);
  }
}

TEST(NwCovariance, LargeBandwidthGivesSecondMoment) {
  std::mt19937_64 gen(7);
  const auto d = random_dataset(gen, 30, 3, 2);
  const double h = 1e6 * diameter(d.covariates());
  const auto model = fit(d, 0.8, KernelSpec::global(h));
  const Matrix& y = model.residuals();
  const Eigen::MatrixXd want = y.transpose() * y / 30.0;
  const std::vector<double> q{0.5, -0.5};
  const auto got = nw_covariance(model, q).matrix;
  for (Eigen::Index a = 0; a < 3; ++a)
    for (Eigen::Index b = 0; b < 3; ++b) EXPECT_NEAR(got(a, b), want(a, b), 1e-8);
}

TEST(NwCovariance, TinyBandwidthAtTrainingPoint) {
  std::mt19937_64 gen(8);
  const auto d = random_dataset(gen, 25, 2, 2);
  double spacing = 1e300;
  for (Eigen::Index i = 0; i < 25; ++i)
    for (Eigen::Index j = i + 1; j < 25; ++j) spacing = std::min(spacing, (d.covariates().row(i) - d.covariates().row(j)).norm());
  const auto model = fit(d, 0.8, KernelSpec::global(1e-6 * spacing));
  const std::size_t k = 11;
  const auto got = nw_covariance(model, row_span(d.covariates(), k)).matrix;
  const auto y = model.residuals().row(k);
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b) EXPECT_NEAR(got(a, b), y(a) * y(b), 1e-6);
}

TEST(NwCovariance, ToySetAgainstExplicitLoop) {
  Matrix z(5, 2), x(5, 2);
  z << 0, 0, 1, 0.5, -0.3, 1.2, 2, -1, 0.4, 0.4;
  x << 1, 2, 0.5, 1.5, 2.2, 0.1, -0.3, 0.9, 1.4, 1.1;
  const Dataset d(z, x);
  const auto model = fit(d, 0.7, KernelSpec::global(0.7));
  const auto Z = naive::rows_of(z);
  const auto Y = naive::residuals(Z, naive::rows_of(x), 0.7);
  const std::vector<double> q{0.2, 0.3};
  const auto want = naive::nw_cov(Z, Y, q, 0.7);
  const auto got = nw_covariance(model, q).matrix;
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b) EXPECT_NEAR(got(a, b), want(a, b), 1e-12);
  const auto corr = nw_correlation(model, q);
  EXPECT_NEAR(corr(0, 1), want(0, 1) / std::sqrt(want(0, 0) * want(1, 1)), 1e-12);
  EXPECT_EQ(corr(0, 0), 1.0);
  EXPECT_EQ(corr(1, 1), 1.0);
  EXPECT_LE(std::abs(corr(0, 1)), 1.0);
}

TEST(NwCovariance, PerPairBandwidthsAreFlagged) {
  std::mt19937_64 gen(9);
  const auto d = random_dataset(gen, 40, 2, 2);
  SymMatrix hb(2);
  hb(0, 0) = 0.5;
  hb(0, 1) = 2.0;
  hb(1, 1) = 1.0;
  const auto model = fit(d, 0.8, KernelSpec::per_pair(hb));
  const std::vector<double> q{0.1, 0.1};
  const auto est = nw_covariance(model, q);
  EXPECT_TRUE(est.per_pair);
  // each entry equals the global estimate at its own bandwidth
  for (auto [j, k] : {std::pair{0, 0}, {0, 1}, {1, 1}}) {
    const auto one = fit(d, 0.8, KernelSpec::global(hb(j, k)));
    EXPECT_NEAR(est.matrix(j, k), nw_covariance(one, q).matrix(j, k), 1e-14);
  }
  EXPECT_FALSE(nw_covariance(fit(d, 0.8, KernelSpec::global(1.0)), q).per_pair);
}

TEST(Fit, StandardizedCovariatesAreRecorded) {
  std::mt19937_64 gen(10);
  auto base = random_dataset(gen, 40, 2, 2);
  Matrix z = base.covariates();
  z.col(1) *= 50.0;
  const Dataset d(z, base.outputs());
  const auto model = fit(d, 0.8, KernelSpec::global(0.8), FitOptions{.standardize_covariates = true});
  EXPECT_TRUE(model.standardized_covariates());
  EXPECT_GT(model.covariate_scale()(1), 10 * model.covariate_scale()(0));
  // scaling a covariate column again leaves standardized estimates unchanged
  Matrix z2 = z;
  z2.col(1) *= 3.0;
  const auto model2 = fit(Dataset(z2, base.outputs()), 0.8, KernelSpec::global(0.8), FitOptions{.standardize_covariates = true});
  const std::vector<double> q{0.3, 10.0}, q2{0.3, 30.0};
  const auto a = nw_covariance(model, q).matrix, b = nw_covariance(model2, q2).matrix;
  for (std::size_t i = 0; i < a.packed().size(); ++i) EXPECT_NEAR(a.packed()[i], b.packed()[i], 1e-12);
}
