// Production code against the plain reference loops in naive.hpp.
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "condcov/bandwidth.hpp"
#include "condcov/forest.hpp"
#include "condcov/kernel.hpp"
#include "condcov/rng.hpp"
#include "naive.hpp"
#include "random_data.hpp"

using namespace condcov;
using testing_support::uniform_int;
using testing_support::uniform_real;

TEST(Oracle, KernelMeanAndCovariance) {
  std::mt19937_64 gen(201);
  for (int rep = 0; rep < 50; ++rep) {
    const auto n = uniform_int(gen, 2, 200), p = uniform_int(gen, 1, 4), q = uniform_int(gen, 1, 4);
    const auto d = testing_support::random_dataset(gen, n, p, q);
    const double hm = uniform_real(gen, 0.3, 3), hc = uniform_real(gen, 0.3, 3);
    const auto model = fit(d, hm, KernelSpec::global(hc));
    const auto Z = naive::rows_of(d.covariates()), X = naive::rows_of(d.outputs());
    const auto Y = naive::residuals(Z, X, hm);
    std::vector<double> z(q);
    for (auto& v : z) v = uniform_real(gen, -2, 2);
    const Vector m = nw_mean(d, z, hm);
    const auto mw = naive::nw_mean(Z, X, z, hm);
    for (std::size_t j = 0; j < p; ++j) ASSERT_NEAR(m(j), mw[j], 1e-12 * std::max(1.0, std::abs(mw[j])));
    const auto s = nw_covariance(model, z).matrix;
    const auto sw = naive::nw_cov(Z, Y, z, hc);
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) ASSERT_NEAR(s(a, b), sw(a, b), 1e-12 * std::max(1.0, std::abs(sw(a, b))));
  }
}

TEST(Oracle, BestSplitMatchesExhaustiveSearch) {
  std::mt19937_64 gen(202);
  for (int rep = 0; rep < 100; ++rep) {
    const auto n = uniform_int(gen, 4, 50);
    Matrix z = testing_support::random_matrix(gen, n, 2), y = testing_support::random_matrix(gen, n, 2);
    if (rep % 4 == 1) z.col(1) = z.col(0);  // exact ties across covariates
    if (rep % 4 == 2)                       // heavy value repeats
      for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, 0) = std::round(z(i, 0) * 2);
    ForestConfig cfg;
    cfg.min_node_size = uniform_int(gen, 2, std::max<std::size_t>(2, n / 3));
    cfg.mtry = 2;
    cfg.max_candidate_cutpoints = 0;
    cfg = cfg.resolved(2, 2);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    StreamRng rng(rep, {});
    const auto got = best_split(rows, y, z, cfg, rng);
    const auto want = naive::brute_force_split(naive::rows_of(z), naive::rows_of(y), cfg.min_node_size);
    ASSERT_EQ(got.has_value(), want.has_value()) << rep;
    if (!got) continue;
    ASSERT_EQ(got->covariate, want->covariate) << rep;
    ASSERT_EQ(got->cutpoint, want->cutpoint) << rep;
    ASSERT_NEAR(got->criterion, want->criterion, 1e-10 * std::max(1.0, want->criterion)) << rep;
  }
}

TEST(Oracle, CrossValidationLosses) {
  std::mt19937_64 gen(203);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = testing_support::random_dataset(gen, uniform_int(gen, 20, 45), uniform_int(gen, 1, 3), 2);
    const auto model = fit(d, 1.0, KernelSpec::global(1.0));
    const std::vector<double> grid{0.9, 2.0, 4.0};
    const std::size_t folds = uniform_int(gen, 2, 6);
    const auto got = cv_losses(d.covariates(), model.residuals(), grid, folds, 1e-8);
    const auto Z = naive::rows_of(d.covariates()), Y = naive::rows_of(model.residuals());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto want = naive::cv(Z, Y, grid[g], folds, 1e-8);
      ASSERT_NEAR(got.frobenius[g], want.frobenius, 1e-10 * std::max(1.0, want.frobenius));
      ASSERT_NEAR(got.trace[g], want.trace, 1e-10 * std::max(1.0, want.trace));
    }
  }
}
