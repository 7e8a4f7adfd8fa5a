#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "condcov/bandwidth.hpp"
#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/kernel.hpp"
#include "naive.hpp"
#include "random_data.hpp"

using namespace condcov;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}
}  // namespace

TEST(PointLoss, FrobeniusPerfectFitIsZero) {
  const std::vector<double> y{0.5, -2.0, 1.0};
  SymMatrix s(3);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a; b < 3; ++b) s(a, b) = y[a] * y[b];
  EXPECT_EQ(frobenius_point_loss(y, s), 0.0);
}

TEST(PointLoss, TraceWithIdentityIsSquaredNorm) {
  const std::vector<double> y{0.5, -2.0, 1.0};
  EXPECT_NEAR(trace_point_loss(y, SymMatrix::identity(3), 1e-8), 0.25 + 4 + 1, 1e-12);
}

TEST(PointLoss, TracePseudoinverseDropsNullSpace) {
  SymMatrix s(2);
  s(0, 0) = 2.0;  // rank one
  const std::vector<double> y{1.0, 5.0};
  EXPECT_NEAR(trace_point_loss(y, s, 1e-8), 0.5, 1e-12);
}

TEST(FoldBlocks, ContiguousAndCovering) {
  const auto f = fold_blocks(23, 5);
  ASSERT_EQ(f.size(), 5u);
  EXPECT_EQ(f.front().first, 0u);
  EXPECT_EQ(f.back().second, 23u);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_EQ(f[i].first, f[i - 1].second);
  EXPECT_THROW(fold_blocks(3, 5), Error);
  EXPECT_THROW(fold_blocks(10, 1), Error);
}

TEST(CvLosses, MatchFoldByFoldRecomputation) {
  std::mt19937_64 gen(11);
  const auto d = testing_support::random_dataset(gen, 40, 3, 2);
  const auto model = fit(d, 0.9, KernelSpec::global(0.9));
  const std::vector<double> grid{0.8, 1.2, 2.4, 4.8};
  const auto got = cv_losses(d.covariates(), model.residuals(), grid, 5, 1e-8);
  const auto Z = naive::rows_of(d.covariates());
  const auto Y = naive::rows_of(model.residuals());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto want = naive::cv(Z, Y, grid[g], 5, 1e-8);
    EXPECT_NEAR(got.frobenius[g], want.frobenius, 1e-10 * std::max(1.0, want.frobenius));
    EXPECT_NEAR(got.trace[g], want.trace, 1e-10 * std::max(1.0, want.trace));
    EXPECT_EQ(cv_loss(d.covariates(), model.residuals(), grid[g], 5, LossKind::Frobenius, 1e-8), got.frobenius[g]);
  }
}

TEST(CvLosses, FoldOrderDoesNotMatter) {
  std::mt19937_64 gen(12);
  const auto d = testing_support::random_dataset(gen, 50, 2, 2);
  const auto model = fit(d, 0.9, KernelSpec::global(0.9));
  const std::vector<double> grid{0.5, 1.0};
  const auto a = cv_losses(d.covariates(), model.residuals(), grid, 5, 1e-8);
  const std::vector<std::size_t> order{3, 0, 4, 2, 1};
  const auto b = cv_losses(d.covariates(), model.residuals(), grid, 5, 1e-8, order);
  EXPECT_EQ(a.frobenius, b.frobenius);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(CvLosses, UnderflowDisqualifiesCandidate) {
  Matrix z(10, 1), y(10, 1);
  for (int i = 0; i < 10; ++i) {
    z(i, 0) = i < 5 ? 0.0 : 1e4;
    y(i, 0) = (i % 3) - 1.0;
  }
  const std::vector<double> grid{0.01, 1e5};
  const auto l = cv_losses(z, y, grid, 2, 1e-8);
  EXPECT_EQ(l.frobenius[0], kInf);
  EXPECT_TRUE(std::isfinite(l.frobenius[1]));
}

TEST(Combine, SingleCandidate) {
  const std::vector<double> grid{2.0}, l1{3.0}, l2{4.0};
  for (auto rule : {CombineRule::FrobeniusOnly, CombineRule::TraceOnly, CombineRule::GeomMeanOfMinimizers,
                    CombineRule::MinimizerOfGeomMeanLoss})
    EXPECT_EQ(combine_losses(grid, l1, l2, rule).bandwidth, 2.0);
}

TEST(Combine, StubbedTable) {
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0, 8.0};
  const std::vector<double> frob{5, 1, 2, 3, 4};
  const std::vector<double> trace{9, 8, 7, 1, 2};
  EXPECT_DOUBLE_EQ(combine_losses(grid, frob, trace, CombineRule::GeomMeanOfMinimizers).bandwidth, 2.0);
  EXPECT_EQ(combine_losses(grid, frob, trace, CombineRule::FrobeniusOnly).bandwidth, 1.0);
  EXPECT_EQ(combine_losses(grid, frob, trace, CombineRule::TraceOnly).bandwidth, 4.0);
  // sqrt products: 6.7, 2.83, 3.74, 1.73, 2.83
  const auto sel = combine_losses(grid, frob, trace, CombineRule::MinimizerOfGeomMeanLoss);
  EXPECT_EQ(sel.bandwidth, 4.0);
  ASSERT_EQ(sel.table.size(), 5u);
  EXPECT_DOUBLE_EQ(sel.table[1].geometric_mean, std::sqrt(8.0));
}

TEST(Combine, TiesGoToSmallerBandwidth) {
  const std::vector<double> grid{1.0, 2.0, 3.0}, l{2, 1, 1};
  EXPECT_EQ(combine_losses(grid, l, l, CombineRule::FrobeniusOnly).bandwidth, 2.0);
  EXPECT_EQ(combine_losses(grid, l, l, CombineRule::MinimizerOfGeomMeanLoss).bandwidth, 2.0);
}

TEST(Combine, AllInfinite) {
  const std::vector<double> grid{1.0, 2.0}, l{kInf, kInf};
  EXPECT_EQ(code_of([&] { combine_losses(grid, l, l, CombineRule::GeomMeanOfMinimizers); }),
            ErrorCode::AllCandidatesInfeasible);
}

TEST(DefaultGrid, LogSpacedAroundMedianDistance) {
  std::mt19937_64 gen(13);
  const auto d = testing_support::random_dataset(gen, 60, 2, 2);
  const auto grid = default_bandwidth_grid(d.covariates());
  const double med = median_pairwise_distance(d.covariates());
  ASSERT_EQ(grid.size(), 25u);
  EXPECT_NEAR(grid.front(), 0.05 * med, 1e-12 * med);
  EXPECT_NEAR(grid.back(), 2.0 * med, 1e-12 * med);
  for (std::size_t i = 2; i < grid.size(); ++i) EXPECT_NEAR(grid[i] / grid[i - 1], grid[1] / grid[0], 1e-9);
}

TEST(SelectBandwidth, SingletonGridAndDiagnostics) {
  std::mt19937_64 gen(14);
  const auto d = testing_support::random_dataset(gen, 60, 2, 2);
  BandwidthSearch s;
  s.grid = {2.0};
  s.mean_bandwidth = 1.0;
  const auto sel = select_bandwidth(d, s);
  EXPECT_EQ(sel.bandwidth, 2.0);
  EXPECT_EQ(sel.mean_bandwidth, 1.0);
  ASSERT_EQ(sel.table.size(), 1u);
  EXPECT_GT(sel.table[0].frobenius, 0.0);
  EXPECT_GT(sel.table[0].trace, 0.0);
}

TEST(SelectBandwidth, RejectsBadGrid) {
  std::mt19937_64 gen(15);
  const auto d = testing_support::random_dataset(gen, 20, 2, 1);
  BandwidthSearch s;
  s.grid = {1.0, 0.5};
  EXPECT_EQ(code_of([&] { select_bandwidth(d, s); }), ErrorCode::InvalidArgument);
  s.grid = {-1.0};
  EXPECT_EQ(code_of([&] { select_bandwidth(d, s); }), ErrorCode::InvalidArgument);
}

TEST(SelectMeanBandwidth, PrefersSmoothingOnNoisyLinearData) {
  std::mt19937_64 gen(16);
  Matrix z = testing_support::random_matrix(gen, 200, 1);
  Matrix x = 2.0 * z + 0.1 * testing_support::random_matrix(gen, 200, 1);
  const Dataset d(z, x);
  BandwidthSearch s;
  s.grid = {1e-4, 0.05, 0.2, 50.0};
  const double h = select_mean_bandwidth(d, s);
  EXPECT_GT(h, 1e-4);
  EXPECT_LT(h, 50.0);
}
