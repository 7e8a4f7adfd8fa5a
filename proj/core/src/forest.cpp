#include "condcov/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/hash.hpp"
#include "condcov/parallel.hpp"

namespace condcov {
namespace {

struct Candidate {
  std::size_t covariate;
  double cutpoint;
  double criterion;
};

// Midpoint of two adjacent distinct values, kept strictly below `hi` so that
// "z <= cut goes left" reproduces the partition.
double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid < hi ? mid : lo;
}

// Thins `boundaries` to `limit` rank-spaced entries.
std::vector<std::size_t> thin_boundaries(const std::vector<std::size_t>& boundaries, std::size_t limit) {
  if (limit == 0 || boundaries.size() <= limit) return boundaries;
  std::vector<std::size_t> out;
  out.reserve(limit);
  const std::size_t m = boundaries.size();
  for (std::size_t s = 0; s < limit; ++s) out.push_back(boundaries[(s + 1) * m / (limit + 1)]);
  return out;
}

std::vector<std::size_t> draw_covariates(std::size_t q, std::size_t mtry, StreamRng& rng) {
  std::vector<std::size_t> idx(q);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < mtry; ++i) {
    std::swap(idx[i], idx[i + rng.below(q - i)]);
  }
  idx.resize(mtry);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

ForestConfig ForestConfig::resolved(std::size_t p, std::size_t q) const {
  ForestConfig out = *this;
  if (out.n_trees == 0) fail(ErrorCode::InvalidArgument, "forest needs at least one tree");
  if (out.min_node_size == 0) out.min_node_size = std::max<std::size_t>(10, 2 * p);
  if (out.min_node_size < 2) fail(ErrorCode::InvalidArgument, "min_node_size must be at least 2");
  if (out.mtry == 0) out.mtry = std::max<std::size_t>(1, (q + 2) / 3);
  if (out.mtry > q) fail(ErrorCode::InvalidArgument, "mtry must lie in [1, q]");
  return out;
}

double covariance_distance(const SymMatrix& a, const SymMatrix& b, bool include_diagonal) {
  if (a.dim() != b.dim()) fail(ErrorCode::DimensionMismatch, "covariance_distance: dimensions differ");
  double s = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    for (std::size_t k = include_diagonal ? j : j + 1; k < a.dim(); ++k) {
      const double d = a(j, k) - b(j, k);
      s += d * d;
    }
  }
  return std::sqrt(s);
}

double split_criterion(const Matrix& left, const Matrix& right, bool include_diagonal) {
  if (left.cols() != right.cols()) fail(ErrorCode::DimensionMismatch, "split_criterion: column counts differ");
  const auto kl = static_cast<double>(left.rows());
  const auto kr = static_cast<double>(right.rows());
  return std::sqrt(kl * kr) * covariance_distance(sample_cov(left), sample_cov(right), include_diagonal);
}

std::optional<SplitRule> best_split(std::span<const std::size_t> rows, const Matrix& residuals,
                                    const Matrix& covariates, const ForestConfig& config,
                                    StreamRng& rng) {
  const std::size_t n = rows.size();
  const std::size_t min_size = config.min_node_size;
  if (min_size < 2 || n < 2 * min_size) return std::nullopt;
  const auto q = static_cast<std::size_t>(covariates.cols());
  const auto p = static_cast<std::size_t>(residuals.cols());
  const std::size_t m = packed_size(p);
  const auto chosen = draw_covariates(q, std::clamp<std::size_t>(config.mtry, 1, q), rng);

  // Sums are accumulated on rows centred at the node mean.
  std::vector<double> mean(p, 0.0);
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < p; ++j) mean[j] += residuals(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
  }
  for (double& v : mean) v /= static_cast<double>(n);
  Matrix centred(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<double> total1(p, 0.0), total2(m, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < p; ++j) {
      centred(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          residuals(static_cast<Eigen::Index>(rows[t]), static_cast<Eigen::Index>(j)) - mean[j];
    }
    const auto c = row_span(centred, t);
    std::size_t u = 0;
    for (std::size_t j = 0; j < p; ++j) {
      total1[j] += c[j];
      for (std::size_t k = j; k < p; ++k) total2[u++] += c[j] * c[k];
    }
  }

  std::vector<Candidate> candidates;
  std::vector<std::size_t> order(n);
  std::vector<double> left1(p), left2(m);
  for (std::size_t cov : chosen) {
    const auto col = static_cast<Eigen::Index>(cov);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return covariates(static_cast<Eigen::Index>(rows[a]), col) <
             covariates(static_cast<Eigen::Index>(rows[b]), col);
    });
    auto value_at = [&](std::size_t t) { return covariates(static_cast<Eigen::Index>(rows[order[t]]), col); };

    // Left child = first t sorted rows; only boundaries between distinct values.
    std::vector<std::size_t> boundaries;
    for (std::size_t t = min_size; t + min_size <= n; ++t) {
      if (value_at(t - 1) < value_at(t)) boundaries.push_back(t);
    }
    boundaries = thin_boundaries(boundaries, config.max_candidate_cutpoints);
    if (boundaries.empty()) continue;

    std::fill(left1.begin(), left1.end(), 0.0);
    std::fill(left2.begin(), left2.end(), 0.0);
    std::size_t t = 0;
    for (std::size_t b : boundaries) {
      for (; t < b; ++t) {
        const auto c = row_span(centred, order[t]);
        std::size_t u = 0;
        for (std::size_t j = 0; j < p; ++j) {
          left1[j] += c[j];
          for (std::size_t k = j; k < p; ++k) left2[u++] += c[j] * c[k];
        }
      }
      const auto kl = static_cast<double>(b);
      const auto kr = static_cast<double>(n - b);
      double dist2 = 0.0;
      std::size_t u = 0;
      for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j; k < p; ++k, ++u) {
          if (!config.include_diagonal && j == k) continue;
          const double r1j = total1[j] - left1[j];
          const double r1k = total1[k] - left1[k];
          const double cov_l = (left2[u] - left1[j] * left1[k] / kl) / (kl - 1.0);
          const double cov_r = ((total2[u] - left2[u]) - r1j * r1k / kr) / (kr - 1.0);
          const double d = cov_l - cov_r;
          dist2 += d * d;
        }
      }
      candidates.push_back({cov, midpoint(value_at(b - 1), value_at(b)), std::sqrt(kl * kr * dist2)});
    }
  }
  if (candidates.empty()) return std::nullopt;

  double best = 0.0;
  for (const auto& c : candidates) best = std::max(best, c.criterion);
  const double threshold = best - kSplitTieTolerance * best;
  for (const auto& c : candidates) {
    if (c.criterion >= threshold) return SplitRule{c.covariate, c.cutpoint, c.criterion};
  }
  return std::nullopt;
}

std::size_t CovTree::leaf_index(std::span<const double> z) const {
  std::uint32_t node = 0;
  while (nodes[node].split) {
    const SplitRule& s = *nodes[node].split;
    node = z[s.covariate] <= s.cutpoint ? nodes[node].left : nodes[node].right;
  }
  return nodes[node].leaf;
}

CovTree grow_tree(std::vector<std::size_t> inbag, const Matrix& residuals, const Matrix& covariates,
                  const ForestConfig& config, StreamRng& rng) {
  if (inbag.size() < 2) fail(ErrorCode::TooFewRows, "a tree needs at least 2 in-bag rows");
  CovTree tree;
  tree.inbag = inbag;
  tree.nodes.emplace_back();

  struct Pending {
    std::uint32_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  stack.push_back({0, std::move(inbag)});
  while (!stack.empty()) {
    Pending work = std::move(stack.back());
    stack.pop_back();
    auto split = best_split(work.rows, residuals, covariates, config, rng);
    if (!split) {
      tree.nodes[work.node].leaf = static_cast<std::uint32_t>(tree.leaves.size());
      TreeLeaf leaf{sample_cov(residuals, work.rows), work.rows.size(), std::move(work.rows)};
      tree.leaves.push_back(std::move(leaf));
      continue;
    }
    std::vector<std::size_t> left, right;
    const auto col = static_cast<Eigen::Index>(split->covariate);
    for (std::size_t r : work.rows) {
      (covariates(static_cast<Eigen::Index>(r), col) <= split->cutpoint ? left : right).push_back(r);
    }
    const auto left_id = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[work.node];
    node.split = split;
    node.left = left_id;
    node.right = left_id + 1;
    stack.push_back({left_id + 1, std::move(right)});
    stack.push_back({left_id, std::move(left)});
  }
  return tree;
}

CovForest::CovForest(std::vector<CovTree> trees, ForestConfig config, std::size_t q,
                     std::uint64_t training_fingerprint)
    : trees_(std::move(trees)), config_(config), training_fingerprint_(training_fingerprint), q_(q) {
  if (trees_.empty() || trees_.size() != config_.n_trees) {
    fail(ErrorCode::InvalidArgument, "forest tree count differs from config.n_trees");
  }
  const std::size_t p = trees_.front().leaves.empty() ? 0 : trees_.front().leaves.front().cov.dim();
  for (const auto& tree : trees_) {
    if (tree.nodes.empty() || tree.leaves.empty()) fail(ErrorCode::InvalidArgument, "empty tree in forest");
    for (const auto& node : tree.nodes) {
      if (node.split) {
        if (node.split->covariate >= q_ || node.left >= tree.nodes.size() || node.right >= tree.nodes.size()) {
          fail(ErrorCode::InvalidArgument, "tree node refers outside the tree");
        }
      } else if (node.leaf >= tree.leaves.size()) {
        fail(ErrorCode::InvalidArgument, "tree leaf index out of range");
      }
    }
    for (const auto& leaf : tree.leaves) {
      if (leaf.cov.dim() != p) fail(ErrorCode::DimensionMismatch, "leaf covariance dimensions differ");
    }
  }
}

std::uint64_t CovForest::fingerprint() const {
  Fnv1a h;
  h.value(training_fingerprint_);
  h.value(static_cast<std::uint64_t>(q_));
  h.value(static_cast<std::uint64_t>(config_.n_trees));
  h.value(static_cast<std::uint64_t>(config_.min_node_size));
  h.value(static_cast<std::uint64_t>(config_.mtry));
  h.value(static_cast<std::uint64_t>(config_.max_candidate_cutpoints));
  h.value(static_cast<std::uint8_t>(config_.include_diagonal));
  h.value(config_.seed);
  for (const auto& tree : trees_) {
    for (const auto& node : tree.nodes) {
      if (node.split) {
        h.value(static_cast<std::uint64_t>(node.split->covariate));
        h.value(node.split->cutpoint);
        h.value(node.split->criterion);
      }
      h.value(node.left);
      h.value(node.right);
      h.value(node.leaf);
    }
    for (const auto& leaf : tree.leaves) {
      h.value(static_cast<std::uint64_t>(leaf.n));
      h.bytes(leaf.cov.packed().data(), leaf.cov.packed().size() * sizeof(double));
    }
  }
  return h.digest();
}

CovForest fit_forest(const Dataset& data, const Matrix& residuals, const ForestConfig& config) {
  if (static_cast<std::size_t>(residuals.rows()) != data.n()) {
    fail(ErrorCode::DimensionMismatch, "residual rows differ from dataset rows");
  }
  const ForestConfig cfg = config.resolved(static_cast<std::size_t>(residuals.cols()), data.q());
  const std::size_t n = data.n();
  if (n < 2 * cfg.min_node_size) {
    fail(ErrorCode::TooFewRows, "forest needs at least 2 * min_node_size rows (" +
                                    std::to_string(2 * cfg.min_node_size) + ")");
  }
  std::vector<CovTree> trees(cfg.n_trees);
  parallel_for(cfg.n_trees, [&](std::size_t t) {
    StreamRng rng(cfg.seed, {t});
    std::vector<std::size_t> inbag(n);
    for (auto& r : inbag) r = rng.below(n);
    trees[t] = grow_tree(std::move(inbag), residuals, data.covariates(), cfg, rng);
  });
  return CovForest(std::move(trees), cfg, data.q(), data.fingerprint());
}

SymMatrix predict_cov(const CovForest& forest, std::span<const double> z) {
  if (z.size() != forest.q()) fail(ErrorCode::DimensionMismatch, "query dimension differs from forest covariates");
  SymMatrix acc(forest.dim());
  for (const auto& tree : forest.trees()) acc += tree.route(z).cov;
  acc *= 1.0 / static_cast<double>(forest.trees().size());
  return acc;
}

SymMatrix predict_corr(const CovForest& forest, std::span<const double> z) {
  return cov_to_corr(predict_cov(forest, z));
}

}  // namespace condcov
