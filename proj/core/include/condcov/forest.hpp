#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condcov/dataset.hpp"
#include "condcov/rng.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov {

struct ForestConfig {
  std::size_t n_trees = 500;
  /// 0 selects max(10, 2p).
  std::size_t min_node_size = 0;
  /// 0 selects ceil(q / 3).
  std::size_t mtry = 0;
  /// Nodes with more distinct values on a covariate use this many
  /// quantile-spaced cutpoints; 0 means all midpoints always.
  std::size_t max_candidate_cutpoints = 256;
  /// Whether the covariance distance includes the diagonal (variances).
  bool include_diagonal = true;
  std::uint64_t seed = 1;

  /// Copy with the automatic fields filled in for p outputs and q covariates.
  ForestConfig resolved(std::size_t p, std::size_t q) const;
};

struct SplitRule {
  std::size_t covariate = 0;
  double cutpoint = 0.0;
  double criterion = 0.0;

  friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

/// Criteria within this relative distance of the best are ties; the lowest
/// covariate index wins, then the smallest cutpoint.
inline constexpr double kSplitTieTolerance = 1e-12;

/// Euclidean distance between the upper triangles of two covariance matrices.
double covariance_distance(const SymMatrix& a, const SymMatrix& b, bool include_diagonal = true);

/// sqrt(k_L k_R) * d(cov(left), cov(right)).
double split_criterion(const Matrix& left, const Matrix& right, bool include_diagonal = true);

/// Best covariance-distance split of the node `rows` (indices into Y and Z)
/// among `config.mtry` covariates drawn from `rng`. Rows at or below the
/// cutpoint go left. Returns nullopt when no split leaves min_node_size rows
/// on both sides. `config` must be resolved.
std::optional<SplitRule> best_split(std::span<const std::size_t> rows, const Matrix& residuals,
                                    const Matrix& covariates, const ForestConfig& config,
                                    StreamRng& rng);

struct TreeNode {
  static constexpr std::uint32_t kNone = 0xffffffffu;

  /// Leaf nodes have leaf != kNone and no split.
  std::optional<SplitRule> split;
  std::uint32_t left = kNone;
  std::uint32_t right = kNone;
  std::uint32_t leaf = kNone;
};

struct TreeLeaf {
  SymMatrix cov;
  std::size_t n = 0;
  /// In-bag row indices (with bootstrap repeats). Not persisted by save_forest.
  std::vector<std::size_t> rows;
};

/// Binary tree; node 0 is the root.
struct CovTree {
  std::vector<TreeNode> nodes;
  std::vector<TreeLeaf> leaves;
  std::vector<std::size_t> inbag;

  std::size_t leaf_index(std::span<const double> z) const;
  const TreeLeaf& route(std::span<const double> z) const { return leaves[leaf_index(z)]; }
};

/// Grows one tree on the in-bag rows by recursive best splits. `config` must
/// be resolved.
CovTree grow_tree(std::vector<std::size_t> inbag, const Matrix& residuals, const Matrix& covariates,
                  const ForestConfig& config, StreamRng& rng);

class CovForest {
 public:
  CovForest(std::vector<CovTree> trees, ForestConfig config, std::size_t q,
            std::uint64_t training_fingerprint);

  const std::vector<CovTree>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return config_; }
  std::uint64_t training_fingerprint() const noexcept { return training_fingerprint_; }
  std::size_t dim() const noexcept { return trees_.front().leaves.front().cov.dim(); }
  std::size_t q() const noexcept { return q_; }

  /// Hash of the full fitted structure (splits, leaf covariances, sizes).
  std::uint64_t fingerprint() const;

 private:
  std::vector<CovTree> trees_;
  ForestConfig config_;
  std::uint64_t training_fingerprint_;
  std::size_t q_ = 0;
};

/// Grows config.n_trees trees on bootstrap resamples of the rows of
/// (data.covariates(), residuals). Tree t draws from stream (seed, t), so
/// the result does not depend on the thread schedule.
CovForest fit_forest(const Dataset& data, const Matrix& residuals, const ForestConfig& config);

/// Average over trees (in tree order) of the leaf covariance reached by z.
SymMatrix predict_cov(const CovForest& forest, std::span<const double> z);
SymMatrix predict_corr(const CovForest& forest, std::span<const double> z);

/// Versioned persistence. Paths ending in ".cbor" are written as CBOR,
/// anything else as JSON text. Predictions round-trip bit-exactly.
void save_forest(const CovForest& forest, const std::string& path);
CovForest load_forest(const std::string& path);

}  // namespace condcov
