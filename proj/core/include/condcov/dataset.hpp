#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace condcov {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Aligned observation table: covariates Z (n x q) and outputs X (n x p),
/// optionally time-stamped. Validated on construction and immutable after.
class Dataset {
 public:
  Dataset(Matrix covariates, Matrix outputs,
          std::vector<std::string> covariate_names = {},
          std::vector<std::string> output_names = {},
          std::optional<std::vector<double>> timestamps = std::nullopt);

  std::size_t n() const noexcept { return static_cast<std::size_t>(z_.rows()); }
  std::size_t q() const noexcept { return static_cast<std::size_t>(z_.cols()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  const Matrix& covariates() const noexcept { return z_; }
  const Matrix& outputs() const noexcept { return x_; }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
  const std::vector<std::string>& output_names() const noexcept { return output_names_; }
  const std::optional<std::vector<double>>& timestamps() const noexcept { return timestamps_; }

  /// Dataset restricted to the first `q` covariate columns.
  Dataset with_covariates(std::size_t q) const;

  /// FNV-1a over shapes, names, timestamps and the raw bytes of Z and X.
  std::uint64_t fingerprint() const;

 private:
  Matrix z_;
  Matrix x_;
  std::vector<std::string> covariate_names_;
  std::vector<std::string> output_names_;
  std::optional<std::vector<double>> timestamps_;
};

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;

  double at(std::size_t i) const noexcept;
};

/// Covariate query locations. Rectangular grids keep their axis descriptors;
/// points are ordered with the last axis varying fastest.
class QueryGrid {
 public:
  explicit QueryGrid(Matrix points);
  static QueryGrid rectangular(std::vector<GridAxis> axes);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t q() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Matrix& points() const noexcept { return points_; }
  const std::optional<std::vector<GridAxis>>& axes() const noexcept { return axes_; }

 private:
  Matrix points_;
  std::optional<std::vector<GridAxis>> axes_;
};

std::string fingerprint_hex(std::uint64_t fingerprint);

}  // namespace condcov
