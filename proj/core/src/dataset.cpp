#include "condcov/dataset.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "condcov/error.hpp"
#include "condcov/hash.hpp"

namespace condcov {
namespace {

std::vector<std::string> default_names(const std::string& prefix, std::size_t count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}


}  // namespace

Dataset::Dataset(Matrix covariates, Matrix outputs, std::vector<std::string> covariate_names,
                 std::vector<std::string> output_names,
                 std::optional<std::vector<double>> timestamps)
    : z_(std::move(covariates)),
      x_(std::move(outputs)),
      covariate_names_(std::move(covariate_names)),
      output_names_(std::move(output_names)),
      timestamps_(std::move(timestamps)) {
  if (z_.rows() != x_.rows()) {
    fail(ErrorCode::DimensionMismatch, "covariate and output row counts differ");
  }
  if (z_.rows() < 2) fail(ErrorCode::TooFewRows, "a dataset needs at least 2 rows");
  if (z_.cols() < 1 || x_.cols() < 1) {
    fail(ErrorCode::InvalidArgument, "a dataset needs at least one covariate and one output");
  }
  if (!z_.allFinite() || !x_.allFinite()) {
    fail(ErrorCode::InvalidArgument, "dataset contains non-finite values");
  }
  if (covariate_names_.empty()) covariate_names_ = default_names("z", q());
  if (output_names_.empty()) output_names_ = default_names("x", p());
  if (covariate_names_.size() != q() || output_names_.size() != p()) {
    fail(ErrorCode::DimensionMismatch, "label list length does not match column count");
  }
  if (timestamps_) {
    const auto& t = *timestamps_;
    if (t.size() != n()) fail(ErrorCode::DimensionMismatch, "timestamp count differs from row count");
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) {
        fail(ErrorCode::NonMonotoneTimestamps, "timestamps must be strictly increasing");
      }
    }
  }
}

Dataset Dataset::with_covariates(std::size_t q_keep) const {
  if (q_keep == 0 || q_keep > q()) {
    fail(ErrorCode::InvalidArgument, "covariate subset size out of range");
  }
  Matrix z = z_.leftCols(static_cast<Eigen::Index>(q_keep));
  std::vector<std::string> names(covariate_names_.begin(),
                                 covariate_names_.begin() + static_cast<std::ptrdiff_t>(q_keep));
  return Dataset(std::move(z), x_, std::move(names), output_names_, timestamps_);
}

std::uint64_t Dataset::fingerprint() const {
  Fnv1a h;
  h.value(static_cast<std::uint64_t>(n()));
  h.value(static_cast<std::uint64_t>(q()));
  h.value(static_cast<std::uint64_t>(p()));
  for (const auto& s : covariate_names_) h.text(s);
  for (const auto& s : output_names_) h.text(s);
  h.bytes(z_.data(), sizeof(double) * static_cast<std::size_t>(z_.size()));
  h.bytes(x_.data(), sizeof(double) * static_cast<std::size_t>(x_.size()));
  if (timestamps_) h.bytes(timestamps_->data(), sizeof(double) * timestamps_->size());
  return h.digest();
}

double GridAxis::at(std::size_t i) const noexcept {
  if (count <= 1) return min;
  if (i + 1 == count) return max;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

QueryGrid::QueryGrid(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    fail(ErrorCode::InvalidArgument, "a query grid needs at least one point");
  }
  if (!points_.allFinite()) fail(ErrorCode::InvalidArgument, "query grid contains non-finite values");
}

QueryGrid QueryGrid::rectangular(std::vector<GridAxis> axes) {
  if (axes.empty()) fail(ErrorCode::InvalidArgument, "rectangular grid needs at least one axis");
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.count == 0 || !(a.max >= a.min)) {
      fail(ErrorCode::InvalidArgument, "grid axis needs count >= 1 and max >= min");
    }
    total *= a.count;
  }
  Matrix pts(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    for (std::size_t d = axes.size(); d-- > 0;) {
      pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = axes[d].at(rem % axes[d].count);
      rem /= axes[d].count;
    }
  }
  QueryGrid grid(std::move(pts));
  grid.axes_ = std::move(axes);
  return grid;
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fingerprint;
  return os.str();
}

}  // namespace condcov
