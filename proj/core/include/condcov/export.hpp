#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "condcov/bandwidth.hpp"
#include "condcov/dataset.hpp"
#include "condcov/forest.hpp"
#include "condcov/ingest.hpp"
#include "condcov/sym_matrix.hpp"

namespace condcov::shm {

enum class Method { NadarayaWatson, Forest };

std::string_view to_string(Method method) noexcept;
/// "nw" or "forest".
Method parse_method(std::string_view name);

struct FitParams {
  Method method = Method::NadarayaWatson;
  /// Covariance bandwidth for the kernel method; nullopt selects it by CV.
  std::optional<double> bandwidth;
  /// Conditional-mean bandwidth; defaults to `bandwidth`, else CV.
  std::optional<double> mean_bandwidth;
  bool standardize_covariates = false;
  BandwidthSearch search;
  ForestConfig forest;
  /// Points per axis of the automatic rectangular grid.
  std::size_t grid_points_per_axis = 60;
  /// For q > 2: points farther from every observation than this quantile of
  /// nearest-neighbour distances are masked.
  double mask_quantile = 0.95;
};

/// Bandwidths actually used, after defaults and CV.
struct ResolvedBandwidths {
  double mean = 0.0;
  std::optional<double> covariance;  // kernel method only
};

struct GridEstimate {
  QueryGrid grid;
  std::vector<bool> masked;
  /// Empty for masked points. Covariances are in output units.
  std::vector<std::optional<SymMatrix>> cov;
  std::vector<std::optional<SymMatrix>> corr;
  ResolvedBandwidths bandwidths;
  std::optional<CovForest> forest;
  Vector sigma_hat;
};

/// Rectangular grid over the observed covariate ranges (q <= 2 only;
/// UnsupportedGrid otherwise).
QueryGrid auto_grid(const Dataset& data, std::size_t per_axis);

/// Observed-support mask: convex hull of the 2-D covariate scatter for
/// q = 2, the observed range for q = 1, nearest-neighbour distance above the
/// given quantile for q > 2.
std::vector<bool> support_mask(const Matrix& observed, const QueryGrid& grid, double nn_quantile = 0.95);

GridEstimate evaluate_grid(const Dataset& data, const FitParams& params, const std::optional<QueryGrid>& grid);

/// Long format: covariate columns, masked, cov_<a>_<b> for a <= b, then
/// corr_<a>_<b> for a < b. Masked rows leave the value fields empty.
void write_grid_csv(const GridEstimate& estimate, const Dataset& data, const std::string& path);
void write_grid_metadata(const GridEstimate& estimate, const Dataset& data, const FitParams& params,
                         const std::string& path);

/// Everything needed to re-run a `fit` bit-identically.
struct RunConfig {
  IngestSpec ingest;
  FitParams params;
  std::optional<std::string> grid_file;  // CSV of query points; auto grid otherwise
  bool save_model = false;
};

std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Query points from a CSV whose header names the covariates.
QueryGrid load_grid_csv(const std::string& path, const std::vector<std::string>& covariate_names);

struct ExportedFiles {
  std::string grid_csv;
  std::string grid_metadata;
  std::string manifest;
  std::optional<std::string> model;
};

/// Ingest, fit, evaluate the grid and write grid.csv, grid.meta.json,
/// manifest.json (and model.json / model.cbor when requested) into out_dir.
ExportedFiles fit_and_export(const RunConfig& config, const std::string& out_dir, GapReport* report = nullptr);

inline constexpr const char* kSoftwareVersion = "0.1.0";

}  // namespace condcov::shm
