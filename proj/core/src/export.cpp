#include "condcov/export.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include <boost/geometry.hpp>
#include <nlohmann/json.hpp>

#include "condcov/covariance.hpp"
#include "condcov/error.hpp"
#include "condcov/format.hpp"
#include "condcov/kernel.hpp"
#include "condcov/parallel.hpp"

namespace condcov::shm {
namespace {

namespace bg = boost::geometry;
using nlohmann::json;
using Point2 = bg::model::d2::point_xy<double>;
using Polygon2 = bg::model::polygon<Point2>;

constexpr const char* kGridFormat = "condcov-grid";
constexpr const char* kManifestFormat = "condcov-manifest";
constexpr const char* kNwModelFormat = "condcov-nw-model";
constexpr int kVersion = 1;

double nearest_distance(const Matrix& observed, std::span<const double> z, std::optional<std::size_t> skip) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < static_cast<std::size_t>(observed.rows()); ++i) {
    if (skip && *skip == i) continue;
    best = std::min(best, euclidean_dist(row_span(observed, i), z));
  }
  return best;
}

std::string pair_name(const std::string& prefix, const std::string& a, const std::string& b) {
  return prefix + "_" + a + "_" + b;
}

json search_json(const BandwidthSearch& s) {
  return {{"grid", s.grid},
          {"folds", s.folds},
          {"combine", std::string(to_string(s.combine))},
          {"pseudoinverse_tol", s.pseudoinverse_tol}};
}

json params_json(const FitParams& p) {
  return {{"method", std::string(to_string(p.method))},
          {"bandwidth", p.bandwidth ? json(*p.bandwidth) : json("cv")},
          {"mean_bandwidth", p.mean_bandwidth ? json(*p.mean_bandwidth) : json(nullptr)},
          {"standardize_covariates", p.standardize_covariates},
          {"search", search_json(p.search)},
          {"forest",
           {{"n_trees", p.forest.n_trees},
            {"min_node_size", p.forest.min_node_size},
            {"mtry", p.forest.mtry},
            {"max_candidate_cutpoints", p.forest.max_candidate_cutpoints},
            {"include_diagonal", p.forest.include_diagonal},
            {"seed", p.forest.seed}}},
          {"grid_points_per_axis", p.grid_points_per_axis},
          {"mask_quantile", p.mask_quantile}};
}

FitParams params_from(const json& j) {
  FitParams p;
  if (j.contains("method")) p.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("bandwidth")) {
    const json& b = j.at("bandwidth");
    if (b.is_string()) {
      if (b.get<std::string>() != "cv") fail(ErrorCode::ParseError, "fit.bandwidth must be a number or \"cv\"");
    } else {
      p.bandwidth = b.get<double>();
    }
  }
  if (j.contains("mean_bandwidth") && !j.at("mean_bandwidth").is_null()) {
    p.mean_bandwidth = j.at("mean_bandwidth").get<double>();
  }
  p.standardize_covariates = j.value("standardize_covariates", p.standardize_covariates);
  if (j.contains("search")) {
    const json& s = j.at("search");
    p.search.grid = s.value("grid", p.search.grid);
    p.search.folds = s.value("folds", p.search.folds);
    if (s.contains("combine")) p.search.combine = parse_combine_rule(s.at("combine").get<std::string>());
    p.search.pseudoinverse_tol = s.value("pseudoinverse_tol", p.search.pseudoinverse_tol);
  }
  if (j.contains("forest")) {
    const json& f = j.at("forest");
    p.forest.n_trees = f.value("n_trees", p.forest.n_trees);
    p.forest.min_node_size = f.value("min_node_size", p.forest.min_node_size);
    p.forest.mtry = f.value("mtry", p.forest.mtry);
    p.forest.max_candidate_cutpoints = f.value("max_candidate_cutpoints", p.forest.max_candidate_cutpoints);
    p.forest.include_diagonal = f.value("include_diagonal", p.forest.include_diagonal);
    p.forest.seed = f.value("seed", p.forest.seed);
  }
  p.grid_points_per_axis = j.value("grid_points_per_axis", p.grid_points_per_axis);
  p.mask_quantile = j.value("mask_quantile", p.mask_quantile);
  return p;
}

json ingest_json(const IngestSpec& s) {
  return {{"path", s.path},
          {"timestamp_column", s.timestamp_column},
          {"covariates", s.covariates},
          {"outputs", s.outputs},
          {"start", s.start ? json(*s.start) : json(nullptr)},
          {"end", s.end ? json(*s.end) : json(nullptr)},
          {"missing", std::string(to_string(s.missing))},
          {"delimiter", std::string(1, s.delimiter)}};
}

IngestSpec ingest_from(const json& j) {
  IngestSpec s;
  s.path = j.at("path").get<std::string>();
  s.timestamp_column = j.value("timestamp_column", s.timestamp_column);
  s.covariates = j.at("covariates").get<std::vector<std::string>>();
  s.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (j.contains("start") && !j.at("start").is_null()) s.start = j.at("start").get<std::string>();
  if (j.contains("end") && !j.at("end").is_null()) s.end = j.at("end").get<std::string>();
  if (j.contains("missing")) s.missing = parse_missing_policy(j.at("missing").get<std::string>());
  const std::string delim = j.value("delimiter", std::string(","));
  if (delim.size() != 1) fail(ErrorCode::ParseError, "delimiter must be a single character");
  s.delimiter = delim[0];
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

}  // namespace

std::string_view to_string(Method method) noexcept {
  return method == Method::NadarayaWatson ? "nw" : "forest";
}

Method parse_method(std::string_view name) {
  if (name == "nw") return Method::NadarayaWatson;
  if (name == "forest") return Method::Forest;
  fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "' (expected nw or forest)");
}

QueryGrid auto_grid(const Dataset& data, std::size_t per_axis) {
  if (data.q() > 2) {
    fail(ErrorCode::UnsupportedGrid, "automatic rectangular grids support q <= 2; pass an explicit point list");
  }
  if (per_axis < 1) fail(ErrorCode::InvalidArgument, "grid needs at least one point per axis");
  std::vector<GridAxis> axes;
  for (Eigen::Index k = 0; k < data.covariates().cols(); ++k) {
    axes.push_back({data.covariates().col(k).minCoeff(), data.covariates().col(k).maxCoeff(), per_axis});
  }
  return QueryGrid::rectangular(std::move(axes));
}

std::vector<bool> support_mask(const Matrix& observed, const QueryGrid& grid, double nn_quantile) {
  if (static_cast<std::size_t>(observed.cols()) != grid.q()) {
    fail(ErrorCode::DimensionMismatch, "grid dimension differs from covariate dimension");
  }
  const std::size_t m = grid.size();
  std::vector<bool> masked(m, false);
  const Matrix& pts = grid.points();
  if (grid.q() == 1) {
    const double lo = observed.col(0).minCoeff(), hi = observed.col(0).maxCoeff();
    for (std::size_t g = 0; g < m; ++g) masked[g] = pts(static_cast<Eigen::Index>(g), 0) < lo || pts(static_cast<Eigen::Index>(g), 0) > hi;
    return masked;
  }
  if (grid.q() == 2) {
    bg::model::multi_point<Point2> cloud;
    for (Eigen::Index i = 0; i < observed.rows(); ++i) cloud.emplace_back(observed(i, 0), observed(i, 1));
    Polygon2 hull;
    bg::convex_hull(cloud, hull);
    for (std::size_t g = 0; g < m; ++g) {
      const auto r = static_cast<Eigen::Index>(g);
      masked[g] = !bg::covered_by(Point2(pts(r, 0), pts(r, 1)), hull);
    }
    return masked;
  }
  const auto n = static_cast<std::size_t>(observed.rows());
  std::vector<double> nn(n);
  parallel_for(n, [&](std::size_t i) { nn[i] = nearest_distance(observed, row_span(observed, i), i); }, 64);
  auto sorted = nn;
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(n) - 1.0) * nn_quantile;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double threshold = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  std::vector<char> flags(m);
  parallel_for(m, [&](std::size_t g) { flags[g] = nearest_distance(observed, row_span(pts, g), std::nullopt) > threshold; }, 16);
  for (std::size_t g = 0; g < m; ++g) masked[g] = flags[g] != 0;
  return masked;
}

GridEstimate evaluate_grid(const Dataset& data, const FitParams& params, const std::optional<QueryGrid>& grid) {
  QueryGrid g = grid ? *grid : auto_grid(data, params.grid_points_per_axis);
  if (g.q() != data.q()) fail(ErrorCode::DimensionMismatch, "grid dimension differs from covariate dimension");
  std::vector<bool> masked = support_mask(data.covariates(), g, params.mask_quantile);

  BandwidthSearch search = params.search;
  search.standardize_covariates = params.standardize_covariates;
  ResolvedBandwidths bw;
  if (params.mean_bandwidth) {
    bw.mean = *params.mean_bandwidth;
  } else if (params.bandwidth) {
    bw.mean = *params.bandwidth;
  } else {
    bw.mean = select_mean_bandwidth(data, search);
  }
  if (params.method == Method::NadarayaWatson) {
    if (params.bandwidth) {
      bw.covariance = *params.bandwidth;
    } else {
      search.mean_bandwidth = bw.mean;
      bw.covariance = select_bandwidth(data, search).bandwidth;
    }
  }

  const KernelModel model = fit(data, bw.mean, KernelSpec::global(bw.covariance.value_or(bw.mean)),
                                FitOptions{.standardize_covariates = params.standardize_covariates});
  std::optional<CovForest> forest;
  if (params.method == Method::Forest) forest = fit_forest(data, model.residuals(), params.forest);

  const std::size_t m = g.size();
  GridEstimate out{g, masked, std::vector<std::optional<SymMatrix>>(m), std::vector<std::optional<SymMatrix>>(m), bw,
                   std::nullopt, model.sigma_hat()};
  std::mutex err_mutex;
  std::size_t err_index = m;
  std::optional<Error> err;
  parallel_for(
      m,
      [&](std::size_t i) {
        if (masked[i]) return;
        const auto z = row_span(g.points(), i);
        try {
          const SymMatrix s = forest ? predict_cov(*forest, z) : nw_covariance(model, z).matrix;
          out.cov[i] = rescale(s, model.sigma_hat());
          out.corr[i] = cov_to_corr(s);
        } catch (const Error& e) {
          std::lock_guard lock(err_mutex);
          if (i < err_index) {
            err_index = i;
            std::ostringstream os;
            os << e.what() << " (grid point " << i << ", z = (";
            for (std::size_t k = 0; k < z.size(); ++k) os << (k ? ", " : "") << z[k];
            os << "))";
            err = Error(e.code(), os.str());
          }
        }
      },
      8);
  if (err) throw *err;
  out.forest = std::move(forest);
  return out;
}

void write_grid_csv(const GridEstimate& est, const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  const auto& names = data.output_names();
  const std::size_t p = names.size();
  for (const auto& c : data.covariate_names()) out << c << ',';
  out << "masked";
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) out << ',' << pair_name("cov", names[j], names[k]);
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) out << ',' << pair_name("corr", names[j], names[k]);
  }
  out << '\n';
  const Matrix& pts = est.grid.points();
  for (std::size_t i = 0; i < est.grid.size(); ++i) {
    for (Eigen::Index c = 0; c < pts.cols(); ++c) out << format_double(pts(static_cast<Eigen::Index>(i), c)) << ',';
    out << (est.masked[i] ? 1 : 0);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j; k < p; ++k) out << ',' << (est.cov[i] ? format_double((*est.cov[i])(j, k)) : "");
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = j + 1; k < p; ++k) out << ',' << (est.corr[i] ? format_double((*est.corr[i])(j, k)) : "");
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

void write_grid_metadata(const GridEstimate& est, const Dataset& data, const FitParams& params,
                         const std::string& path) {
  std::size_t n_masked = 0;
  for (bool b : est.masked) n_masked += b ? 1 : 0;
  json axes = nullptr;
  if (est.grid.axes()) {
    axes = json::array();
    for (const auto& a : *est.grid.axes()) axes.push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
  }
  const json doc = {
      {"format", kGridFormat},
      {"version", kVersion},
      {"method", std::string(to_string(params.method))},
      {"covariates", data.covariate_names()},
      {"outputs", data.output_names()},
      {"n_points", est.grid.size()},
      {"n_masked", n_masked},
      {"axes", axes},
      {"mask", data.q() == 2 ? "convex_hull" : data.q() == 1 ? "observed_range" : "nearest_neighbour_quantile"},
      {"cov_units", "output"},
      {"sigma_hat", std::vector<double>(est.sigma_hat.data(), est.sigma_hat.data() + est.sigma_hat.size())},
      {"mean_bandwidth", est.bandwidths.mean},
      {"covariance_bandwidth", est.bandwidths.covariance ? json(*est.bandwidths.covariance) : json(nullptr)},
  };
  write_text(path, doc.dump(2) + "\n");
}

std::string run_config_to_json(const RunConfig& c) {
  const json doc = {{"format", "condcov-fit-config"},
                    {"version", kVersion},
                    {"ingest", ingest_json(c.ingest)},
                    {"fit", params_json(c.params)},
                    {"grid_file", c.grid_file ? json(*c.grid_file) : json(nullptr)},
                    {"save_model", c.save_model}};
  return doc.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("version", kVersion) != kVersion) fail(ErrorCode::ParseError, "unsupported config version");
    RunConfig c;
    c.ingest = ingest_from(doc.at("ingest"));
    if (doc.contains("fit")) c.params = params_from(doc.at("fit"));
    if (doc.contains("grid_file") && !doc.at("grid_file").is_null()) c.grid_file = doc.at("grid_file").get<std::string>();
    c.save_model = doc.value("save_model", false);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("fit config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str());
}

QueryGrid load_grid_csv(const std::string& path, const std::vector<std::string>& covariate_names) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open grid file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "grid file '" + path + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      header.push_back(cell);
    }
  }
  std::vector<std::size_t> cols;
  for (const auto& name : covariate_names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::ParseError, "grid file lacks column '" + name + "'");
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    std::vector<double> row;
    for (std::size_t c : cols) {
      if (c >= cells.size()) fail(ErrorCode::ParseError, "grid file line " + std::to_string(line_no) + " is short");
      try {
        row.push_back(std::stod(cells[c]));
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "grid file line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ParseError, "grid file has no points");
  Matrix pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return QueryGrid(std::move(pts));
}

ExportedFiles fit_and_export(const RunConfig& config, const std::string& out_dir, GapReport* report) {
  IngestResult ingested = ingest(config.ingest);
  if (report) *report = ingested.report;
  const Dataset& data = ingested.data;
  std::optional<QueryGrid> grid;
  if (config.grid_file) grid = load_grid_csv(*config.grid_file, data.covariate_names());
  const GridEstimate est = evaluate_grid(data, config.params, grid);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  ExportedFiles files{(dir / "grid.csv").string(), (dir / "grid.meta.json").string(),
                      (dir / "manifest.json").string(), std::nullopt};
  write_grid_csv(est, data, files.grid_csv);
  write_grid_metadata(est, data, config.params, files.grid_metadata);

  if (config.save_model) {
    if (est.forest) {
      files.model = (dir / "model.cbor").string();
      save_forest(*est.forest, *files.model);
    } else {
      files.model = (dir / "model.json").string();
      const json doc = {{"format", kNwModelFormat},
                        {"version", kVersion},
                        {"training_fingerprint", data.fingerprint()},
                        {"mean_bandwidth", est.bandwidths.mean},
                        {"covariance_bandwidth", *est.bandwidths.covariance},
                        {"standardize_covariates", config.params.standardize_covariates},
                        {"sigma_hat", std::vector<double>(est.sigma_hat.data(), est.sigma_hat.data() + est.sigma_hat.size())}};
      write_text(*files.model, doc.dump(2) + "\n");
    }
  }

  json manifest = json::parse(run_config_to_json(config));
  manifest["format"] = kManifestFormat;
  manifest["software_version"] = kSoftwareVersion;
  manifest["dataset_fingerprint"] = fingerprint_hex(data.fingerprint());
  manifest["seed"] = config.params.forest.seed;
  manifest["resolved"] = {{"mean_bandwidth", est.bandwidths.mean},
                          {"covariance_bandwidth", est.bandwidths.covariance ? json(*est.bandwidths.covariance) : json(nullptr)},
                          {"rows", data.n()}};
  manifest["outputs"] = {{"grid_csv", "grid.csv"},
                         {"grid_metadata", "grid.meta.json"},
                         {"model", files.model ? json(std::filesystem::path(*files.model).filename().string()) : json(nullptr)}};
  write_text(files.manifest, manifest.dump(2) + "\n");
  return files;
}

}  // namespace condcov::shm
