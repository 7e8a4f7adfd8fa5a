#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "condcov/error.hpp"
#include "condcov/format.hpp"
#include "condcov/simulation.hpp"

namespace condcov::sim {
namespace {

using nlohmann::json;

constexpr const char* kConfigFormat = "condcov-sim-config";
constexpr const char* kSummaryFormat = "condcov-sim-summary";
constexpr const char* kResultsFormat = "condcov-sim-results";
constexpr int kVersion = 1;

json linear_json(const LinearSurface& s) { return {{"intercept", s.intercept}, {"slope1", s.slope1}, {"slope2", s.slope2}}; }
json ramp_json(const LogisticRamp& r) { return {{"center", r.center}, {"scale", r.scale}}; }

LinearSurface linear_from(const json& j, LinearSurface d) {
  return {j.value("intercept", d.intercept), j.value("slope1", d.slope1), j.value("slope2", d.slope2)};
}
LogisticRamp ramp_from(const json& j, LogisticRamp d) { return {j.value("center", d.center), j.value("scale", d.scale)}; }

json search_json(const BandwidthSearch& s) {
  return {{"grid", s.grid},
          {"folds", s.folds},
          {"combine", std::string(to_string(s.combine))},
          {"pseudoinverse_tol", s.pseudoinverse_tol},
          {"mean_bandwidth", s.mean_bandwidth ? json(*s.mean_bandwidth) : json(nullptr)},
          {"standardize_covariates", s.standardize_covariates}};
}

BandwidthSearch search_from(const json& j) {
  BandwidthSearch s;
  s.grid = j.value("grid", s.grid);
  s.folds = j.value("folds", s.folds);
  if (j.contains("combine")) s.combine = parse_combine_rule(j.at("combine").get<std::string>());
  s.pseudoinverse_tol = j.value("pseudoinverse_tol", s.pseudoinverse_tol);
  if (j.contains("mean_bandwidth") && !j.at("mean_bandwidth").is_null()) {
    s.mean_bandwidth = j.at("mean_bandwidth").get<double>();
  }
  s.standardize_covariates = j.value("standardize_covariates", s.standardize_covariates);
  return s;
}

json forest_json(const ForestConfig& f) {
  return {{"n_trees", f.n_trees},
          {"min_node_size", f.min_node_size},
          {"mtry", f.mtry},
          {"max_candidate_cutpoints", f.max_candidate_cutpoints},
          {"include_diagonal", f.include_diagonal}};
}

ForestConfig forest_from(const json& j) {
  ForestConfig f;
  f.n_trees = j.value("n_trees", f.n_trees);
  f.min_node_size = j.value("min_node_size", f.min_node_size);
  f.mtry = j.value("mtry", f.mtry);
  f.max_candidate_cutpoints = j.value("max_candidate_cutpoints", f.max_candidate_cutpoints);
  f.include_diagonal = j.value("include_diagonal", f.include_diagonal);
  return f;
}

}  // namespace

std::string sim_config_to_json(const SimConfig& c) {
  json zeta = json::array();
  for (const auto& z : c.zeta) zeta.push_back({{"a_min", z.a_min}, {"a_max", z.a_max}, {"span", z.span}});
  const TruthSurfaces& t = c.truth;
  json doc = {
      {"format", kConfigFormat},
      {"version", kVersion},
      {"n_hours", c.n_hours},
      {"qs", c.qs},
      {"replications", c.replications},
      {"seed", c.seed},
      {"truth",
       {{"mu1", linear_json(t.mu1)},
        {"mu2", linear_json(t.mu2)},
        {"var1_base", t.var1_base},
        {"var1_amp", t.var1_amp},
        {"var2_base", t.var2_base},
        {"var2_amp", t.var2_amp},
        {"variance_ramp", ramp_json(t.variance_ramp)},
        {"rho_max", t.rho_max},
        {"correlation_ramp", ramp_json(t.correlation_ramp)}}},
      {"noise", {{"phi", c.noise.phi}, {"nu_sq", c.noise.nu_sq}}},
      {"zeta", zeta},
      {"nw",
       {{"bandwidth", c.nw.bandwidth ? json(*c.nw.bandwidth) : json("cv")}, {"search", search_json(c.nw.search)}}},
      {"forest", forest_json(c.forest)},
  };
  return doc.dump(2) + "\n";
}

SimConfig sim_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("simulation config: ") + e.what());
  }
  if (doc.value("format", kConfigFormat) != std::string(kConfigFormat)) {
    fail(ErrorCode::ParseError, "simulation config has an unexpected format tag");
  }
  if (doc.value("version", kVersion) != kVersion) fail(ErrorCode::ParseError, "unsupported simulation config version");
  SimConfig c;
  try {
    c.n_hours = doc.value("n_hours", c.n_hours);
    c.qs = doc.value("qs", c.qs);
    c.replications = doc.value("replications", c.replications);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("truth")) {
      const json& t = doc.at("truth");
      TruthSurfaces& s = c.truth;
      if (t.contains("mu1")) s.mu1 = linear_from(t.at("mu1"), s.mu1);
      if (t.contains("mu2")) s.mu2 = linear_from(t.at("mu2"), s.mu2);
      s.var1_base = t.value("var1_base", s.var1_base);
      s.var1_amp = t.value("var1_amp", s.var1_amp);
      s.var2_base = t.value("var2_base", s.var2_base);
      s.var2_amp = t.value("var2_amp", s.var2_amp);
      if (t.contains("variance_ramp")) s.variance_ramp = ramp_from(t.at("variance_ramp"), s.variance_ramp);
      s.rho_max = t.value("rho_max", s.rho_max);
      if (t.contains("correlation_ramp")) s.correlation_ramp = ramp_from(t.at("correlation_ramp"), s.correlation_ramp);
    }
    if (doc.contains("noise")) {
      c.noise.phi = doc.at("noise").value("phi", c.noise.phi);
      c.noise.nu_sq = doc.at("noise").value("nu_sq", c.noise.nu_sq);
    }
    if (doc.contains("zeta")) {
      const json& z = doc.at("zeta");
      if (z.size() != kCovariateCount) fail(ErrorCode::ParseError, "zeta needs one interval per covariate");
      for (std::size_t k = 0; k < kCovariateCount; ++k) {
        c.zeta[k] = {z[k].at("a_min").get<double>(), z[k].at("a_max").get<double>(), z[k].at("span").get<double>()};
      }
    }
    if (doc.contains("nw")) {
      const json& nw = doc.at("nw");
      if (nw.contains("bandwidth")) {
        const json& b = nw.at("bandwidth");
        if (b.is_string()) {
          if (b.get<std::string>() != "cv") fail(ErrorCode::ParseError, "nw.bandwidth must be a number or \"cv\"");
          c.nw.bandwidth.reset();
        } else {
          c.nw.bandwidth = b.get<double>();
        }
      }
      if (nw.contains("search")) c.nw.search = search_from(nw.at("search"));
    }
    if (doc.contains("forest")) c.forest = forest_from(doc.at("forest"));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return sim_config_from_json(buf.str());
}

void write_results_csv(const BenchResult& result, const std::string& path, bool with_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << "method,q,replication,rmse,wall_time,status\n";
  for (const auto& r : result.records) {
    out << r.method << ',' << r.q << ',' << r.replication << ',' << (r.ok() ? format_double(r.rmse) : "NA") << ','
        << (with_timing ? format_double(r.wall_seconds) : "NA") << ',';
    // Status text is quoted because error messages may contain commas.
    std::string status = r.status;
    for (std::size_t pos = 0; (pos = status.find('"', pos)) != std::string::npos; pos += 2) status.insert(pos, 1, '"');
    out << '"' << status << "\"\n";
  }
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

void write_summary_json(const BenchResult& result, const SimConfig& config, const std::string& path) {
  json cells = json::array();
  for (const auto& s : result.summary) {
    cells.push_back({{"method", s.method},
                     {"q", s.q},
                     {"n_ok", s.n_ok},
                     {"n_failed", s.n_failed},
                     {"median_rmse", s.n_ok ? json(s.median) : json(nullptr)},
                     {"q1_rmse", s.n_ok ? json(s.q1) : json(nullptr)},
                     {"q3_rmse", s.n_ok ? json(s.q3) : json(nullptr)}});
  }
  const json doc = {{"format", kSummaryFormat},
                    {"version", kVersion},
                    {"results_format", kResultsFormat},
                    {"config", json::parse(sim_config_to_json(config))},
                    {"cells", cells}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

}  // namespace condcov::sim
