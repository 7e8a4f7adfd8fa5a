#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "condcov/bandwidth.hpp"
#include "condcov/error.hpp"
#include "condcov/export.hpp"
#include "condcov/format.hpp"
#include "condcov/ingest.hpp"
#include "condcov/parallel.hpp"
#include "condcov/simulation.hpp"

namespace condcov::cli {
namespace {

using shm::GapReport;
using shm::IngestResult;
using shm::RunConfig;

struct IngestFlags {
  std::string config;
  std::string input;
  std::string timestamp_column;
  std::vector<std::string> covariates;
  std::vector<std::string> outputs;
  std::string start;
  std::string end;
  std::string missing;
};

void add_ingest_flags(CLI::App& cmd, IngestFlags& f) {
  cmd.add_option("--config", f.config, "Fit config file (JSON); flags below override it");
  cmd.add_option("--input", f.input, "Input CSV");
  cmd.add_option("--timestamp-column", f.timestamp_column, "Timestamp column name (default: timestamp)");
  cmd.add_option("--covariates", f.covariates, "Covariate columns, comma separated")->delimiter(',');
  cmd.add_option("--outputs", f.outputs, "Output columns, comma separated")->delimiter(',');
  cmd.add_option("--start", f.start, "Keep rows at or after this time (YYYY-MM-DD[ HH:MM:SS])");
  cmd.add_option("--end", f.end, "Keep rows strictly before this time");
  cmd.add_option("--missing", f.missing, "Missing-value policy: interpolate or drop");
}

RunConfig base_config(const IngestFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : shm::load_run_config(f.config);
  if (!f.input.empty()) c.ingest.path = f.input;
  if (!f.timestamp_column.empty()) c.ingest.timestamp_column = f.timestamp_column;
  if (!f.covariates.empty()) c.ingest.covariates = f.covariates;
  if (!f.outputs.empty()) c.ingest.outputs = f.outputs;
  if (!f.start.empty()) c.ingest.start = f.start;
  if (!f.end.empty()) c.ingest.end = f.end;
  if (!f.missing.empty()) c.ingest.missing = shm::parse_missing_policy(f.missing);
  if (c.ingest.path.empty()) fail(ErrorCode::InvalidArgument, "no input file (use --input or --config)");
  return c;
}

std::optional<double> parse_bandwidth(const std::string& text) {
  if (text == "cv") return std::nullopt;
  try {
    std::size_t used = 0;
    const double h = std::stod(text, &used);
    if (used == text.size()) return h;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "bandwidth must be a positive number or 'cv', got '" + text + "'");
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(6) << v;
  return os.str();
}

void print_selection(const BandwidthSelection& sel, std::ostream& out) {
  out << std::left << std::setw(16) << "bandwidth" << std::setw(16) << "frobenius" << std::setw(16) << "trace"
      << std::setw(16) << "geometric_mean" << "mark\n";
  for (const auto& row : sel.table) {
    std::string mark;
    if (row.bandwidth == sel.frobenius_minimizer) mark += "F";
    if (row.bandwidth == sel.trace_minimizer) mark += "T";
    out << std::setw(16) << sci(row.bandwidth) << std::setw(16) << sci(row.frobenius) << std::setw(16)
        << sci(row.trace) << std::setw(16) << sci(row.geometric_mean) << mark << '\n';
  }
  out << "mean_bandwidth " << format_double(sel.mean_bandwidth) << '\n'
      << "frobenius_minimizer " << format_double(sel.frobenius_minimizer) << '\n'
      << "trace_minimizer " << format_double(sel.trace_minimizer) << '\n'
      << "rule " << to_string(sel.rule) << '\n'
      << "selected " << format_double(sel.bandwidth) << '\n';
}

void print_dataset(const Dataset& data, std::ostream& out) {
  out << "rows " << data.n() << "\ncovariates " << data.q() << "\noutputs " << data.p() << '\n';
  out << "fingerprint " << fingerprint_hex(data.fingerprint()) << '\n';
  auto column = [&](const std::string& name, const auto& col) {
    out << "  " << std::left << std::setw(16) << name << " min " << format_double(col.minCoeff()) << " mean "
        << format_double(col.mean()) << " max " << format_double(col.maxCoeff()) << '\n';
  };
  for (std::size_t k = 0; k < data.q(); ++k) column(data.covariate_names()[k], data.covariates().col(static_cast<Eigen::Index>(k)));
  for (std::size_t j = 0; j < data.p(); ++j) column(data.output_names()[j], data.outputs().col(static_cast<Eigen::Index>(j)));
}

}  // namespace

int cli_main(int argc, char** argv) { return cli_main(argc, argv, std::cout, std::cerr); }

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional covariance estimation: kernel and forest estimators, simulation benchmark, SHM data pipeline",
               "condcov"};
  app.require_subcommand(1);
  std::size_t threads = thread_count_from_env();
  app.add_option("--threads", threads, "Worker threads (0 = all; default from CONDCOV_THREADS)");
  app.set_version_flag("--version", std::string(shm::kSoftwareVersion));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo benchmark");
  std::string sim_config, sim_out;
  std::size_t sim_reps = 0, sim_trees = 0;
  std::vector<std::size_t> sim_qs;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_bandwidth;
  bool sim_timing = false;
  sim->add_option("--config", sim_config, "Simulation config (JSON); defaults when omitted");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--replications", sim_reps, "Override the replication count");
  sim->add_option("--trees", sim_trees, "Override the forest size");
  sim->add_option("--qs", sim_qs, "Override covariate dimensions, comma separated")->delimiter(',');
  sim->add_option("--seed", sim_seed, "Override the master seed");
  sim->add_option("--bandwidth", sim_bandwidth, "Kernel bandwidth or 'cv'");
  sim->add_flag("--timing", sim_timing, "Record wall-clock time per cell (makes output run-dependent)");

  // fit
  auto* fitc = app.add_subcommand("fit", "Ingest, fit an estimator and export grid files");
  IngestFlags fit_in;
  add_ingest_flags(*fitc, fit_in);
  std::string method, bandwidth, grid_file, fit_out;
  std::optional<double> mean_bw;
  std::optional<std::size_t> trees, min_node, mtry, grid_points;
  std::optional<std::uint64_t> seed;
  bool standardize = false, save_model = false;
  fitc->add_option("--method", method, "nw or forest");
  fitc->add_option("--bandwidth", bandwidth, "Kernel bandwidth or 'cv'");
  fitc->add_option("--mean-bandwidth", mean_bw, "Bandwidth of the mean stage (default: cross-validated)");
  fitc->add_flag("--standardize", standardize, "Scale covariates to unit variance before kernel distances");
  fitc->add_option("--trees", trees, "Forest size");
  fitc->add_option("--min-node-size", min_node, "Forest minimum node size");
  fitc->add_option("--mtry", mtry, "Covariates tried per split");
  fitc->add_option("--seed", seed, "Forest seed");
  fitc->add_option("--grid", grid_file, "CSV of query points (default: automatic rectangular grid)");
  fitc->add_option("--grid-points", grid_points, "Automatic grid points per axis");
  fitc->add_flag("--save-model", save_model, "Write the fitted model next to the grid");
  fitc->add_option("--out", fit_out, "Output directory")->required();

  // select-bandwidth
  auto* sel = app.add_subcommand("select-bandwidth", "Cross-validate the kernel bandwidth and print the loss table");
  IngestFlags sel_in;
  add_ingest_flags(*sel, sel_in);
  std::string rule;
  std::optional<std::size_t> folds;
  std::optional<double> sel_mean_bw;
  bool sel_standardize = false;
  sel->add_option("--rule", rule, "GeomMeanOfMinimizers, MinimizerOfGeomMeanLoss, FrobeniusOnly or TraceOnly");
  sel->add_option("--folds", folds, "Number of contiguous folds");
  sel->add_option("--mean-bandwidth", sel_mean_bw, "Bandwidth of the mean stage (default: cross-validated)");
  sel->add_flag("--standardize", sel_standardize, "Scale covariates to unit variance before kernel distances");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Print the dataset and gap summary");
  IngestFlags insp_in;
  add_ingest_flags(*insp, insp_in);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << shm::kSoftwareVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: category=Usage message=" << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 2;
  }

  auto dispatch = [&]() -> int {
    if (*sim) {
      sim::SimConfig cfg = sim_config.empty() ? sim::SimConfig{} : sim::load_sim_config(sim_config);
      if (sim_reps) cfg.replications = sim_reps;
      if (sim_trees) cfg.forest.n_trees = sim_trees;
      if (!sim_qs.empty()) cfg.qs = sim_qs;
      if (sim_seed) cfg.seed = *sim_seed;
      if (!sim_bandwidth.empty()) cfg.nw.bandwidth = parse_bandwidth(sim_bandwidth);
      cfg.validate();
      const auto result = sim::run_benchmark(cfg);
      std::filesystem::create_directories(sim_out);
      const std::filesystem::path dir(sim_out);
      sim::write_results_csv(result, (dir / "results.csv").string(), sim_timing);
      sim::write_summary_json(result, cfg, (dir / "summary.json").string());
      std::ofstream((dir / "config.json").string()) << sim::sim_config_to_json(cfg);
      out << std::left << std::setw(10) << "method" << std::setw(4) << "q" << std::setw(14) << "median_rmse"
          << std::setw(14) << "q1" << std::setw(14) << "q3" << "failed\n";
      for (const auto& s : result.summary) {
        out << std::setw(10) << s.method << std::setw(4) << s.q << std::setw(14) << sci(s.median) << std::setw(14)
            << sci(s.q1) << std::setw(14) << sci(s.q3) << s.n_failed << '\n';
      }
      out << "wrote " << (dir / "results.csv").string() << ", " << (dir / "summary.json").string() << '\n';
    } else if (*fitc) {
      RunConfig c = base_config(fit_in);
      if (!method.empty()) c.params.method = shm::parse_method(method);
      if (!bandwidth.empty()) c.params.bandwidth = parse_bandwidth(bandwidth);
      if (mean_bw) c.params.mean_bandwidth = mean_bw;
      if (standardize) c.params.standardize_covariates = true;
      if (trees) c.params.forest.n_trees = *trees;
      if (min_node) c.params.forest.min_node_size = *min_node;
      if (mtry) c.params.forest.mtry = *mtry;
      if (seed) c.params.forest.seed = *seed;
      if (grid_points) c.params.grid_points_per_axis = *grid_points;
      if (!grid_file.empty()) c.grid_file = grid_file;
      if (save_model) c.save_model = true;
      GapReport report;
      const auto files = shm::fit_and_export(c, fit_out, &report);
      out << shm::format_gap_report(report);
      out << "wrote " << files.grid_csv << '\n' << "wrote " << files.grid_metadata << '\n'
          << "wrote " << files.manifest << '\n';
      if (files.model) out << "wrote " << *files.model << '\n';
    } else if (*sel) {
      const RunConfig c = base_config(sel_in);
      const IngestResult in = shm::ingest(c.ingest);
      BandwidthSearch search = c.params.search;
      if (!rule.empty()) search.combine = parse_combine_rule(rule);
      if (folds) search.folds = *folds;
      search.mean_bandwidth = sel_mean_bw ? sel_mean_bw : c.params.mean_bandwidth;
      search.standardize_covariates = sel_standardize || c.params.standardize_covariates;
      print_selection(select_bandwidth(in.data, search), out);
    } else if (*insp) {
      const RunConfig c = base_config(insp_in);
      const IngestResult in = shm::ingest(c.ingest);
      out << shm::format_gap_report(in.report);
      print_dataset(in.data, out);
    }
    return 0;
  };

  try {
    return with_threads(threads, dispatch);
  } catch (const Error& e) {
    err << "error: category=" << to_string(e.code()) << " message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: category=Internal message=" << e.what() << '\n';
    return 3;
  }
}

}  // namespace condcov::cli
