#include "condcov/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "condcov/error.hpp"
#include "condcov/format.hpp"

namespace condcov::shm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NULL" || s == "null" || s == "-";
}

double parse_value(std::string_view s, std::size_t line, const std::string& column) {
  if (is_missing_token(s)) return kNaN;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column '" + column + "': cannot parse '" +
                                    std::string(s) + "' as a number");
  }
  return v;
}

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::ParseError, "malformed timestamp '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(MissingPolicy policy) noexcept {
  return policy == MissingPolicy::LinearInterpolate ? "LinearInterpolate" : "DropRows";
}

MissingPolicy parse_missing_policy(std::string_view name) {
  if (name == "LinearInterpolate" || name == "interpolate") return MissingPolicy::LinearInterpolate;
  if (name == "DropRows" || name == "drop") return MissingPolicy::DropRows;
  fail(ErrorCode::InvalidArgument, "unknown missing-value policy '" + std::string(name) + "'");
}

double parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  // YYYY-MM-DD[(' '|'T')HH:MM[:SS]]
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') fail(ErrorCode::ParseError, "malformed timestamp '" + std::string(s) + "'");
  const int year = parse_int(s.substr(0, 4), s);
  const int month = parse_int(s.substr(5, 2), s);
  const int day = parse_int(s.substr(8, 2), s);
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':') {
      fail(ErrorCode::ParseError, "malformed timestamp '" + std::string(s) + "'");
    }
    hh = parse_int(s.substr(11, 2), s);
    mm = parse_int(s.substr(14, 2), s);
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':') fail(ErrorCode::ParseError, "malformed timestamp '" + std::string(s) + "'");
      ss = parse_int(s.substr(17, 2), s);
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    fail(ErrorCode::ParseError, "invalid date or time '" + std::string(s) + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss;
}

std::string format_timestamp(double seconds) {
  using namespace std::chrono;
  const auto total = static_cast<long long>(std::llround(seconds));
  long long days = total / 86400;
  long long rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600, (rem / 60) % 60,
                rem % 60);
  return buf;
}

void IngestSpec::validate() const {
  if (covariates.empty() || outputs.empty()) {
    fail(ErrorCode::InvalidArgument, "ingest needs at least one covariate and one output column");
  }
  std::vector<std::string> all = covariates;
  all.insert(all.end(), outputs.begin(), outputs.end());
  all.push_back(timestamp_column);
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    fail(ErrorCode::InvalidArgument, "ingest column names must be distinct");
  }
  if (start && end && !(parse_timestamp(*start) < parse_timestamp(*end))) {
    fail(ErrorCode::InvalidArgument, "date range start must precede its end");
  }
}

IngestResult ingest(const IngestSpec& spec) {
  spec.validate();
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + spec.path + "'");

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "'" + spec.path + "' is empty");
  const auto header = split(line, spec.delimiter);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index.emplace(std::string(header[c]), c);
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) fail(ErrorCode::ParseError, "column '" + name + "' not found in header");
    return it->second;
  };
  const std::size_t t_col = column(spec.timestamp_column);
  std::vector<std::string> names = spec.covariates;
  names.insert(names.end(), spec.outputs.begin(), spec.outputs.end());
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(column(n));
  const std::size_t nc = cols.size();

  const double t_start = spec.start ? parse_timestamp(*spec.start) : -std::numeric_limits<double>::infinity();
  const double t_end = spec.end ? parse_timestamp(*spec.end) : std::numeric_limits<double>::infinity();

  GapReport report;
  struct Row {
    double t;
    std::vector<double> v;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, spec.delimiter);
    if (fields.size() != header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                      " fields, header has " + std::to_string(header.size()));
    }
    ++report.rows_read;
    const double t = parse_timestamp(fields[t_col]);
    if (t < t_start || t >= t_end) continue;
    Row row{t, std::vector<double>(nc)};
    for (std::size_t c = 0; c < nc; ++c) row.v[c] = parse_value(fields[cols[c]], line_no, names[c]);
    rows.push_back(std::move(row));
  }
  report.rows_in_window = rows.size();
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].t == rows[i - 1].t) {
      fail(ErrorCode::NonMonotoneTimestamps, "duplicate timestamp " + format_timestamp(rows[i].t));
    }
  }

  // No extrapolation: keep only rows where every column has been observed
  // at or before and at or after.
  std::size_t first = 0, last = rows.size();
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t f = 0;
    while (f < rows.size() && std::isnan(rows[f].v[c])) ++f;
    std::size_t l = rows.size();
    while (l > f && std::isnan(rows[l - 1].v[c])) --l;
    if (f > first) {
      report.warnings.push_back("dropped " + std::to_string(f - first) + " leading row(s): '" + names[c] +
                                "' is missing at the start");
    }
    if (l < last) {
      report.warnings.push_back("dropped " + std::to_string(last - l) + " trailing row(s): '" + names[c] +
                                "' is missing at the end");
    }
    first = std::max(first, f);
    last = std::min(last, l);
  }
  if (first >= last) fail(ErrorCode::EmptyAfterFilter, "no rows left after removing leading/trailing gaps");
  report.dropped_leading = first;
  report.dropped_trailing = rows.size() - last;
  rows = std::vector<Row>(std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(first)),
                          std::make_move_iterator(rows.begin() + static_cast<std::ptrdiff_t>(last)));

  for (std::size_t c = 0; c < nc; ++c) {
    ColumnGaps gaps{names[c]};
    std::size_t i = 0;
    while (i < rows.size()) {
      if (!std::isnan(rows[i].v[c])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < rows.size() && std::isnan(rows[j].v[c])) ++j;
      gaps.missing += j - i;
      ++gaps.runs;
      gaps.longest_run = std::max(gaps.longest_run, j - i);
      if (spec.missing == MissingPolicy::LinearInterpolate) {
        // Interior run: rows[i - 1] and rows[j] are observed.
        const double t0 = rows[i - 1].t, v0 = rows[i - 1].v[c];
        const double t1 = rows[j].t, v1 = rows[j].v[c];
        for (std::size_t k = i; k < j; ++k) rows[k].v[c] = v0 + (v1 - v0) * (rows[k].t - t0) / (t1 - t0);
        gaps.interpolated += j - i;
      }
      i = j;
    }
    report.columns.push_back(gaps);
  }
  if (spec.missing == MissingPolicy::DropRows) {
    const std::size_t before = rows.size();
    std::erase_if(rows, [](const Row& r) {
      return std::any_of(r.v.begin(), r.v.end(), [](double v) { return std::isnan(v); });
    });
    report.dropped_incomplete = before - rows.size();
  }
  if (rows.size() < 2) fail(ErrorCode::EmptyAfterFilter, "fewer than 2 rows left after filtering");
  report.rows_kept = rows.size();
  const double span_hours = (rows.back().t - rows.front().t) / 3600.0;
  const auto expected = static_cast<std::size_t>(std::floor(span_hours + 1e-9)) + 1;
  report.absent_hours = expected > rows.size() ? expected - rows.size() : 0;

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto q = static_cast<Eigen::Index>(spec.covariates.size());
  const auto p = static_cast<Eigen::Index>(spec.outputs.size());
  Matrix z(n, q), x(n, p);
  std::vector<double> t(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    t[static_cast<std::size_t>(i)] = r.t;
    for (Eigen::Index k = 0; k < q; ++k) z(i, k) = r.v[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = r.v[static_cast<std::size_t>(q + j)];
  }
  return {Dataset(std::move(z), std::move(x), spec.covariates, spec.outputs, std::move(t)), std::move(report)};
}

void write_dataset_csv(const Dataset& data, const std::string& path, const std::string& timestamp_column) {
  if (!data.timestamps()) fail(ErrorCode::InvalidArgument, "dataset has no timestamps to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << timestamp_column;
  for (const auto& n : data.covariate_names()) out << ',' << n;
  for (const auto& n : data.output_names()) out << ',' << n;
  out << '\n';
  const auto& ts = *data.timestamps();
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_timestamp(ts[i]);
    for (Eigen::Index k = 0; k < data.covariates().cols(); ++k) out << ',' << format_double(data.covariates()(r, k));
    for (Eigen::Index j = 0; j < data.outputs().cols(); ++j) out << ',' << format_double(data.outputs()(r, j));
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

std::string format_gap_report(const GapReport& r) {
  std::ostringstream os;
  os << "rows read:            " << r.rows_read << '\n'
     << "rows in date window:  " << r.rows_in_window << '\n'
     << "dropped leading:      " << r.dropped_leading << '\n'
     << "dropped trailing:     " << r.dropped_trailing << '\n'
     << "dropped incomplete:   " << r.dropped_incomplete << '\n'
     << "rows kept:            " << r.rows_kept << '\n'
     << "absent hourly rows:   " << r.absent_hours << '\n'
     << "column                  missing  interpolated  runs  longest\n";
  for (const auto& c : r.columns) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-22s %8zu %13zu %5zu %8zu\n", c.name.c_str(), c.missing, c.interpolated,
                  c.runs, c.longest_run);
    os << buf;
  }
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
  return os.str();
}

}  // namespace condcov::shm
