#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "condcov/dataset.hpp"

namespace condcov::shm {

enum class MissingPolicy { LinearInterpolate, DropRows };

std::string_view to_string(MissingPolicy policy) noexcept;
MissingPolicy parse_missing_policy(std::string_view name);

/// Which columns of a delimited monitoring export to read and how to clean
/// them. Dates accept "YYYY-MM-DD" or "YYYY-MM-DD HH:MM:SS"; the window is
/// [start, end).
struct IngestSpec {
  std::string path;
  std::string timestamp_column = "timestamp";
  std::vector<std::string> covariates;
  std::vector<std::string> outputs;
  std::optional<std::string> start;
  std::optional<std::string> end;
  MissingPolicy missing = MissingPolicy::LinearInterpolate;
  char delimiter = ',';

  void validate() const;
};

struct ColumnGaps {
  std::string name;
  std::size_t missing = 0;       // missing cells inside the kept rows
  std::size_t interpolated = 0;  // filled by interpolation
  std::size_t runs = 0;          // maximal runs of consecutive missing cells
  std::size_t longest_run = 0;
};

struct GapReport {
  std::size_t rows_read = 0;
  std::size_t rows_in_window = 0;
  std::size_t dropped_leading = 0;
  std::size_t dropped_trailing = 0;
  std::size_t dropped_incomplete = 0;  // DropRows policy only
  std::size_t rows_kept = 0;
  /// Whole hours between the first and last kept timestamp with no row.
  std::size_t absent_hours = 0;
  std::vector<ColumnGaps> columns;
  std::vector<std::string> warnings;
};

struct IngestResult {
  Dataset data;
  GapReport report;
};

IngestResult ingest(const IngestSpec& spec);

/// "YYYY-MM-DD[ HH:MM[:SS]]" (a 'T' separator is accepted) as seconds since
/// 1970-01-01 00:00:00 UTC.
double parse_timestamp(std::string_view text);
std::string format_timestamp(double seconds);

/// Writes the dataset in the ingest format (timestamp column first), with
/// values in shortest round-trip form, so ingesting it reproduces `data`.
void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::string& timestamp_column = "timestamp");

std::string format_gap_report(const GapReport& report);

}  // namespace condcov::shm
