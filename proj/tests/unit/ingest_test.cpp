#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "condcov/error.hpp"
#include "condcov/ingest.hpp"

using namespace condcov;
using namespace condcov::shm;

namespace {

class IngestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("condcov_ingest_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }

  IngestSpec spec(const std::string& path) {
    IngestSpec s;
    s.path = path;
    s.covariates = {"t"};
    s.outputs = {"f1", "f2"};
    return s;
  }

  std::filesystem::path dir_;
};

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

const char* kBasic =
    "timestamp,t,f1,f2\n"
    "2019-01-01 00:00:00,1.0,2.0,10\n"
    "2019-01-01 01:00:00,2.0,,11\n"
    "2019-01-01 02:00:00,3.0,4.0,12\n"
    "2019-01-01 03:00:00,4.0,5.0,13\n";

}  // namespace

TEST_F(IngestTest, InterpolatesOneHourGap) {
  const auto r = ingest(spec(write("a.csv", kBasic)));
  ASSERT_EQ(r.data.n(), 4u);
  EXPECT_DOUBLE_EQ(r.data.outputs()(1, 0), 3.0);
  EXPECT_EQ(r.report.columns[1].interpolated, 1u);
  EXPECT_EQ(r.report.rows_kept, 4u);
}

TEST_F(IngestTest, InterpolatesInTimeNotRowIndex) {
  // 00:00 -> 2.0, missing at 01:00, 03:00 -> 8.0 with 02:00 absent: value at 01:00 is 4.0
  const auto p = write("b.csv",
                       "timestamp,t,f1,f2\n"
                       "2019-01-01 00:00:00,1,2.0,1\n"
                       "2019-01-01 01:00:00,2,NA,2\n"
                       "2019-01-01 03:00:00,3,8.0,3\n");
  const auto r = ingest(spec(p));
  EXPECT_DOUBLE_EQ(r.data.outputs()(1, 0), 4.0);
  EXPECT_EQ(r.report.absent_hours, 1u);
}

TEST_F(IngestTest, LeadingAndTrailingMissingAreDropped) {
  const auto p = write("c.csv",
                       "timestamp,t,f1,f2\n"
                       "2019-01-01 00:00:00,1,,1\n"
                       "2019-01-01 01:00:00,2,3,2\n"
                       "2019-01-01 02:00:00,3,4,3\n"
                       "2019-01-01 03:00:00,4,5,4\n"
                       "2019-01-01 04:00:00,,6,5\n");
  const auto r = ingest(spec(p));
  EXPECT_EQ(r.data.n(), 3u);
  EXPECT_EQ(r.report.dropped_leading, 1u);
  EXPECT_EQ(r.report.dropped_trailing, 1u);
  EXPECT_FALSE(r.report.warnings.empty());
  EXPECT_EQ((*r.data.timestamps())[0], parse_timestamp("2019-01-01 01:00:00"));
}

TEST_F(IngestTest, DropRowsPolicy) {
  auto s = spec(write("d.csv", kBasic));
  s.missing = MissingPolicy::DropRows;
  const auto r = ingest(s);
  EXPECT_EQ(r.data.n(), 3u);
  EXPECT_EQ(r.report.dropped_incomplete, 1u);
}

TEST_F(IngestTest, DateWindowIsHalfOpen) {
  auto s = spec(write("e.csv", kBasic));
  s.start = "2019-01-01 00:00:00";
  s.end = "2019-01-01 03:00:00";
  const auto r = ingest(s);
  EXPECT_EQ(r.report.rows_read, 4u);
  EXPECT_EQ(r.report.rows_in_window, 3u);
  EXPECT_EQ(r.data.n(), 3u);
  // the 01:00 row is missing f1 and now ends the window
  EXPECT_EQ(code_of([&] { s.end = "2019-01-01 02:00:00"; ingest(s); }), ErrorCode::EmptyAfterFilter);
}

TEST_F(IngestTest, UnsortedInputIsSorted) {
  const auto p = write("f.csv",
                       "timestamp,t,f1,f2\n"
                       "2019-01-01 02:00:00,3,4,3\n"
                       "2019-01-01 00:00:00,1,2,1\n"
                       "2019-01-01 01:00:00,2,3,2\n");
  const auto r = ingest(spec(p));
  EXPECT_EQ(r.data.covariates()(0, 0), 1.0);
  EXPECT_EQ(r.data.covariates()(2, 0), 3.0);
}

TEST_F(IngestTest, Errors) {
  EXPECT_EQ(code_of([&] { ingest(spec(write("g.csv", "timestamp,t,f1\n2019-01-01,1,2\n"))); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { ingest(spec(write("h.csv", "timestamp,t,f1,f2\n2019-01-01,1,2\n"))); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { ingest(spec(write("i.csv", "timestamp,t,f1,f2\n2019-13-01,1,2,3\n2019-01-02,1,2,3\n"))); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { ingest(spec(write("j.csv", "timestamp,t,f1,f2\n2019-01-01,1,x,3\n2019-01-02,1,2,3\n"))); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] {
              ingest(spec(write("k.csv", "timestamp,t,f1,f2\n2019-01-01,1,2,3\n2019-01-01,1,2,3\n")));
            }),
            ErrorCode::NonMonotoneTimestamps);
  EXPECT_EQ(code_of([&] { ingest(spec((dir_ / "missing.csv").string())); }), ErrorCode::IoError);
  auto s = spec(write("l.csv", kBasic));
  s.start = "2020-01-01";
  EXPECT_EQ(code_of([&] { ingest(s); }), ErrorCode::EmptyAfterFilter);
  s.start = "2019-02-01";
  s.end = "2019-01-01";
  EXPECT_EQ(code_of([&] { ingest(s); }), ErrorCode::InvalidArgument);
  s = spec(s.path);
  s.outputs = {"t", "f1"};
  EXPECT_EQ(code_of([&] { ingest(s); }), ErrorCode::InvalidArgument);
}

TEST_F(IngestTest, CleanedOutputIsAFixedPoint) {
  const auto first = ingest(spec(write("m.csv", kBasic)));
  const auto cleaned = (dir_ / "clean.csv").string();
  write_dataset_csv(first.data, cleaned);
  const auto second = ingest(spec(cleaned));
  EXPECT_EQ(second.data.covariates(), first.data.covariates());
  EXPECT_EQ(second.data.outputs(), first.data.outputs());
  EXPECT_EQ(*second.data.timestamps(), *first.data.timestamps());
  EXPECT_EQ(second.data.fingerprint(), first.data.fingerprint());
}

TEST(Timestamps, ParseAndFormat) {
  EXPECT_EQ(parse_timestamp("1970-01-01 00:00:00"), 0.0);
  EXPECT_EQ(parse_timestamp("1970-01-02"), 86400.0);
  EXPECT_EQ(parse_timestamp("2018-10-02T01:00:00"), parse_timestamp("2018-10-02 01:00"));
  EXPECT_EQ(format_timestamp(parse_timestamp("2019-05-15 13:45:07")), "2019-05-15 13:45:07");
  EXPECT_THROW(parse_timestamp("2019/05/15"), Error);
  EXPECT_THROW(parse_timestamp("2019-02-30"), Error);
}

TEST(MissingPolicyNames, Parse) {
  EXPECT_EQ(parse_missing_policy("interpolate"), MissingPolicy::LinearInterpolate);
  EXPECT_EQ(parse_missing_policy("DropRows"), MissingPolicy::DropRows);
  EXPECT_THROW(parse_missing_policy("guess"), Error);
}
