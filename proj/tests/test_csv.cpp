#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nonconc/csv.hpp"
#include "nonconc/errors.hpp"
#include "test_helpers.hpp"

using namespace nonconc;
using namespace nonconc::testing;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = "nonconc_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

CsvSchema basic_schema() {
  CsvSchema s;
  s.entry_column = "e";
  s.arm_column = "a";
  s.outcome_column = "y";
  s.covariate_columns = {"w1"};
  s.availability_columns[1] = "v1";
  return s;
}

}  // namespace

TEST_CASE("ingest reads and sorts a 3-row csv") {
  TempFile f("e,w1,v1,a,y\n0.5,1.0,1,1,2.0\n0.1,0.5,1,0,1.0\n0.3,0.2,1,0,1.5\n");
  const TrialDataset d = ingest_csv(f.path, basic_schema());
  REQUIRE(d.n() == 3);
  CHECK(d.records[0].entry_time == 0.1);
  CHECK(d.records[2].entry_time == 0.5);
  CHECK(d.records[2].arm == 1);
  CHECK(d.covariate_names == std::vector<std::string>{"w1"});
}

TEST_CASE("ingest rejects NA cells naming the row") {
  TempFile f("e,w1,v1,a,y\n0.5,1.0,1,1,NA\n");
  try {
    ingest_csv(f.path, basic_schema());
    FAIL("expected data_error");
  } catch (const data_error& err) {
    CHECK(std::string(err.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("ingest rejects a missing column by name") {
  TempFile f("e,w1,a,y\n0.5,1.0,1,2.0\n");
  try {
    ingest_csv(f.path, basic_schema());
    FAIL("expected data_error");
  } catch (const data_error& err) {
    CHECK(std::string(err.what()).find("v1") != std::string::npos);
  }
}

TEST_CASE("ingest rejects an empty file") {
  TempFile f("");
  CHECK_THROWS_AS(ingest_csv(f.path, basic_schema()), data_error);
}

TEST_CASE("entry-time normalization is min-max") {
  TempFile f("e,w1,v1,a,y\n5,0,1,0,0\n10,0,1,0,0\n20,0,1,1,0\n");
  CsvSchema s = basic_schema();
  s.normalize_entry_time = true;
  const TrialDataset d = ingest_csv(f.path, s);
  CHECK(d.records[0].entry_time == doctest::Approx(0.0));
  CHECK(d.records[1].entry_time == doctest::Approx(1.0 / 3.0));
  CHECK(d.records[2].entry_time == doctest::Approx(1.0));
}

TEST_CASE("availability can come from a threshold rule") {
  TempFile f("e,w1,a,y\n0.2,0,0,0\n0.6,0,1,1\n0.9,0,0,0\n");
  CsvSchema s = basic_schema();
  s.availability_columns.clear();
  s.availability_thresholds[1] = 0.5;  // V1 = 1[e > 0.5]
  const TrialDataset d = ingest_csv(f.path, s);
  CHECK(d.records[0].availability[1] == 0);
  CHECK(d.records[1].availability[1] == 1);
  CHECK(d.records[2].availability[1] == 1);
}

TEST_CASE("export then ingest round-trips the data model") {
  std::vector<TrialRecord> rs;
  for (int i = 0; i < 25; ++i)
    rs.push_back(rec(0.017 * i + 0.001, {1.0 / (i + 1), i * 0.3}, i % 3 != 0,
                     (i % 3 != 0 && i % 2 == 0) ? 1 : 0, std::sin(i * 2.7) * 5));
  auto data = make_dataset(std::move(rs), {"w1", "w2"});
  CsvSchema s = basic_schema();
  s.covariate_columns = {"w1", "w2"};
  TempFile f("");
  export_csv(data, f.path, s);
  const TrialDataset back = ingest_csv(f.path, s);
  REQUIRE(back.n() == data.n());
  for (int i = 0; i < data.n(); ++i) {
    CHECK(back.records[i].entry_time == data.records[i].entry_time);
    CHECK(back.records[i].arm == data.records[i].arm);
    CHECK(back.records[i].outcome == data.records[i].outcome);
    CHECK(back.records[i].availability == data.records[i].availability);
    CHECK(back.records[i].covariates == data.records[i].covariates);
  }
}

TEST_CASE("schema string parser") {
  const CsvSchema s = parse_schema("e=entry,a=arm,y=out,w=age+bmi,v1=open1,v2=@0.25");
  CHECK(s.entry_column == "entry");
  CHECK(s.arm_column == "arm");
  CHECK(s.outcome_column == "out");
  CHECK(s.covariate_columns == std::vector<std::string>{"age", "bmi"});
  CHECK(s.availability_columns.at(1) == "open1");
  CHECK(s.availability_thresholds.at(2) == 0.25);
  CHECK_THROWS_AS(parse_schema("bogus=1"), usage_error);
}
