#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "nonconc/csv.hpp"
#include "nonconc/simulation.hpp"

using namespace nonconc;

namespace {

const char* cli = NONCONC_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Cleanup {
  std::vector<std::string> paths;
  ~Cleanup() {
    for (const auto& p : paths) std::remove(p.c_str());
  }
};

void write_demo_csv(const std::string& path, int n = 400) {
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.seed = 12345;
  const TrialDataset d = generate_single_arm(cfg, 0.5, 0);
  CsvSchema s;
  s.covariate_columns = {"w1"};
  s.availability_columns[1] = "v1";
  export_csv(d, path, s);
}

}  // namespace

TEST_CASE("estimate writes a six-row table with ratio column") {
  Cleanup c{{"cli_demo.csv", "cli_report.csv"}};
  write_demo_csv("cli_demo.csv");
  const int rc = run(
      "estimate --input cli_demo.csv --schema e=e,a=a,y=y,w=w1,v1=v1 "
      "--estimators all --output cli_report.csv");
  CHECK(rc == 0);
  const std::string report = slurp("cli_report.csv");
  CHECK(report.find("method,estimate,se,ci_low,ci_high,p_value,p_display,"
                    "se_ratio_vs_naive") == 0);
  for (const char* tag : {"naive", "OR-oc", "OR-ac", "IPW", "DR-oc", "DR-ac"})
    CHECK(report.find(std::string("\n") + tag + ",") != std::string::npos);
  // pooling advisory footnote accompanies the all-controls estimators
  CHECK(report.find("# pooling-test:") != std::string::npos);
}

TEST_CASE("estimate with a single estimator emits one data row") {
  Cleanup c{{"cli_demo1.csv", "cli_report1.csv"}};
  write_demo_csv("cli_demo1.csv");
  const int rc = run(
      "estimate --input cli_demo1.csv --schema e=e,a=a,y=y,w=w1,v1=v1 "
      "--estimators naive --output cli_report1.csv");
  CHECK(rc == 0);
  std::istringstream in(slurp("cli_report1.csv"));
  std::string line;
  int data_rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.rfind("method,", 0) != 0) ++data_rows;
  CHECK(data_rows == 1);
}

TEST_CASE("missing input file exits with the data-error code") {
  CHECK(run("estimate --input no_such_file.csv") == 2);
}

TEST_CASE("bad usage exits with code 1") {
  CHECK(run("estimate") == 1);
  CHECK(run("frobnicate") == 1);
}

TEST_CASE("json report includes influence vectors for DR estimators") {
  Cleanup c{{"cli_demo2.csv", "cli_report2.json"}};
  write_demo_csv("cli_demo2.csv");
  const int rc = run(
      "estimate --input cli_demo2.csv --schema e=e,a=a,y=y,w=w1,v1=v1 "
      "--estimators dr-oc --format json --output cli_report2.json");
  CHECK(rc == 0);
  const std::string report = slurp("cli_report2.json");
  CHECK(report.find("\"influence\"") != std::string::npos);
  CHECK(report.find("\"method\": \"DR-oc\"") != std::string::npos);
}

TEST_CASE("simulate is byte-identical for identical config and seed") {
  Cleanup c{{"cli_scn.txt", "m1.csv", "m2.csv", "m1.csv.manifest.json",
             "m2.csv.manifest.json"}};
  {
    std::ofstream out("cli_scn.txt");
    out << "n = 300\nreps = 8\nseed = 5\nfractions = 0.5\n"
        << "estimators = OR-oc, DR-oc\nname = determinism\n";
  }
  CHECK(run("simulate cli_scn.txt --output m1.csv") == 0);
  CHECK(run("simulate cli_scn.txt --output m2.csv") == 0);
  CHECK(slurp("m1.csv") == slurp("m2.csv"));
  CHECK(!slurp("m1.csv").empty());
  // manifest carries seed, generator and config echo
  const std::string manifest = slurp("m1.csv.manifest.json");
  CHECK(manifest.find("splitmix64-counter/as241") != std::string::npos);
  CHECK(manifest.find("\"seed\": 5") != std::string::npos);
}

TEST_CASE("simulate rejects reps below two with a scenario error") {
  Cleanup c{{"cli_scn_bad.txt"}};
  {
    std::ofstream out("cli_scn_bad.txt");
    out << "n = 300\nreps = 1\nfractions = 0.5\n";
  }
  CHECK(run("simulate cli_scn_bad.txt --output -") == 1);
}

TEST_CASE("diagnose emits the pooling report json and exit code zero") {
  Cleanup c{{"cli_demo3.csv", "cli_pool.json"}};
  write_demo_csv("cli_demo3.csv");
  const int rc = run(
      "diagnose --input cli_demo3.csv --schema e=e,a=a,y=y,w=w1,v1=v1 "
      "--output cli_pool.json");
  CHECK(rc == 0);
  const std::string rep = slurp("cli_pool.json");
  CHECK(rep.find("\"statistic\"") != std::string::npos);
  CHECK(rep.find("\"dof\": 3") != std::string::npos);
  CHECK(rep.find("\"decision\"") != std::string::npos);
}

TEST_CASE("diagnose without non-concurrent controls exits with the data-error code") {
  Cleanup c{{"cli_demo4.csv"}};
  {
    std::ofstream out("cli_demo4.csv");
    out << "e,w1,v1,a,y\n";
    for (int i = 0; i < 30; ++i)
      out << 0.01 * i << ",0.5," << 1 << ',' << i % 2 << ',' << 1.0 * i << '\n';
  }
  CHECK(run("diagnose --input cli_demo4.csv --schema e=e,a=a,y=y,w=w1,v1=v1") == 2);
}
