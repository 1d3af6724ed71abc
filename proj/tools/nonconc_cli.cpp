// Command-line front end: estimate | simulate | diagnose.
#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "nonconc/csv.hpp"
#include "nonconc/diagnostics.hpp"
#include "nonconc/errors.hpp"
#include "nonconc/estimators.hpp"
#include "nonconc/report.hpp"
#include "nonconc/simulation.hpp"

namespace {

using namespace nonconc;

int default_jobs() {
  if (const char* env = std::getenv("NONCONC_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  return 1;
}

std::vector<std::string> split_tags(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    // canonical tag spelling, case-insensitive on input
    std::string t;
    for (char c : item)
      if (c != ' ') t += static_cast<char>(std::tolower(c));
    if (t == "naive") out.push_back("naive");
    else if (t == "or-oc") out.push_back("OR-oc");
    else if (t == "or-ac") out.push_back("OR-ac");
    else if (t == "ipw") out.push_back("IPW");
    else if (t == "dr-oc") out.push_back("DR-oc");
    else if (t == "dr-ac") out.push_back("DR-ac");
    else if (t == "or-ad") out.push_back("OR-ad");
    else if (t == "all") {
      for (const char* d : {"naive", "OR-oc", "OR-ac", "IPW", "DR-oc", "DR-ac"})
        out.push_back(d);
    } else
      throw usage_error("unknown estimator \"" + item + "\"");
  }
  return out;
}

DesignSpec parse_design(const std::string& text, const TrialDataset& data) {
  if (text.empty() || text == "full") return DesignSpec::full(data.covariate_dim());
  if (text == "intercept" || text == "intercept-only") return DesignSpec::intercept_only();
  DesignSpec d;
  d.include_entry_time = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, '+')) {
    if (item == "entry" || item == "e") {
      d.include_entry_time = true;
      continue;
    }
    const auto it =
        std::find(data.covariate_names.begin(), data.covariate_names.end(), item);
    if (it == data.covariate_names.end())
      throw usage_error("design: unknown covariate \"" + item + "\"");
    d.covariate_indices.push_back(
        static_cast<int>(it - data.covariate_names.begin()));
  }
  return d;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw data_error("cannot write output file: " + path);
  return file;
}

// key = value config file sharing the flag names; flags win.
std::map<std::string, std::string> load_kv_config(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw usage_error(path + ":" + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

struct EstimateArgs {
  std::string input, schema_text, output, format = "csv", design_text = "full";
  std::string estimators_text = "all";
  int contrast_arm = 1;
  std::string pattern;
  double alpha = 0.05;
  bool normalize_entry = false;
  std::string config_path;
};

ContrastSpec parse_contrast(int arm, const std::string& pattern) {
  ContrastSpec c;
  c.treated_arm = arm;
  if (pattern.empty()) return c;
  std::stringstream ss(pattern);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || item[0] != 'v')
      throw usage_error("pattern: expected v<k>=0|1 entries");
    c.conditioning[std::atoi(item.c_str() + 1)] = item.substr(eq + 1) == "1";
  }
  return c;
}

int cmd_estimate(const EstimateArgs& args) {
  CsvSchema schema = parse_schema(args.schema_text);
  schema.normalize_entry_time = args.normalize_entry;
  const TrialDataset data = ingest_csv(args.input, schema);
  const ContrastSpec contrast = parse_contrast(args.contrast_arm, args.pattern);
  const std::vector<std::string> tags = split_tags(args.estimators_text);
  const DesignSpec design = parse_design(args.design_text, data);

  bool needs_bundle = false, uses_pooling = false;
  for (const std::string& t : tags) {
    if (t != "naive") needs_bundle = true;
    if (t == "OR-ac" || t == "DR-ac" || t == "OR-ad") uses_pooling = true;
  }
  std::optional<NuisanceBundle> bundle;
  if (needs_bundle)
    bundle = fit_nuisances(data, contrast, design, DesignSpec::full(data.covariate_dim()),
                           /*deterministic_nu=*/true);

  std::vector<EstimateReport> reports;
  for (const std::string& t : tags)
    reports.push_back(t == "naive" ? estimate_naive(data, contrast)
                                   : estimate_all(data, contrast, *bundle, {t})[0]);

  std::optional<PoolingTestReport> pooling;
  if (uses_pooling) {
    try {
      pooling = pooling_test(data, contrast, design, args.alpha);
    } catch (const data_error&) {
      // no non-concurrent controls; the advisory footnote is simply omitted
    }
  }

  std::ofstream file;
  std::ostream& out = open_output(file, args.output);
  if (args.format == "json")
    write_estimate_json(out, reports, pooling, /*include_influence=*/true);
  else
    write_estimate_csv(out, reports, pooling);
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& output,
                 std::optional<std::uint64_t> seed_override, std::optional<int> jobs_override,
                 const std::string& manifest_path) {
  ScenarioConfig cfg = load_scenario_file(scenario_path);
  if (seed_override) cfg.seed = *seed_override;
  if (jobs_override)
    cfg.jobs = *jobs_override;
  else if (cfg.jobs <= 1)
    cfg.jobs = default_jobs();

  const auto t0 = std::chrono::steady_clock::now();
  const MetricsTable table = run_study(cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream file;
  std::ostream& out = open_output(file, output);
  write_metrics_csv(out, table);

  std::ofstream mf;
  const std::string mpath = manifest_path.empty()
                                ? (output.empty() || output == "-" ? "" : output + ".manifest.json")
                                : manifest_path;
  if (!mpath.empty()) {
    mf.open(mpath);
    if (!mf) throw data_error("cannot write manifest: " + mpath);
    write_manifest_json(mf, cfg, wall);
  }
  return 0;
}

int cmd_diagnose(const EstimateArgs& args) {
  CsvSchema schema = parse_schema(args.schema_text);
  schema.normalize_entry_time = args.normalize_entry;
  const TrialDataset data = ingest_csv(args.input, schema);
  const ContrastSpec contrast = parse_contrast(args.contrast_arm, args.pattern);
  const DesignSpec design = parse_design(args.design_text, data);
  const PoolingTestReport rep = pooling_test(data, contrast, design, args.alpha);

  std::ofstream file;
  std::ostream& out = open_output(file, args.output);
  write_pooling_json(out, rep);
  std::cerr << (rep.reject ? "do-not-pool" : "pool") << " at alpha=" << rep.alpha
            << " (p=" << rep.p_value << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent-ATE estimation for platform trials with non-concurrent controls"};
  app.require_subcommand(1);

  EstimateArgs eargs;
  std::string sim_scenario, sim_output, sim_manifest;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_jobs;

  CLI::App* est = app.add_subcommand("estimate", "Estimate cATE(k) from a trial CSV");
  est->add_option("--input", eargs.input, "trial CSV file")->required();
  est->add_option("--schema", eargs.schema_text,
                  "column mapping, e.g. e=entry,a=arm,y=outcome,w=age+bmi,v1=avail");
  est->add_option("--contrast-arm", eargs.contrast_arm, "treated arm index (default 1)");
  est->add_option("--pattern", eargs.pattern, "conditioning pattern, e.g. v1=1,v2=0");
  est->add_option("--estimators", eargs.estimators_text,
                  "comma list: naive,or-oc,or-ac,ipw,dr-oc,dr-ac,or-ad or 'all'");
  est->add_option("--design", eargs.design_text, "full | intercept | w1+w2+entry");
  est->add_option("--alpha", eargs.alpha, "level for the pooling advisory");
  est->add_option("--output", eargs.output, "output file ('-' for stdout)");
  est->add_option("--format", eargs.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  est->add_flag("--normalize-entry-time", eargs.normalize_entry,
                "min-max normalize entry time to [0,1]");
  est->add_option("--config", eargs.config_path, "key = value config file (flags win)");

  CLI::App* sim = app.add_subcommand("simulate", "Run a replication study from a scenario file");
  sim->add_option("scenario", sim_scenario, "scenario file (key = value)")->required();
  sim->add_option("--output", sim_output, "metrics CSV ('-' for stdout)");
  sim->add_option("--manifest", sim_manifest, "manifest JSON path");
  sim->add_option("--seed", sim_seed, "seed override");
  sim->add_option("--jobs", sim_jobs, "parallel replications (env NONCONC_JOBS)");

  CLI::App* diag = app.add_subcommand("diagnose", "Pooling test for non-concurrent controls");
  diag->add_option("--input", eargs.input, "trial CSV file")->required();
  diag->add_option("--schema", eargs.schema_text, "column mapping");
  diag->add_option("--contrast-arm", eargs.contrast_arm, "treated arm index");
  diag->add_option("--pattern", eargs.pattern, "conditioning pattern");
  diag->add_option("--design", eargs.design_text, "full | intercept | w1+w2+entry");
  diag->add_option("--alpha", eargs.alpha, "test level (default 0.05)");
  diag->add_option("--output", eargs.output, "output JSON ('-' for stdout)");
  diag->add_flag("--normalize-entry-time", eargs.normalize_entry,
                 "min-max normalize entry time to [0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    // config file values fill flags the user did not pass
    if (!eargs.config_path.empty()) {
      const auto kv = load_kv_config(eargs.config_path);
      const auto fill = [&](const char* flag, const char* key, auto& value) {
        CLI::App* sub = est->parsed() ? est : diag;
        if (sub->count(flag) == 0)
          if (auto it = kv.find(key); it != kv.end()) {
            std::stringstream ss(it->second);
            ss >> value;
          }
      };
      fill("--schema", "schema", eargs.schema_text);
      fill("--contrast-arm", "contrast_arm", eargs.contrast_arm);
      fill("--pattern", "pattern", eargs.pattern);
      fill("--estimators", "estimators", eargs.estimators_text);
      fill("--design", "design", eargs.design_text);
      fill("--alpha", "alpha", eargs.alpha);
      fill("--output", "output", eargs.output);
      fill("--format", "format", eargs.format);
    }
    if (est->parsed()) return cmd_estimate(eargs);
    if (sim->parsed())
      return cmd_simulate(sim_scenario, sim_output, sim_seed, sim_jobs, sim_manifest);
    if (diag->parsed()) return cmd_diagnose(eargs);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
