#include "nonconc/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nonconc/errors.hpp"

namespace nonconc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& cell, int row, const std::string& column) {
  if (cell.empty())
    throw data_error("csv: empty cell at row " + std::to_string(row) + ", column " + column);
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || !std::isfinite(v))
    throw data_error("csv: cannot parse \"" + cell + "\" at row " + std::to_string(row) +
                     ", column " + column);
  return v;
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw data_error("csv: missing column \"" + name + "\"");
  return static_cast<int>(it - header.begin());
}

}  // namespace

TrialDataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw data_error("csv: empty input: " + path);
  const std::vector<std::string> header = split_line(line);

  const int ie = column_index(header, schema.entry_column);
  const int ia = column_index(header, schema.arm_column);
  const int iy = column_index(header, schema.outcome_column);
  std::vector<int> iw;
  for (const std::string& c : schema.covariate_columns) iw.push_back(column_index(header, c));
  std::map<int, int> iv;
  for (const auto& [arm, col] : schema.availability_columns)
    iv[arm] = column_index(header, col);

  int arm_count = 2;
  for (const auto& [arm, col] : schema.availability_columns)
    arm_count = std::max(arm_count, arm + 1);
  for (const auto& [arm, t] : schema.availability_thresholds)
    arm_count = std::max(arm_count, arm + 1);

  std::vector<TrialRecord> records;
  std::vector<std::map<int, std::uint8_t>> explicit_avail;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw data_error("csv: row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    TrialRecord r;
    r.entry_time = parse_number(cells[ie], row, schema.entry_column);
    const double arm_val = parse_number(cells[ia], row, schema.arm_column);
    r.arm = static_cast<int>(arm_val);
    if (r.arm != arm_val || r.arm < 0)
      throw data_error("csv: non-integer arm at row " + std::to_string(row));
    arm_count = std::max(arm_count, r.arm + 1);
    r.outcome = parse_number(cells[iy], row, schema.outcome_column);
    for (std::size_t j = 0; j < iw.size(); ++j)
      r.covariates.push_back(parse_number(cells[iw[j]], row, schema.covariate_columns[j]));
    std::map<int, std::uint8_t> bits;
    for (const auto& [arm, col] : iv) {
      const double b = parse_number(cells[col], row, schema.availability_columns.at(arm));
      if (b != 0.0 && b != 1.0)
        throw data_error("csv: availability column must be 0/1 at row " +
                         std::to_string(row));
      bits[arm] = static_cast<std::uint8_t>(b);
    }
    records.push_back(std::move(r));
    explicit_avail.push_back(std::move(bits));
  }
  if (records.empty()) throw data_error("csv: no data rows in " + path);

  if (schema.normalize_entry_time) {
    double lo = records[0].entry_time, hi = records[0].entry_time;
    for (const TrialRecord& r : records) {
      lo = std::min(lo, r.entry_time);
      hi = std::max(hi, r.entry_time);
    }
    if (hi == lo) throw data_error("csv: cannot normalize constant entry time");
    for (TrialRecord& r : records) r.entry_time = (r.entry_time - lo) / (hi - lo);
  }

  // materialize availability (explicit columns win over threshold rules;
  // thresholds apply on the possibly-normalized entry time)
  for (std::size_t i = 0; i < records.size(); ++i) {
    TrialRecord& r = records[i];
    r.availability.assign(arm_count, 1);
    for (int k = 1; k < arm_count; ++k) {
      if (auto it = explicit_avail[i].find(k); it != explicit_avail[i].end())
        r.availability[k] = it->second;
      else if (auto th = schema.availability_thresholds.find(k);
               th != schema.availability_thresholds.end())
        r.availability[k] = r.entry_time > th->second ? 1 : 0;
    }
  }

  TrialDataset data =
      TrialDataset::from_records(std::move(records), schema.covariate_columns, arm_count);
  const std::vector<Violation> bad = validate(data);
  if (!bad.empty())
    throw data_error("csv: structural violation at row " + std::to_string(bad[0].row) +
                     ": " + bad[0].rule);
  return data;
}

void export_csv(const TrialDataset& data, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write file: " + path);
  out.precision(17);
  out << schema.entry_column;
  for (const std::string& c :
       (schema.covariate_columns.empty() ? data.covariate_names : schema.covariate_columns))
    out << ',' << c;
  for (int k = 1; k < data.arm_count; ++k) {
    const auto it = schema.availability_columns.find(k);
    out << ',' << (it != schema.availability_columns.end() ? it->second
                                                           : "v" + std::to_string(k));
  }
  out << ',' << schema.arm_column << ',' << schema.outcome_column << '\n';
  for (const TrialRecord& r : data.records) {
    out << r.entry_time;
    for (double w : r.covariates) out << ',' << w;
    for (int k = 1; k < data.arm_count; ++k) out << ',' << int(r.availability[k]);
    out << ',' << r.arm << ',' << r.outcome << '\n';
  }
}

CsvSchema parse_schema(const std::string& text) {
  CsvSchema s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw usage_error("schema: expected key=value in \"" + item + "\"");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "e")
      s.entry_column = val;
    else if (key == "a")
      s.arm_column = val;
    else if (key == "y")
      s.outcome_column = val;
    else if (key == "w") {
      std::stringstream ws(val);
      std::string c;
      while (std::getline(ws, c, '+'))
        if (!c.empty()) s.covariate_columns.push_back(c);
    } else if (key.size() > 1 && key[0] == 'v') {
      const int arm = std::atoi(key.c_str() + 1);
      if (arm < 1) throw usage_error("schema: bad availability key \"" + key + "\"");
      if (!val.empty() && val[0] == '@')
        s.availability_thresholds[arm] = std::atof(val.c_str() + 1);
      else
        s.availability_columns[arm] = val;
    } else {
      throw usage_error("schema: unknown key \"" + key + "\"");
    }
  }
  return s;
}

}  // namespace nonconc
