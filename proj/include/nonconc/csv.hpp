#pragma once

#include <map>
#include <string>
#include <vector>

#include "nonconc/dataset.hpp"

namespace nonconc {

// Column-name mapping for trial CSV files. Availability per arm comes either
// from a 0/1 column or from a threshold rule V_k = 1[entry_time > t_k];
// arms without either are treated as available throughout.
struct CsvSchema {
  std::string entry_column = "e";
  std::string arm_column = "a";
  std::string outcome_column = "y";
  std::vector<std::string> covariate_columns;
  std::map<int, std::string> availability_columns;   // arm k -> column name
  std::map<int, double> availability_thresholds;     // arm k -> t_k
  bool normalize_entry_time = false;                 // min-max to [0, 1]
};

// Reads and validates a trial dataset (header row required, '.' decimals,
// UTF-8). Records come back sorted by entry time. Throws data_error naming
// the missing column or the offending row/column on parse failures.
TrialDataset ingest_csv(const std::string& path, const CsvSchema& schema);

// Writes the dataset with the schema's column names (inverse of ingest).
void export_csv(const TrialDataset& data, const std::string& path,
                const CsvSchema& schema);

// Schema string parser for the CLI: "e=entry,a=arm,y=outcome,w=age+bmi,v1=avail1"
// (v<k>=@<t> gives a threshold rule instead of a column).
CsvSchema parse_schema(const std::string& text);

}  // namespace nonconc
