#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nonconc {

// One participant: entry time E, covariates W, per-arm availability V,
// assigned arm A, outcome Y.
struct TrialRecord {
  double entry_time = 0.0;
  std::vector<double> covariates;
  std::vector<std::uint8_t> availability;  // indexed by arm, availability[0] == 1
  int arm = 0;
  double outcome = 0.0;
};

// Immutable after construction; records are kept sorted by entry time.
struct TrialDataset {
  std::vector<TrialRecord> records;
  std::vector<std::string> covariate_names;
  int arm_count = 2;  // K + 1

  int n() const { return static_cast<int>(records.size()); }
  int covariate_dim() const { return static_cast<int>(covariate_names.size()); }

  // Sorts by entry time (stable) and returns the dataset.
  static TrialDataset from_records(std::vector<TrialRecord> records,
                                   std::vector<std::string> covariate_names,
                                   int arm_count);
};

// Which contrast to estimate: treated arm k vs shared control, within the
// availability pattern. An empty pattern means {treated_arm: 1}.
struct ContrastSpec {
  int treated_arm = 1;
  std::map<int, bool> conditioning;  // arm index -> required availability bit

  bool satisfied(const TrialRecord& r) const;
};

struct Violation {
  int row;  // -1 for dataset-level rules
  std::string rule;
};

// Structural checks; empty result means the dataset is well formed.
std::vector<Violation> validate(const TrialDataset& data);

// Records satisfying the contrast's conditioning pattern, order preserved.
// Throws data_error when the subset is empty (cATE undefined).
TrialDataset concurrent_subset(const TrialDataset& data, const ContrastSpec& contrast);

}  // namespace nonconc
