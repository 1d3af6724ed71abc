#pragma once

#include <vector>

#include "nonconc/dataset.hpp"

namespace nonconc::testing {

// Small hand-built dataset helper: one covariate unless widths say otherwise.
inline TrialRecord rec(double e, std::vector<double> w, int v1, int arm, double y) {
  TrialRecord r;
  r.entry_time = e;
  r.covariates = std::move(w);
  r.availability = {1, static_cast<std::uint8_t>(v1)};
  r.arm = arm;
  r.outcome = y;
  return r;
}

inline TrialDataset make_dataset(std::vector<TrialRecord> records,
                                 std::vector<std::string> names = {"w1"},
                                 int arm_count = 2) {
  return TrialDataset::from_records(std::move(records), std::move(names), arm_count);
}

}  // namespace nonconc::testing
