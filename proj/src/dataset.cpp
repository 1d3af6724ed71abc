#include "nonconc/dataset.hpp"

#include <algorithm>
#include <limits>

#include "nonconc/errors.hpp"

namespace nonconc {

TrialDataset TrialDataset::from_records(std::vector<TrialRecord> records,
                                        std::vector<std::string> covariate_names,
                                        int arm_count) {
  std::stable_sort(records.begin(), records.end(),
                   [](const TrialRecord& a, const TrialRecord& b) {
                     return a.entry_time < b.entry_time;
                   });
  TrialDataset d;
  d.records = std::move(records);
  d.covariate_names = std::move(covariate_names);
  d.arm_count = arm_count;
  return d;
}

bool ContrastSpec::satisfied(const TrialRecord& r) const {
  if (conditioning.empty()) {
    return treated_arm < static_cast<int>(r.availability.size()) &&
           r.availability[treated_arm] == 1;
  }
  for (const auto& [arm, bit] : conditioning) {
    if (arm >= static_cast<int>(r.availability.size())) return false;
    if ((r.availability[arm] != 0) != bit) return false;
  }
  return true;
}

std::vector<Violation> validate(const TrialDataset& data) {
  std::vector<Violation> out;
  const int p = data.covariate_dim();
  bool has_control = false;
  double prev_entry = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < data.n(); ++i) {
    const TrialRecord& r = data.records[i];
    if (static_cast<int>(r.covariates.size()) != p)
      out.push_back({i, "covariate dimension mismatch"});
    if (static_cast<int>(r.availability.size()) != data.arm_count)
      out.push_back({i, "availability vector length != arm count"});
    else {
      if (r.availability[0] != 1) out.push_back({i, "control arm marked unavailable"});
      if (r.arm < 0 || r.arm >= data.arm_count)
        out.push_back({i, "arm index out of range"});
      else if (r.availability[r.arm] != 1)
        out.push_back({i, "assigned unavailable arm"});
    }
    if (r.entry_time < prev_entry) out.push_back({i, "records not ordered by entry time"});
    prev_entry = r.entry_time;
    if (r.arm == 0) has_control = true;
  }
  if (!has_control && data.n() > 0) out.push_back({-1, "no control-arm records"});
  return out;
}

TrialDataset concurrent_subset(const TrialDataset& data, const ContrastSpec& contrast) {
  TrialDataset out;
  out.covariate_names = data.covariate_names;
  out.arm_count = data.arm_count;
  for (const TrialRecord& r : data.records)
    if (contrast.satisfied(r)) out.records.push_back(r);
  if (out.records.empty())
    throw data_error("concurrent subset is empty: cATE(" +
                     std::to_string(contrast.treated_arm) + ") is undefined");
  return out;
}

}  // namespace nonconc
