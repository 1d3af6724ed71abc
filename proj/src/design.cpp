#include "nonconc/design.hpp"

#include "nonconc/errors.hpp"

namespace nonconc {

DesignSpec DesignSpec::full(int covariate_dim) {
  DesignSpec d;
  for (int i = 0; i < covariate_dim; ++i) d.covariate_indices.push_back(i);
  return d;
}

DesignSpec DesignSpec::intercept_only() {
  DesignSpec d;
  d.include_entry_time = false;
  return d;
}

std::string DesignSpec::column_name(int j,
                                    const std::vector<std::string>& covariate_names) const {
  int idx = j;
  if (include_intercept) {
    if (idx == 0) return "(intercept)";
    --idx;
  }
  if (idx < static_cast<int>(covariate_indices.size())) {
    const int c = covariate_indices[idx];
    if (c < static_cast<int>(covariate_names.size())) return covariate_names[c];
    return "w" + std::to_string(c);
  }
  idx -= static_cast<int>(covariate_indices.size());
  if (include_entry_time) {
    if (idx == 0) return "entry_time";
    --idx;
  }
  if (include_arm && idx == 0) return "arm";
  return "column" + std::to_string(j);
}

Eigen::RowVectorXd design_row(const DesignSpec& design, const TrialRecord& r,
                              std::optional<int> override_arm) {
  Eigen::RowVectorXd x(design.columns());
  int j = 0;
  if (design.include_intercept) x(j++) = 1.0;
  for (int c : design.covariate_indices) {
    if (c >= static_cast<int>(r.covariates.size()))
      throw numeric_error("design/record covariate dimension mismatch");
    x(j++) = r.covariates[c];
  }
  if (design.include_entry_time) x(j++) = r.entry_time;
  if (design.include_arm) x(j++) = static_cast<double>(override_arm.value_or(r.arm));
  return x;
}

Eigen::MatrixXd design_matrix(const DesignSpec& design, const TrialDataset& data,
                              const std::vector<int>& rows) {
  Eigen::MatrixXd X(static_cast<int>(rows.size()), design.columns());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    X.row(i) = design_row(design, data.records[rows[i]]);
  return X;
}

}  // namespace nonconc
