#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nonconc/dataset.hpp"

namespace nonconc {

// Regressor set for the parametric working models. Column order:
// [intercept, covariates..., entry_time, arm].
struct DesignSpec {
  bool include_intercept = true;
  std::vector<int> covariate_indices;
  bool include_entry_time = true;
  bool include_arm = false;

  int columns() const {
    return (include_intercept ? 1 : 0) + static_cast<int>(covariate_indices.size()) +
           (include_entry_time ? 1 : 0) + (include_arm ? 1 : 0);
  }

  // intercept + all covariates + entry time
  static DesignSpec full(int covariate_dim);
  static DesignSpec intercept_only();

  std::string column_name(int j, const std::vector<std::string>& covariate_names) const;
};

// Row of regressors for one record; override_arm substitutes the arm column
// when the design includes one.
Eigen::RowVectorXd design_row(const DesignSpec& design, const TrialRecord& r,
                              std::optional<int> override_arm = std::nullopt);

// Design matrix over the given rows of the dataset.
Eigen::MatrixXd design_matrix(const DesignSpec& design, const TrialDataset& data,
                              const std::vector<int>& rows);

}  // namespace nonconc
