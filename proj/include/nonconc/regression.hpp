#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonconc/dataset.hpp"
#include "nonconc/design.hpp"

namespace nonconc {

enum class Link { identity, logit };

struct ModelFit {
  Eigen::VectorXd coef;
  DesignSpec design;
  Link link = Link::identity;
  std::string fit_subset;  // descriptor of the rows used, e.g. "arm=0 & V1=1"
  bool converged = true;
  int iterations = 0;
};

struct LogisticOptions {
  double tol = 1e-10;          // on the max-absolute score
  int max_iterations = 100;
  int max_halvings = 20;
  double separation_bound = 1e3;  // |coef|_inf beyond this with non-vanishing score
  std::vector<double>* loglik_trace = nullptr;  // per-iteration log-likelihood, if set
};

// Ordinary least squares on the given rows, solved by column-pivoted QR.
// Throws numeric_error on rank deficiency (naming the dependent column) and
// data_error when rows is empty or smaller than the column count.
ModelFit fit_ols(const TrialDataset& data, const std::vector<int>& rows,
                 const DesignSpec& design, const std::string& subset_label);

// Newton-Raphson logistic regression with step-halving on the log-likelihood.
// target(record) must return 0 or 1. Throws data_error for a single-class
// target and numeric_error on detected separation.
ModelFit fit_logistic(const TrialDataset& data, const std::vector<int>& rows,
                      const DesignSpec& design,
                      const std::function<int(const TrialRecord&)>& target,
                      const std::string& subset_label,
                      const LogisticOptions& options = {});

// x'beta under the identity link, expit(x'beta) under the logit link.
double predict(const ModelFit& fit, const TrialRecord& r,
               std::optional<int> override_arm = std::nullopt);

double expit(double x);

// Log-likelihood of a logistic fit's coefficient vector on the given rows
// (exposed for the monotonicity property test).
double logistic_loglik(const TrialDataset& data, const std::vector<int>& rows,
                       const DesignSpec& design,
                       const std::function<int(const TrialRecord&)>& target,
                       const Eigen::VectorXd& coef);

}  // namespace nonconc
