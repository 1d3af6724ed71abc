#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nonconc/dataset.hpp"
#include "nonconc/regression.hpp"

namespace nonconc {

// Stacked estimating equations sum_i h(Z_i, theta) = 0 with a block
// lower-triangular Jacobian. theta holds the regression coefficients followed
// by the marginal-mean components; `contrast` selects the linear combination
// whose SE is wanted (mu_treated - mu_control for the cATE stacks).
struct EstimatingStack {
  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> score;
  // -dh/dtheta^T for one record
  std::function<Eigen::MatrixXd(int, const Eigen::VectorXd&)> neg_jacobian;
  Eigen::VectorXd theta;
  int n = 0;
  std::vector<std::pair<std::string, std::pair<int, int>>> blocks;  // name -> {offset, size}
  Eigen::VectorXd contrast;

  std::pair<int, int> block(const std::string& name) const;
};

struct SandwichResult {
  Eigen::MatrixXd cov;         // covariance of theta-hat, (1/n) G^-1 B G^-T
  Eigen::MatrixXd mean_neg_jacobian;
  double se = 0.0;             // of contrast' theta
  std::vector<double> influence;  // per-record contrast influence values
};

// Influence decomposition phi_i = G^-1 h_i; covariance (1/n) mean(phi phi').
// Throws numeric_error when the mean Jacobian is singular.
SandwichResult sandwich(const EstimatingStack& stack);

struct WaldSummary {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

// SE = sqrt(pop-variance(influence)/n), 1.96-Wald CI, two-sided normal p.
WaldSummary eif_variance(const std::vector<double>& influence, double point);

// The treated/control index machinery shared by the estimator stacks: rows
// with arm in {0, k} and their concurrency bits under the contrast.
struct AnalysisFrame {
  std::vector<int> rows;           // dataset row indices, arm in {0, k}
  std::vector<std::uint8_t> conc;  // conditioning pattern satisfied, per analysis row
  int treated_arm = 1;
  int n = 0;
  int n_concurrent = 0;
  double concurrent_fraction() const { return static_cast<double>(n_concurrent) / n; }
};

AnalysisFrame make_frame(const TrialDataset& data, const ContrastSpec& contrast);

// M-estimation stacks from the appendix. `fits` must be the corresponding
// regression fits (coefficients enter theta verbatim; the marginal-mean
// components are solved from the stack's own equations).
EstimatingStack build_or_oc_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                  const ModelFit& mu_oc_control,
                                  const ModelFit& mu_oc_treated);
EstimatingStack build_or_ac_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                  const ModelFit& mu_all_control,
                                  const ModelFit& mu_oc_treated);
EstimatingStack build_ipw_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                const ModelFit& pi_oc);
// Unconditional-average version backing the ATE(k) extrapolation estimator.
EstimatingStack build_or_ate_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                   const ModelFit& mu_all_control,
                                   const ModelFit& mu_oc_treated);
// Single-component h = y - mu stack (classical sample-mean sandwich).
EstimatingStack build_mean_stack(const std::vector<double>& values);

}  // namespace nonconc
