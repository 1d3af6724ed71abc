#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonconc/dataset.hpp"
#include "nonconc/inference.hpp"
#include "nonconc/regression.hpp"

namespace nonconc {

// Fitted nuisance functions for one contrast. P(A=k | W, E) factorizes by the
// trial structure as nu(w,e) * pi_oc(w,e); the bundle therefore carries the
// availability model instead of a separate marginal assignment fit.
struct NuisanceBundle {
  ModelFit mu_oc_treated;   // E[Y | A=k, W, E, concurrent]
  ModelFit mu_oc_control;   // E[Y | A=0, W, E, concurrent]
  ModelFit mu_all_control;  // E[Y | A=0, W, E] on all controls
  ModelFit pi_oc;           // P(A=k | W, E, concurrent), logit
  bool nu_deterministic = true;
  std::optional<ModelFit> nu_fit;  // P(concurrent | W, E), logit, when stochastic

  // nu(w, e): the availability bit itself in the deterministic case.
  double nu(const TrialRecord& r, bool concurrent_bit) const;
};

struct EstimateReport {
  std::string estimator;  // naive, OR-oc, OR-ac, IPW, DR-oc, DR-ac, OR-ad
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  int n_used = 0;
  std::vector<double> influence;  // per-unit EIF values (DR estimators only)
  bool extrapolation_warning = false;
};

EstimateReport make_report(const std::string& tag, double point, double se, int n_used);

// Fits every nuisance the estimators need. nu_design is used only when
// deterministic_nu is false.
NuisanceBundle fit_nuisances(const TrialDataset& data, const ContrastSpec& contrast,
                             const DesignSpec& outcome_design,
                             const DesignSpec& treatment_design, bool deterministic_nu,
                             std::optional<DesignSpec> nu_design = std::nullopt);

// Difference of concurrent arm means, unpooled two-sample SE.
EstimateReport estimate_naive(const TrialDataset& data, const ContrastSpec& contrast);

// Outcome-regression estimators (concurrent-controls and all-controls fits),
// SEs from the stacked M-estimation sandwich.
EstimateReport estimate_or_oc(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances);
EstimateReport estimate_or_ac(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances);

// Hajek inverse-probability-weighted contrast on concurrent units.
EstimateReport estimate_ipw(const TrialDataset& data, const ContrastSpec& contrast,
                            const NuisanceBundle& nuisances);

// Doubly robust estimators; per-unit influence stored, SE from its variance.
EstimateReport estimate_dr_oc(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances);
EstimateReport estimate_dr_ac(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances);

// ATE(k) extrapolation estimator (assumption-dependent; flagged in the report).
EstimateReport estimate_or_ate(const TrialDataset& data, const ContrastSpec& contrast,
                               const NuisanceBundle& nuisances);

// Runs the named estimators ("naive", "OR-oc", "OR-ac", "IPW", "DR-oc",
// "DR-ac", "OR-ad") in the given order.
std::vector<EstimateReport> estimate_all(const TrialDataset& data,
                                         const ContrastSpec& contrast,
                                         const NuisanceBundle& nuisances,
                                         const std::vector<std::string>& tags);

inline constexpr double kPositivityEps = 1e-6;

}  // namespace nonconc
