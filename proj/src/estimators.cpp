#include "nonconc/estimators.hpp"

#include <cmath>

#include "nonconc/errors.hpp"
#include "nonconc/stats.hpp"

namespace nonconc {

double NuisanceBundle::nu(const TrialRecord& r, bool concurrent_bit) const {
  if (nu_deterministic) return concurrent_bit ? 1.0 : 0.0;
  return predict(*nu_fit, r);
}

EstimateReport make_report(const std::string& tag, double point, double se, int n_used) {
  EstimateReport rep;
  rep.estimator = tag;
  rep.point = point;
  rep.se = se;
  rep.ci_low = point - 1.96 * se;
  rep.ci_high = point + 1.96 * se;
  rep.p_value = se > 0.0 ? two_sided_p(point / se) : (point == 0.0 ? 1.0 : 0.0);
  rep.n_used = n_used;
  return rep;
}

namespace {

std::string conc_label(const ContrastSpec& contrast) {
  if (contrast.conditioning.empty())
    return "V" + std::to_string(contrast.treated_arm) + "=1";
  std::string s;
  for (const auto& [arm, bit] : contrast.conditioning) {
    if (!s.empty()) s += " & ";
    s += "V" + std::to_string(arm) + "=" + (bit ? "1" : "0");
  }
  return s;
}

// Fitted treatment probability for a concurrent record, with the positivity
// guard (hard error, not truncation).
double guarded_pi(const NuisanceBundle& nu, const TrialRecord& r, int row) {
  const double pi = predict(nu.pi_oc, r);
  if (!(pi > kPositivityEps && pi < 1.0 - kPositivityEps))
    throw numeric_error("positivity violation: fitted propensity " + std::to_string(pi) +
                        " at row " + std::to_string(row));
  return pi;
}

}  // namespace

NuisanceBundle fit_nuisances(const TrialDataset& data, const ContrastSpec& contrast,
                             const DesignSpec& outcome_design,
                             const DesignSpec& treatment_design, bool deterministic_nu,
                             std::optional<DesignSpec> nu_design) {
  const AnalysisFrame frame = make_frame(data, contrast);
  const int k = contrast.treated_arm;
  std::vector<int> treated_conc, control_conc, control_all, conc_rows;
  for (int i = 0; i < frame.n; ++i) {
    const int row = frame.rows[i];
    const bool treated = data.records[row].arm == k;
    if (frame.conc[i]) {
      conc_rows.push_back(row);
      (treated ? treated_conc : control_conc).push_back(row);
    }
    if (!treated) control_all.push_back(row);
  }
  const std::string cl = conc_label(contrast);

  NuisanceBundle nu;
  nu.mu_oc_treated =
      fit_ols(data, treated_conc, outcome_design, "arm=" + std::to_string(k) + " & " + cl);
  nu.mu_oc_control = fit_ols(data, control_conc, outcome_design, "arm=0 & " + cl);
  nu.mu_all_control = fit_ols(data, control_all, outcome_design, "arm=0 (all)");
  nu.pi_oc = fit_logistic(
      data, conc_rows, treatment_design,
      [k](const TrialRecord& r) { return r.arm == k ? 1 : 0; }, cl);
  nu.nu_deterministic = deterministic_nu;
  if (!deterministic_nu) {
    const DesignSpec nd = nu_design.value_or(DesignSpec::full(data.covariate_dim()));
    std::vector<int> all_rows(frame.rows);
    nu.nu_fit = fit_logistic(
        data, all_rows, nd,
        [&contrast](const TrialRecord& r) { return contrast.satisfied(r) ? 1 : 0; },
        cl + " membership");
  }
  return nu;
}

EstimateReport estimate_naive(const TrialDataset& data, const ContrastSpec& contrast) {
  const AnalysisFrame frame = make_frame(data, contrast);
  std::vector<double> y1, y0;
  for (int i = 0; i < frame.n; ++i) {
    if (!frame.conc[i]) continue;
    const TrialRecord& r = data.records[frame.rows[i]];
    (r.arm == contrast.treated_arm ? y1 : y0).push_back(r.outcome);
  }
  if (y1.empty() || y0.empty())
    throw data_error(std::string("estimate_naive: empty ") +
                     (y1.empty() ? "treated" : "control") + " arm in the concurrent subset");
  const double point = mean(y1) - mean(y0);
  const double se = std::sqrt(pop_variance(y1) / y1.size() + pop_variance(y0) / y0.size());
  return make_report("naive", point, se, static_cast<int>(y1.size() + y0.size()));
}

EstimateReport estimate_or_oc(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances) {
  const EstimatingStack st =
      build_or_oc_stack(data, contrast, nuisances.mu_oc_control, nuisances.mu_oc_treated);
  const SandwichResult sw = sandwich(st);
  const auto [o1, l1] = st.block("mu1");
  const auto [o0, l0] = st.block("mu0");
  return make_report("OR-oc", st.theta(o1) - st.theta(o0), sw.se, st.n);
}

EstimateReport estimate_or_ac(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances) {
  const EstimatingStack st =
      build_or_ac_stack(data, contrast, nuisances.mu_all_control, nuisances.mu_oc_treated);
  const SandwichResult sw = sandwich(st);
  const auto [o1, l1] = st.block("mu1");
  const auto [o0, l0] = st.block("mu0");
  return make_report("OR-ac", st.theta(o1) - st.theta(o0), sw.se, st.n);
}

EstimateReport estimate_ipw(const TrialDataset& data, const ContrastSpec& contrast,
                            const NuisanceBundle& nuisances) {
  const AnalysisFrame frame = make_frame(data, contrast);
  double sw1 = 0.0, sy1 = 0.0, sw0 = 0.0, sy0 = 0.0;
  for (int i = 0; i < frame.n; ++i) {
    if (!frame.conc[i]) continue;
    const TrialRecord& r = data.records[frame.rows[i]];
    const double pi = guarded_pi(nuisances, r, frame.rows[i]);
    if (r.arm == contrast.treated_arm) {
      sw1 += 1.0 / pi;
      sy1 += r.outcome / pi;
    } else {
      sw0 += 1.0 / (1.0 - pi);
      sy0 += r.outcome / (1.0 - pi);
    }
  }
  if (sw1 == 0.0 || sw0 == 0.0)
    throw data_error("estimate_ipw: an arm is empty in the concurrent subset");
  const double point = sy1 / sw1 - sy0 / sw0;
  const EstimatingStack st = build_ipw_stack(data, contrast, nuisances.pi_oc);
  const SandwichResult sw = sandwich(st);
  return make_report("IPW", point, sw.se, st.n);
}

EstimateReport estimate_dr_oc(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances) {
  const AnalysisFrame frame = make_frame(data, contrast);
  const double pv = frame.concurrent_fraction();
  std::vector<double> term(frame.n, 0.0);
  double point = 0.0;
  for (int i = 0; i < frame.n; ++i) {
    if (!frame.conc[i]) continue;
    const TrialRecord& r = data.records[frame.rows[i]];
    const double pi = guarded_pi(nuisances, r, frame.rows[i]);
    const bool treated = r.arm == contrast.treated_arm;
    const double mu1 = predict(nuisances.mu_oc_treated, r);
    const double mu0 = predict(nuisances.mu_oc_control, r);
    const double mu_obs = treated ? mu1 : mu0;
    const double pi_obs = treated ? pi : 1.0 - pi;
    const double sign = treated ? 1.0 : -1.0;
    term[i] = (sign / pi_obs * (r.outcome - mu_obs) + mu1 - mu0) / pv;
    point += term[i];
  }
  point /= frame.n;
  EstimateReport rep = make_report("DR-oc", point, 0.0, frame.n);
  rep.influence.resize(frame.n);
  for (int i = 0; i < frame.n; ++i)
    rep.influence[i] = term[i] - (frame.conc[i] ? point / pv : 0.0);
  const WaldSummary ws = eif_variance(rep.influence, point);
  rep.se = ws.se;
  rep.ci_low = ws.ci_low;
  rep.ci_high = ws.ci_high;
  rep.p_value = ws.p_value;
  return rep;
}

EstimateReport estimate_dr_ac(const TrialDataset& data, const ContrastSpec& contrast,
                              const NuisanceBundle& nuisances) {
  const AnalysisFrame frame = make_frame(data, contrast);
  const double pv = frame.concurrent_fraction();
  std::vector<double> term(frame.n, 0.0);
  double point = 0.0;
  for (int i = 0; i < frame.n; ++i) {
    const TrialRecord& r = data.records[frame.rows[i]];
    const bool treated = r.arm == contrast.treated_arm;
    const bool conc = frame.conc[i] != 0;
    double t = 0.0;
    if (conc) {
      const double pi = guarded_pi(nuisances, r, frame.rows[i]);
      const double mu1 = predict(nuisances.mu_oc_treated, r);
      if (treated) t += (r.outcome - mu1) / (pi * pv);
      t += (mu1 - predict(nuisances.mu_all_control, r)) / pv;
    }
    if (!treated) {
      const double nu_i = nuisances.nu(r, conc);
      if (nu_i > 0.0) {
        // P(A=k | W, E) = nu * pi_oc by the trial structure
        const double pi_all = nu_i * predict(nuisances.pi_oc, r);
        if (pi_all > 1.0 - kPositivityEps)
          throw numeric_error("positivity violation: fitted P(A=k|W,E) near 1 at row " +
                              std::to_string(frame.rows[i]));
        t -= nu_i / (1.0 - pi_all) * (r.outcome - predict(nuisances.mu_all_control, r)) / pv;
      }
    }
    term[i] = t;
    point += t;
  }
  point /= frame.n;
  EstimateReport rep = make_report("DR-ac", point, 0.0, frame.n);
  rep.influence.resize(frame.n);
  for (int i = 0; i < frame.n; ++i)
    rep.influence[i] = term[i] - (frame.conc[i] ? point / pv : 0.0);
  const WaldSummary ws = eif_variance(rep.influence, point);
  rep.se = ws.se;
  rep.ci_low = ws.ci_low;
  rep.ci_high = ws.ci_high;
  rep.p_value = ws.p_value;
  return rep;
}

EstimateReport estimate_or_ate(const TrialDataset& data, const ContrastSpec& contrast,
                               const NuisanceBundle& nuisances) {
  const EstimatingStack st =
      build_or_ate_stack(data, contrast, nuisances.mu_all_control, nuisances.mu_oc_treated);
  const SandwichResult sw = sandwich(st);
  const auto [o1, l1] = st.block("mu1");
  const auto [o0, l0] = st.block("mu0");
  EstimateReport rep = make_report("OR-ad", st.theta(o1) - st.theta(o0), sw.se, st.n);
  rep.extrapolation_warning = true;
  return rep;
}

std::vector<EstimateReport> estimate_all(const TrialDataset& data,
                                         const ContrastSpec& contrast,
                                         const NuisanceBundle& nuisances,
                                         const std::vector<std::string>& tags) {
  std::vector<EstimateReport> out;
  for (const std::string& tag : tags) {
    if (tag == "naive")
      out.push_back(estimate_naive(data, contrast));
    else if (tag == "OR-oc")
      out.push_back(estimate_or_oc(data, contrast, nuisances));
    else if (tag == "OR-ac")
      out.push_back(estimate_or_ac(data, contrast, nuisances));
    else if (tag == "IPW")
      out.push_back(estimate_ipw(data, contrast, nuisances));
    else if (tag == "DR-oc")
      out.push_back(estimate_dr_oc(data, contrast, nuisances));
    else if (tag == "DR-ac")
      out.push_back(estimate_dr_ac(data, contrast, nuisances));
    else if (tag == "OR-ad")
      out.push_back(estimate_or_ate(data, contrast, nuisances));
    else
      throw usage_error("unknown estimator \"" + tag + "\"");
  }
  return out;
}

}  // namespace nonconc
