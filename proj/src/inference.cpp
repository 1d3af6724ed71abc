#include "nonconc/inference.hpp"

#include <cmath>
#include <memory>

#include "nonconc/errors.hpp"
#include "nonconc/stats.hpp"

namespace nonconc {

std::pair<int, int> EstimatingStack::block(const std::string& name) const {
  for (const auto& [bname, range] : blocks)
    if (bname == name) return range;
  throw usage_error("unknown stack block \"" + name + "\"");
}

SandwichResult sandwich(const EstimatingStack& stack) {
  const int d = static_cast<int>(stack.theta.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < stack.n; ++i) G += stack.neg_jacobian(i, stack.theta);
  G /= static_cast<double>(stack.n);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw numeric_error("sandwich: singular Jacobian (rank " + std::to_string(lu.rank()) +
                        " of " + std::to_string(d) + ")");

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  SandwichResult out;
  out.influence.resize(stack.n);
  for (int i = 0; i < stack.n; ++i) {
    const Eigen::VectorXd phi = lu.solve(stack.score(i, stack.theta));
    B += phi * phi.transpose();
    out.influence[i] = stack.contrast.dot(phi);
  }
  B /= static_cast<double>(stack.n);
  out.cov = B / static_cast<double>(stack.n);
  out.mean_neg_jacobian = G;
  out.se = std::sqrt(stack.contrast.dot(out.cov * stack.contrast));
  return out;
}

WaldSummary eif_variance(const std::vector<double>& influence, double point) {
  if (influence.size() < 2) throw data_error("eif_variance: fewer than 2 influence values");
  WaldSummary s;
  s.se = std::sqrt(pop_variance(influence) / static_cast<double>(influence.size()));
  s.ci_low = point - 1.96 * s.se;
  s.ci_high = point + 1.96 * s.se;
  s.p_value = s.se > 0.0 ? two_sided_p(point / s.se) : (point == 0.0 ? 1.0 : 0.0);
  return s;
}

AnalysisFrame make_frame(const TrialDataset& data, const ContrastSpec& contrast) {
  AnalysisFrame f;
  f.treated_arm = contrast.treated_arm;
  for (int i = 0; i < data.n(); ++i) {
    const TrialRecord& r = data.records[i];
    if (r.arm != 0 && r.arm != contrast.treated_arm) continue;
    f.rows.push_back(i);
    const bool c = contrast.satisfied(r);
    f.conc.push_back(c ? 1 : 0);
    if (c) ++f.n_concurrent;
  }
  f.n = static_cast<int>(f.rows.size());
  if (f.n == 0) throw data_error("analysis frame is empty for the requested contrast");
  if (f.n_concurrent == 0)
    throw data_error("no concurrent records for the requested contrast");
  return f;
}

namespace {

// Shared per-row payload captured by the stack closures.
struct FrameData {
  Eigen::MatrixXd X;          // outcome-model design rows
  Eigen::VectorXd y;
  std::vector<std::uint8_t> treated;
  std::vector<std::uint8_t> conc;
};

std::shared_ptr<FrameData> frame_data(const TrialDataset& data, const AnalysisFrame& frame,
                                      const DesignSpec& design) {
  auto fd = std::make_shared<FrameData>();
  fd->X = design_matrix(design, data, frame.rows);
  fd->y.resize(frame.n);
  fd->treated.resize(frame.n);
  fd->conc = frame.conc;
  for (int i = 0; i < frame.n; ++i) {
    const TrialRecord& r = data.records[frame.rows[i]];
    fd->y(i) = r.outcome;
    fd->treated[i] = (r.arm == frame.treated_arm) ? 1 : 0;
  }
  return fd;
}

// OR stacks share one skeleton: a control block (beta, mu0) and a treated
// block (beta1, mu1), with configurable fitting weights (whether the control
// regression uses all controls) and averaging weights (concurrent vs all).
EstimatingStack or_stack(const TrialDataset& data, const ContrastSpec& contrast,
                         const ModelFit& control_fit, const ModelFit& treated_fit,
                         bool control_fit_concurrent_only, bool average_concurrent_only) {
  const AnalysisFrame frame = make_frame(data, contrast);
  auto fd = frame_data(data, frame, control_fit.design);
  const int p = static_cast<int>(control_fit.coef.size());
  if (treated_fit.coef.size() != p)
    throw usage_error("or_stack: control/treated designs differ");

  EstimatingStack st;
  st.n = frame.n;
  st.blocks = {{"beta0", {0, p}}, {"mu0", {p, 1}}, {"beta1", {p + 1, p}}, {"mu1", {2 * p + 1, 1}}};
  st.theta.resize(2 * p + 2);
  st.theta.segment(0, p) = control_fit.coef;
  st.theta.segment(p + 1, p) = treated_fit.coef;

  // averaging weights a_i and the stack's own mu solutions
  double asum = 0.0, m0 = 0.0, m1 = 0.0;
  for (int i = 0; i < frame.n; ++i) {
    const double a = average_concurrent_only ? fd->conc[i] : 1.0;
    asum += a;
    m0 += a * fd->X.row(i).dot(control_fit.coef);
    m1 += a * fd->X.row(i).dot(treated_fit.coef);
  }
  st.theta(p) = m0 / asum;
  st.theta(2 * p + 1) = m1 / asum;

  const bool cfc = control_fit_concurrent_only;
  const bool avc = average_concurrent_only;
  st.score = [fd, p, cfc, avc](int i, const Eigen::VectorXd& th) {
    const double ci = fd->conc[i], ti = fd->treated[i];
    const double wc = (cfc ? ci : 1.0) * (1.0 - ti);  // control-regression weight
    const double wt = ci * ti;                        // treated regression is concurrent-only
    const double ai = avc ? ci : 1.0;                 // averaging weight
    const auto x = fd->X.row(i);
    Eigen::VectorXd h(2 * p + 2);
    const double r0 = fd->y(i) - x.dot(th.segment(0, p));
    const double r1 = fd->y(i) - x.dot(th.segment(p + 1, p));
    h.segment(0, p) = wc * r0 * x.transpose();
    h(p) = ai * (x.dot(th.segment(0, p)) - th(p));
    h.segment(p + 1, p) = wt * r1 * x.transpose();
    h(2 * p + 1) = ai * (x.dot(th.segment(p + 1, p)) - th(2 * p + 1));
    return h;
  };
  st.neg_jacobian = [fd, p, cfc, avc](int i, const Eigen::VectorXd&) {
    const double ci = fd->conc[i], ti = fd->treated[i];
    const double wc = (cfc ? ci : 1.0) * (1.0 - ti);
    const double wt = ci * ti;
    const double ai = avc ? ci : 1.0;
    const auto x = fd->X.row(i);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * p + 2, 2 * p + 2);
    G.block(0, 0, p, p) = wc * x.transpose() * x;
    G.block(p, 0, 1, p) = -ai * x;
    G(p, p) = ai;
    G.block(p + 1, p + 1, p, p) = wt * x.transpose() * x;
    G.block(2 * p + 1, p + 1, 1, p) = -ai * x;
    G(2 * p + 1, 2 * p + 1) = ai;
    return G;
  };
  st.contrast = Eigen::VectorXd::Zero(2 * p + 2);
  st.contrast(2 * p + 1) = 1.0;
  st.contrast(p) = -1.0;
  return st;
}

}  // namespace

EstimatingStack build_or_oc_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                  const ModelFit& mu_oc_control,
                                  const ModelFit& mu_oc_treated) {
  return or_stack(data, contrast, mu_oc_control, mu_oc_treated, true, true);
}

EstimatingStack build_or_ac_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                  const ModelFit& mu_all_control,
                                  const ModelFit& mu_oc_treated) {
  return or_stack(data, contrast, mu_all_control, mu_oc_treated, false, true);
}

EstimatingStack build_or_ate_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                   const ModelFit& mu_all_control,
                                   const ModelFit& mu_oc_treated) {
  return or_stack(data, contrast, mu_all_control, mu_oc_treated, false, false);
}

EstimatingStack build_ipw_stack(const TrialDataset& data, const ContrastSpec& contrast,
                                const ModelFit& pi_oc) {
  const AnalysisFrame frame = make_frame(data, contrast);
  auto fd = frame_data(data, frame, pi_oc.design);
  const int p = static_cast<int>(pi_oc.coef.size());

  EstimatingStack st;
  st.n = frame.n;
  st.blocks = {{"eta", {0, p}}, {"mu0", {p, 1}}, {"mu1", {p + 1, 1}}};
  st.theta.resize(p + 2);
  st.theta.segment(0, p) = pi_oc.coef;

  double csum = 0.0, m0 = 0.0, m1 = 0.0;
  for (int i = 0; i < frame.n; ++i) {
    if (!fd->conc[i]) continue;
    const double pi = expit(fd->X.row(i).dot(pi_oc.coef));
    csum += 1.0;
    m0 += (1.0 - fd->treated[i]) / (1.0 - pi) * fd->y(i);
    m1 += fd->treated[i] / pi * fd->y(i);
  }
  st.theta(p) = m0 / csum;
  st.theta(p + 1) = m1 / csum;

  st.score = [fd, p](int i, const Eigen::VectorXd& th) {
    const double ci = fd->conc[i], ti = fd->treated[i];
    const auto x = fd->X.row(i);
    const double pi = expit(x.dot(th.segment(0, p)));
    Eigen::VectorXd h(p + 2);
    h.segment(0, p) = ci * (ti - pi) * x.transpose();
    h(p) = ci * ((1.0 - ti) / (1.0 - pi) * fd->y(i) - th(p));
    h(p + 1) = ci * (ti / pi * fd->y(i) - th(p + 1));
    return h;
  };
  st.neg_jacobian = [fd, p](int i, const Eigen::VectorXd& th) {
    const double ci = fd->conc[i], ti = fd->treated[i];
    const auto x = fd->X.row(i);
    const double lin = x.dot(th.segment(0, p));
    const double pi = expit(lin);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p + 2, p + 2);
    G.block(0, 0, p, p) = ci * pi * (1.0 - pi) * x.transpose() * x;
    // d gamma0/d eta = (1-t) e^{x'eta} x ; d gamma1/d eta = -t e^{-x'eta} x
    G.block(p, 0, 1, p) = -ci * (1.0 - ti) * fd->y(i) * std::exp(lin) * x;
    G(p, p) = ci;
    G.block(p + 1, 0, 1, p) = ci * ti * fd->y(i) * std::exp(-lin) * x;
    G(p + 1, p + 1) = ci;
    return G;
  };
  st.contrast = Eigen::VectorXd::Zero(p + 2);
  st.contrast(p + 1) = 1.0;
  st.contrast(p) = -1.0;
  return st;
}

EstimatingStack build_mean_stack(const std::vector<double>& values) {
  if (values.empty()) throw data_error("build_mean_stack: no values");
  auto vals = std::make_shared<std::vector<double>>(values);
  EstimatingStack st;
  st.n = static_cast<int>(values.size());
  st.blocks = {{"mu", {0, 1}}};
  st.theta.resize(1);
  st.theta(0) = mean(values);
  st.score = [vals](int i, const Eigen::VectorXd& th) {
    Eigen::VectorXd h(1);
    h(0) = (*vals)[i] - th(0);
    return h;
  };
  st.neg_jacobian = [](int, const Eigen::VectorXd&) {
    Eigen::MatrixXd G(1, 1);
    G(0, 0) = 1.0;
    return G;
  };
  st.contrast = Eigen::VectorXd::Ones(1);
  return st;
}

}  // namespace nonconc
