#include "nonconc/regression.hpp"

#include <cmath>

#include "nonconc/errors.hpp"

namespace nonconc {

double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Eigen::VectorXd targets_vector(const TrialDataset& data, const std::vector<int>& rows,
                               const std::function<int(const TrialRecord&)>& target) {
  Eigen::VectorXd y(static_cast<int>(rows.size()));
  for (int i = 0; i < y.size(); ++i) {
    const int t = target(data.records[rows[i]]);
    if (t != 0 && t != 1) throw data_error("logistic target must be 0/1");
    y(i) = t;
  }
  return y;
}

}  // namespace

ModelFit fit_ols(const TrialDataset& data, const std::vector<int>& rows,
                 const DesignSpec& design, const std::string& subset_label) {
  const int p = design.columns();
  if (rows.empty()) throw data_error("fit_ols: empty fitting subset (" + subset_label + ")");
  if (static_cast<int>(rows.size()) <= p)
    throw data_error("fit_ols: subset \"" + subset_label + "\" has " +
                     std::to_string(rows.size()) + " rows for " + std::to_string(p) +
                     " columns");
  Eigen::MatrixXd X = design_matrix(design, data, rows);
  Eigen::VectorXd y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y(i) = data.records[rows[i]].outcome;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    // first pivoted-out column is the dependent one
    const int bad = qr.colsPermutation().indices()(qr.rank());
    throw numeric_error("fit_ols: singular design, dependent column \"" +
                        design.column_name(bad, data.covariate_names) + "\" (subset " +
                        subset_label + ")");
  }
  ModelFit fit;
  fit.coef = qr.solve(y);
  fit.design = design;
  fit.link = Link::identity;
  fit.fit_subset = subset_label;
  fit.converged = true;
  fit.iterations = 0;
  return fit;
}

double logistic_loglik(const TrialDataset& data, const std::vector<int>& rows,
                       const DesignSpec& design,
                       const std::function<int(const TrialRecord&)>& target,
                       const Eigen::VectorXd& coef) {
  double ll = 0.0;
  for (int row : rows) {
    const TrialRecord& r = data.records[row];
    const double q = design_row(design, r).dot(coef);
    const double y = target(r);
    // y*q - log(1+exp(q)), stable for both signs of q
    ll += y * q - (q > 0 ? q + std::log1p(std::exp(-q)) : std::log1p(std::exp(q)));
  }
  return ll;
}

ModelFit fit_logistic(const TrialDataset& data, const std::vector<int>& rows,
                      const DesignSpec& design,
                      const std::function<int(const TrialRecord&)>& target,
                      const std::string& subset_label, const LogisticOptions& options) {
  const int p = design.columns();
  if (rows.empty())
    throw data_error("fit_logistic: empty fitting subset (" + subset_label + ")");
  Eigen::MatrixXd X = design_matrix(design, data, rows);
  Eigen::VectorXd y = targets_vector(data, rows, target);
  const double ybar = y.mean();
  if (ybar == 0.0 || ybar == 1.0)
    throw data_error("fit_logistic: single-class target in subset \"" + subset_label +
                     "\"");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = logistic_loglik(data, rows, design, target, beta);
  if (options.loglik_trace) options.loglik_trace->push_back(ll);
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd prob(X.rows());
    for (int i = 0; i < X.rows(); ++i) prob(i) = expit(X.row(i).dot(beta));
    const Eigen::VectorXd score = X.transpose() * (y - prob);
    if (score.cwiseAbs().maxCoeff() <= options.tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw numeric_error("fit_logistic: singular information matrix (subset " +
                          subset_label + ")");
    const Eigen::VectorXd step = ldlt.solve(score);
    if (!step.allFinite()) break;
    // accept within floating-point slack so the full Newton step is not
    // rejected at the optimum
    const double slack = 1e-10 * (1.0 + std::fabs(ll));
    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double ll_new = logistic_loglik(data, rows, design, target, candidate);
    bool accepted = std::isfinite(ll_new) && ll_new >= ll - slack;
    for (int h = 0; h < options.max_halvings && !accepted; ++h) {
      t *= 0.5;
      candidate = beta + t * step;
      ll_new = logistic_loglik(data, rows, design, target, candidate);
      accepted = std::isfinite(ll_new) && ll_new >= ll - slack;
    }
    if (!accepted) break;
    beta = candidate;
    ll = ll_new;
    if (options.loglik_trace) options.loglik_trace->push_back(ll);
  }

  // Coefficients past the bound mean the MLE is escaping to infinity (the
  // score can vanish numerically once fitted probabilities saturate at 0/1).
  // A perfectly classified sample is the same failure caught earlier.
  if (beta.cwiseAbs().maxCoeff() > options.separation_bound)
    throw numeric_error("fit_logistic: separation detected in subset \"" + subset_label +
                        "\"");
  {
    double max_resid = 0.0;
    for (int i = 0; i < X.rows(); ++i)
      max_resid = std::max(max_resid, std::fabs(y(i) - expit(X.row(i).dot(beta))));
    if (max_resid < 1e-8)
      throw numeric_error("fit_logistic: separation detected in subset \"" + subset_label +
                          "\" (all observations perfectly classified)");
  }

  ModelFit fit;
  fit.coef = beta;
  fit.design = design;
  fit.link = Link::logit;
  fit.fit_subset = subset_label;
  fit.converged = converged;
  fit.iterations = iter;
  return fit;
}

double predict(const ModelFit& fit, const TrialRecord& r, std::optional<int> override_arm) {
  const Eigen::RowVectorXd x = design_row(fit.design, r, override_arm);
  if (x.size() != fit.coef.size())
    throw numeric_error("predict: design/coefficient dimension mismatch");
  const double lin = x.dot(fit.coef);
  return fit.link == Link::identity ? lin : expit(lin);
}

}  // namespace nonconc
