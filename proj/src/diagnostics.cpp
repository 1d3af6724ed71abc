#include "nonconc/diagnostics.hpp"

#include <Eigen/Dense>

#include "nonconc/errors.hpp"
#include "nonconc/stats.hpp"

namespace nonconc {

PoolingTestReport pooling_test(const TrialDataset& data, const ContrastSpec& contrast,
                               const DesignSpec& design, double alpha) {
  std::vector<int> controls;
  int n_nc = 0;
  for (int i = 0; i < data.n(); ++i) {
    if (data.records[i].arm != 0) continue;
    controls.push_back(i);
    if (!contrast.satisfied(data.records[i])) ++n_nc;
  }
  if (n_nc == 0)
    throw data_error("pooling_test: no non-concurrent controls, test undefined");
  if (n_nc == static_cast<int>(controls.size()))
    throw data_error("pooling_test: no concurrent controls, test undefined");

  const int n = static_cast<int>(controls.size());
  const int p = design.columns();
  Eigen::MatrixXd X(n, 2 * p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const TrialRecord& r = data.records[controls[i]];
    const Eigen::RowVectorXd base = design_row(design, r);
    X.block(i, 0, 1, p) = base;
    X.block(i, p, 1, p) = contrast.satisfied(r) ? Eigen::RowVectorXd::Zero(p) : base;
    y(i) = r.outcome;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 2 * p)
    throw numeric_error("pooling_test: singular interaction design");
  const Eigen::VectorXd beta = qr.solve(y);

  // HC0 sandwich covariance of the OLS coefficients
  const Eigen::VectorXd resid = y - X * beta;
  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(2 * p, 2 * p));
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2 * p, 2 * p);
  for (int i = 0; i < n; ++i)
    meat += resid(i) * resid(i) * X.row(i).transpose() * X.row(i);
  const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;

  const Eigen::VectorXd c = beta.segment(p, p);
  const Eigen::MatrixXd cc = cov.block(p, p, p, p);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cc);
  if (ldlt.info() != Eigen::Success)
    throw numeric_error("pooling_test: singular interaction covariance");

  PoolingTestReport rep;
  rep.statistic = c.dot(ldlt.solve(c));
  rep.dof = p;
  rep.p_value = chisq_tail(rep.statistic, rep.dof);
  rep.alpha = alpha;
  rep.reject = rep.p_value < alpha;
  return rep;
}

}  // namespace nonconc
