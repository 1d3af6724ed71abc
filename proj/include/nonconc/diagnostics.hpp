#pragma once

#include <string>

#include "nonconc/dataset.hpp"
#include "nonconc/design.hpp"

namespace nonconc {

struct PoolingTestReport {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;  // reject pooling (assumption fails at alpha)
  std::string method_tag = "interaction-wald";
};

// Tests whether the control-arm regression E[Y | A=0, W, E] is the same for
// concurrent and non-concurrent units: OLS on all controls with full
// interactions between the non-concurrency indicator and the design columns,
// then a heteroskedasticity-robust Wald test that the interactions vanish.
// Throws data_error when either concurrency stratum has no controls.
PoolingTestReport pooling_test(const TrialDataset& data, const ContrastSpec& contrast,
                               const DesignSpec& design, double alpha = 0.05);

}  // namespace nonconc
