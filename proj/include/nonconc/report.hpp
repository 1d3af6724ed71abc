#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nonconc/diagnostics.hpp"
#include "nonconc/estimators.hpp"
#include "nonconc/simulation.hpp"

namespace nonconc {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Report table with one row per estimator: method, estimate, SE, 95% CI,
// p-value (exact and the "<0.01" display form), SE ratio vs naive.
void write_estimate_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                        const std::optional<PoolingTestReport>& pooling);
void write_estimate_json(std::ostream& out, const std::vector<EstimateReport>& reports,
                         const std::optional<PoolingTestReport>& pooling,
                         bool include_influence);

// Long-format metrics CSV: scenario, fraction, estimator, metric, value.
void write_metrics_csv(std::ostream& out, const MetricsTable& table);

void write_pooling_json(std::ostream& out, const PoolingTestReport& report);

// Everything needed to reproduce a run bit-identically.
void write_manifest_json(std::ostream& out, const ScenarioConfig& config,
                         double wall_seconds);

std::string p_display(double p);

}  // namespace nonconc
