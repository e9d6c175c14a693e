#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shelterq/desim.hpp"

namespace shelterq {

// A batch of independent replications of one scenario. Replication r always uses the
// seed ladder entry (baseSeed, r), so two studies with the same baseSeed share random
// numbers replication-by-replication (common random numbers).
struct ReplicationStudy {
  ScenarioConfig config;
  std::uint64_t baseSeed = 0;
  std::vector<RawReplicationMetrics> replications;
};

ReplicationStudy run_replications(const ScenarioConfig& config, int replications,
                                  std::uint64_t baseSeed);

// Mean, sample standard deviation, and a normal-approximation 95% confidence
// half-width (1.96 sd / sqrt(n)) over the replications.
struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
  double ci95 = 0.0;
  int n = 0;
};

// Canonical metric listing for a scenario with `numClasses` classes: aggregate
// metrics first, then one block per class in priority order. `withWaitTails`
// adds the per-class tail-proportion rows (only meaningful when the scenario set
// wait markers).
std::vector<std::string> metric_names(int numClasses, bool withWaitTails);

// The value of every canonical metric for one replication.
std::map<std::string, double> metric_values(const RawReplicationMetrics& rep,
                                            bool withWaitTails);

std::map<std::string, MetricSummary> summarize(const ReplicationStudy& study);

// Named scenarios evaluated on a shared seed ladder. All scenarios must have the
// same number of classes so their metric sets line up.
struct Comparison {
  std::vector<std::string> names;
  std::vector<std::string> metrics;
  // summaries[i] belongs to names[i].
  std::vector<std::map<std::string, MetricSummary>> summaries;
};

Comparison compare_scenarios(
    const std::vector<std::pair<std::string, ScenarioConfig>>& scenarios,
    int replications, std::uint64_t baseSeed);

enum class SweepParam { Lambda, Mu, Theta };

std::string sweep_param_name(SweepParam p);

// One scenario re-evaluated across values of a single rate parameter, again with
// common random numbers across the grid. For scenarios built on explicit class
// rates, sweeping lambda rescales every class rate proportionally.
struct SweepResult {
  SweepParam param = SweepParam::Lambda;
  std::vector<double> values;
  std::vector<std::string> metrics;
  std::vector<std::map<std::string, MetricSummary>> summaries;  // per value
};

SweepResult sweep(const ScenarioConfig& base, SweepParam param,
                  const std::vector<double>& values, int replications,
                  std::uint64_t baseSeed);

// CSV renderers. All numeric formatting is fixed (%.10g for reals) so identical
// inputs produce byte-identical files.
std::string replications_to_csv(const ReplicationStudy& study);
std::string summary_to_csv(const std::string& scenarioName,
                           const std::vector<std::string>& metrics,
                           const std::map<std::string, MetricSummary>& summary);
std::string comparison_to_csv(const Comparison& comparison);
std::string sweep_to_csv(const SweepResult& result);

}  // namespace shelterq
