#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shelterq/desim.hpp"
#include "shelterq/staffing.hpp"
#include "shelterq/thresholds.hpp"

namespace shelterq {

// How the bed count is chosen: a fixed number, or a staffing rule applied to the
// scenario's rates.
struct CapacitySpec {
  std::optional<int> beds;              // fixed count when set
  std::optional<Regime> regime;         // staffing rule otherwise
  std::optional<double> gamma;          // QD / ED safety margin
  std::optional<double> target;         // QED / exact rules: abandonment share or wait days
};

// How the threshold policy is chosen.
enum class PolicyMode { Explicit, Analytic, Calibrate };

struct PolicySpec {
  PolicyMode mode = PolicyMode::Explicit;
  std::vector<int> thresholds;          // Explicit mode
  bool analyticFromAbandonCaps = false; // Analytic mode: use [qos] abandonCaps
  int maxK = 200;                       // Calibrate mode search bound
  int calibrationReps = 20;             // replications per calibration point
};

struct SimulationSpec {
  double horizonDays = 360.0;
  double warmupDays = 0.0;
  int initialOccupancy = 0;
  int replications = 100;
  std::uint64_t baseSeed = 1;
  bool trace = false;
};

// One fully-specified scenario as written in the file (before staffing/threshold
// rules are applied).
struct ScenarioEntry {
  std::string name;
  SystemParams params;
  std::variant<AttributeModel, ExplicitRates> arrivals = AttributeModel{};
  CapacitySpec capacity;
  PolicySpec policy;
  SimulationSpec simulation;
  QosTargets qos;
};

// A parsed scenario file: shared base settings plus any number of named variants
// that override individual keys. Variants inherit everything they do not set, and
// may not change `replications` or `baseSeed` (those define the shared seed
// ladder for fair comparisons).
struct ScenarioFile {
  ScenarioEntry base;
  std::vector<ScenarioEntry> variants;
};

ScenarioFile parse_scenario_file(const std::string& text, const std::string& filename);
ScenarioFile load_scenario_file(const std::string& path);

// A scenario with staffing and policy rules applied: ready to analyze or simulate.
struct ResolvedScenario {
  std::string name;
  ScenarioConfig config;
  SimulationSpec simulation;
  std::optional<StaffingResult> staffing;       // set when beds came from a rule
  std::optional<AnalyticThresholds> analytic;   // set in Analytic policy mode
  bool calibrated = false;                      // set in Calibrate policy mode
  QosTargets qos;
};

// Applies staffing rules, threshold rules, and optional command-line overrides.
// When the file declares variants, those are resolved (the base acts only as the
// shared default); otherwise the base resolves to a single scenario named "base".
std::vector<ResolvedScenario> resolve_scenarios(
    const ScenarioFile& file, std::optional<std::uint64_t> seedOverride = {},
    std::optional<int> replicationsOverride = {});

// Deterministic "key = value" description of a resolved scenario, suitable for
// embedding at the top of result files.
std::string describe_config(const ResolvedScenario& scenario);

}  // namespace shelterq
