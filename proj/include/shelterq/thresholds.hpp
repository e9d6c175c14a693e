#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "shelterq/erlang.hpp"

namespace shelterq {

struct ScenarioConfig;  // defined in desim.hpp

// Idle-bed entry thresholds, one per class in priority order (highest first).
// A class-j customer may enter service only at an instant when the idle-bed count
// strictly exceeds K[j]. The highest-priority class always has K[0] == 0, and the
// thresholds never decrease with falling priority. A threshold at or above the bed
// count blocks its class outright; that is a legal (if drastic) policy.
struct ThresholdPolicy {
  std::vector<int> K;
  void validate() const;
};

// Cumulative traffic intensities sigma_j = sum_{i<=j} lambda_i / (beds*mu), clamped to
// 1 - eps where the heavy-traffic formulas stop applying (flagged per class).
struct CumulativeLoads {
  int beds = 0;
  double mu = 0.0;
  std::vector<double> sigma;      // per class, clamped
  std::vector<bool> degenerate;   // true where raw sigma >= 1 - eps
  bool anyDegenerate = false;
};
CumulativeLoads cumulative_loads(const std::vector<double>& classRates, int beds,
                                 double mu, double eps = 0.01);

// Per-class wait-tail cap: P{class-j wait > T days} <= x.
struct WaitCap {
  double x = 0.0;
  double T = 0.0;
};

struct AnalyticThresholds {
  ThresholdPolicy policy;
  bool analyticallyDegenerate = false;   // some clamped sigma fed the recursion
  std::vector<double> delayProbability;  // P{W_j > 0} per class from the recursion
};

// Analytic threshold recursion (heavy-traffic): anchored at the all-classes delay
// probability of the beds-bed system, boundaries processed from the lowest priority
// upward. Each increment is
//   K_{j+1} - K_j = max(0, ceil( ln(x_j T_j / (P{W_{j+1}>0} omega_j)) / ln(sigma_j) ))
// with omega_j = 1 / (beds*mu*(1-sigma_{j+1})(1-sigma_j)); the ceiling applies before
// the floor at zero. caps[j] constrains class j, j = 0..J-2 (the lowest class carries
// no individual cap). When a clamped sigma is involved the result is flagged; with
// allowDegenerate = false an InfeasibleError("degenerate-load") is thrown instead.
AnalyticThresholds analytic_thresholds(const std::vector<double>& classRates, int beds,
                                       const SystemParams& aggregate,
                                       const std::vector<WaitCap>& caps,
                                       bool allowDegenerate = true, double eps = 0.01);

// Variant driven by per-class abandonment caps alpha_j: the cap enters the same
// recursion as alpha_j * T / theta with T defaulting to a one-day window (the
// abandonment-to-wait conversion P{Ab} = theta E[W]).
AnalyticThresholds analytic_thresholds_abandonment(
    const std::vector<double>& classRates, int beds, const SystemParams& aggregate,
    const std::vector<double>& abandonCaps, double capWindowDays = 1.0,
    bool allowDegenerate = true, double eps = 0.01);

// Quality-of-service caps used in staffing reports and threshold calibration.
// perClass vectors cover classes 0..J-2 in priority order (lowest class uncapped).
// The two trailing caps are calibration-only extensions: under a strict
// idle-above-threshold admission rule they are the constraints that actually bind.
struct QosTargets {
  std::optional<double> alphaGlobal;          // aggregate abandonment cap
  std::optional<double> maxMeanWait;          // aggregate mean wait cap (days)
  std::vector<WaitCap> perClassWaitCaps;      // P{W_j > T_j} <= x_j
  std::vector<double> perClassAbandonCaps;    // per-class abandonment proportion caps
  std::optional<double> maxPerClassMeanWait;  // per-class mean wait cap for classes 0..J-2 (days)
  std::optional<double> maxHighRiskAbandoned; // cap on mean abandoner count outside the lowest class
};

struct CalibratedThresholds {
  ThresholdPolicy policy;
  int replicationsPerPoint = 0;
  std::uint64_t baseSeed = 0;
};

// Simulation-based calibration: boundaries from the lowest priority upward, each time
// the smallest increment (0..maxK) whose replication means satisfy every cap applying
// to the classes above the boundary. Deterministic given baseSeed (the replication
// seed ladder is reused at every candidate, so candidates differ only by policy).
// Throws InfeasibleError("infeasible-at-maxK") when no increment within maxK works.
CalibratedThresholds calibrate_thresholds_by_simulation(const ScenarioConfig& config,
                                                        const QosTargets& caps, int maxK,
                                                        int reps, std::uint64_t baseSeed);

}  // namespace shelterq
