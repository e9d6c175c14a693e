#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shelterq/erlang.hpp"
#include "shelterq/population.hpp"
#include "shelterq/thresholds.hpp"

namespace shelterq {

// Explicit per-class Poisson arrival rates (priority order). The aggregate stream is
// their sum; each arrival's class is sampled from the rate proportions.
struct ExplicitRates {
  std::vector<double> rates;
};

// Everything one replication needs. Arrivals come either from an attribute model
// (five coin flips per arrival, six classes) or from explicit per-class rates.
struct ScenarioConfig {
  SystemParams params;
  std::variant<AttributeModel, ExplicitRates> arrivals;
  int beds = 0;
  ThresholdPolicy policy;
  double horizonDays = 360.0;
  double warmupDays = 0.0;
  int initialOccupancy = 0;
  // Optional per-class wait-tail markers (size J when set): each replication then
  // counts arrivals whose final wait exceeded the class marker. Used by calibration
  // against P{W_j > T_j} caps. +infinity disables a class's counter.
  std::vector<double> waitTailMarkerDays;

  int numClasses() const;
  std::vector<double> classRates() const;
  void validate() const;
};

// Per-class counters of one replication. Counts cover customers who ARRIVED inside
// the measurement window (warmupDays, horizonDays]; "served" counts service starts,
// and customers still waiting at the horizon appear in inSystemAtHorizon, so
// arrivals == served + abandoned + inSystemAtHorizon exactly. Waits of customers
// still in queue at the horizon are censored at the horizon and included in the mean.
struct ClassMetrics {
  std::int64_t arrivals = 0;
  std::int64_t served = 0;
  std::int64_t abandoned = 0;
  std::int64_t inSystemAtHorizon = 0;
  double abandonmentProportion = 0.0;  // abandoned / arrivals (0 when no arrivals)
  double meanWaitDays = 0.0;           // mean queueing time per arrival
  std::int64_t waitTailCount = 0;      // arrivals whose wait exceeded the class marker
};

struct RawReplicationMetrics {
  std::vector<ClassMetrics> perClass;       // size J
  ClassMetrics aggregate;
  double meanUtilization = 0.0;             // busy-bed time integral / (beds * window)
  std::int64_t highRiskAbandonedCount = 0;  // abandoners outside the lowest class
  std::uint64_t replicationIndex = 0;
};

// One trace row. kind: 'A' arrival, 'S' service completion, 'X' abandonment,
// 'M' admission (dispatch decision). idleBefore is the idle-bed count immediately
// before the row's action; queueLens are the live per-class queue lengths immediately
// after it. cls is -1 on completions of the initial occupants seeded at time zero.
struct TraceRow {
  double time = 0.0;
  char kind = '?';
  int cls = -1;
  int idleBefore = 0;
  std::vector<int> queueLens;
};

// Simulate one replication. Event order at equal times: service completions, then
// abandonments, then arrivals, ties broken by subject id; after every event the
// dispatcher scans classes in priority order and admits the longest-waiting customer
// of the highest-priority class whose threshold is satisfied, repeating until no
// admission is possible. Service times and patience draws are sampled at arrival from
// dedicated streams seeded by (baseSeed, replicationIndex, purpose).
RawReplicationMetrics run_replication(const ScenarioConfig& config,
                                      std::uint64_t baseSeed,
                                      std::uint64_t replicationIndex,
                                      std::vector<TraceRow>* trace = nullptr);

// Stable tab-separated trace rendering: header then one row per event,
// columns time, kind, class, idle_before, q_A.. (or q_1.. past six classes).
std::string trace_to_tsv(const std::vector<TraceRow>& trace, int numClasses);
std::vector<TraceRow> trace_from_tsv(const std::string& text, int* numClassesOut = nullptr);

struct TraceViolation {
  std::size_t row = 0;  // 0-based index into the trace vector
  std::string reason;
};

// Replay a trace against a policy: every admission must see idleBefore > K[class];
// idle counts and queue lengths must chain consistently row to row; and at every
// settled instant (entering each event row, and at the end) no class may have both a
// waiting customer and an idle count above its threshold. Returns the first violation
// or nullopt for a clean trace.
std::optional<TraceViolation> verify_threshold_trace(const std::vector<TraceRow>& trace,
                                                     const ThresholdPolicy& policy,
                                                     int beds, int initialOccupancy = 0);

}  // namespace shelterq
