// Acceptance gate: twelve go/no-go checks of the staffing and simulation toolkit.
// Each criterion prints exactly one PASS/FAIL line with its measured values; the
// process exits nonzero if any criterion fails.
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shelterq/desim.hpp"
#include "shelterq/erlang.hpp"
#include "shelterq/errors.hpp"
#include "shelterq/experiments.hpp"
#include "shelterq/population.hpp"
#include "shelterq/rng.hpp"
#include "shelterq/staffing.hpp"
#include "shelterq/thresholds.hpp"

namespace fs = std::filesystem;
using namespace shelterq;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s — %s\n", criterion, ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const SystemParams kBaseline{4.44, 0.016, 0.5};

// The six-class shelter scenario: baseline rates, attribute-model arrivals,
// 360-day horizon from an empty house.
ScenarioConfig shelter_config(int beds, int lowestThreshold) {
  ScenarioConfig cfg;
  cfg.params = kBaseline;
  cfg.arrivals = AttributeModel{};
  cfg.beds = beds;
  cfg.policy.K = {0, 0, 0, 0, 0, lowestThreshold};
  cfg.horizonDays = 360.0;
  cfg.warmupDays = 0.0;
  return cfg;
}

struct BatchMeans {
  double abPct = 0.0;            // aggregate abandonment proportion, percent
  double utilPct = 0.0;          // mean utilization, percent
  double abandonedCount = 0.0;   // mean abandoner count
  double meanWaitDays = 0.0;     // aggregate mean wait
  double highRisk = 0.0;         // mean abandoner count outside the lowest class
  std::array<double, kNumGroups> classAbPct{};
  std::array<double, kNumGroups> classWaitDays{};
  double seconds = 0.0;
};

BatchMeans measure(const ScenarioConfig& cfg, int reps, std::uint64_t seed) {
  Clock::time_point t0 = Clock::now();
  ReplicationStudy study = run_replications(cfg, reps, seed);
  BatchMeans m;
  for (const RawReplicationMetrics& r : study.replications) {
    m.abPct += 100.0 * r.aggregate.abandonmentProportion;
    m.utilPct += 100.0 * r.meanUtilization;
    m.abandonedCount += double(r.aggregate.abandoned);
    m.meanWaitDays += r.aggregate.meanWaitDays;
    m.highRisk += double(r.highRiskAbandonedCount);
    for (int j = 0; j < int(r.perClass.size()); ++j) {
      m.classAbPct[j] += 100.0 * r.perClass[j].abandonmentProportion;
      m.classWaitDays[j] += r.perClass[j].meanWaitDays;
    }
  }
  double n = double(reps);
  m.abPct /= n;
  m.utilPct /= n;
  m.abandonedCount /= n;
  m.meanWaitDays /= n;
  m.highRisk /= n;
  for (double& v : m.classAbPct) v /= n;
  for (double& v : m.classWaitDays) v /= n;
  m.seconds = seconds_since(t0);
  return m;
}

bool within(double value, double center, double halfWidth) {
  return std::fabs(value - center) <= halfWidth;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing:" + p.string() + ">";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------

void criterion_1() {
  SystemParams p{1.0, 1.0, 1.0};
  erlang_a_metrics(1, p);  // warm call
  Clock::time_point t0 = Clock::now();
  ErlangAMetrics m = erlang_a_metrics(1, p);
  double elapsed = seconds_since(t0);
  double eAb = std::fabs(m.pAb - std::exp(-1.0));
  double eWait = std::fabs(m.pWait - (1.0 - std::exp(-1.0)));
  bool ok = eAb <= 1e-9 && eWait <= 1e-9 && elapsed < 1e-3;
  report(1, ok,
         fmt("single-bed corner: |pAb-e^-1| = %.2e, |pWait-(1-e^-1)| = %.2e, "
             "runtime %.0f us (< 1 ms)",
             eAb, eWait, elapsed * 1e6));
}

void criterion_2() {
  const int bedGrid[8] = {1, 2, 5, 17, 48, 130, 260, 400};
  const double loadGrid[5] = {0.2, 0.6, 0.9, 1.05, 1.3};
  const double ratioGrid[5] = {0.5, 2.0, 8.0, 20.0, 50.0};
  Clock::time_point t0 = Clock::now();
  double maxRel = 0.0;
  int points = 0;
  for (int beds : bedGrid) {
    for (double load : loadGrid) {
      for (double ratio : ratioGrid) {
        SystemParams p{load * beds, 1.0, ratio};
        double chain = erlang_a_metrics(beds, p).pAbGivenWait;
        double closed = p_ab_given_wait_closed_form(beds, p);
        double rel = std::fabs(closed - chain) / std::max(std::fabs(chain), 1e-300);
        maxRel = std::max(maxRel, rel);
        ++points;
      }
    }
  }
  double elapsed = seconds_since(t0);
  bool ok = maxRel <= 1e-8 && elapsed < 5.0 && points == 200;
  report(2, ok,
         fmt("closed form vs stationary chain on %d points: max rel err %.2e "
             "(<= 1e-8), runtime %.2f s (< 5 s)",
             points, maxRel, elapsed));
}

void criterion_3() {
  StaffingResult qed = staff_qed(0.04, kBaseline);
  double R = kBaseline.lambda / kBaseline.mu;
  StaffingResult qd = staff_qd(kBaseline, 0.1);
  StaffingResult ed = staff_ed(kBaseline, 0.1);
  int qdExpected = int(std::ceil(R * 1.1));
  int edExpected = int(std::ceil(R * 0.9));
  bool ok = qed.beds >= 265 && qed.beds <= 280 && qd.beds == qdExpected &&
            qd.beds == 306 && ed.beds == edExpected && ed.beds == 250;
  report(3, ok,
         fmt("square-root staffing gives %d beds (in [265, 280]); safety rules give "
             "%d (= ceil(1.1R) = 306) and %d (= ceil(0.9R) = 250)",
             qed.beds, qd.beds, ed.beds));
}

BatchMeans criterion_4() {
  BatchMeans m = measure(shelter_config(164, 0), 100, 1);
  bool ok = within(m.abPct, 31.16, 3.0) && within(m.utilPct, 99.26, 1.5) &&
            within(m.abandonedCount, 498.0, 50.0) && m.seconds < 60.0;
  report(4, ok,
         fmt("164 beds, no thresholds: abandonment %.2f%% vs 31.16+-3pp, "
             "utilization %.2f%% vs 99.26+-1.5pp, abandoners %.1f vs 498+-50, "
             "runtime %.1f s (< 60 s)",
             m.abPct, m.utilPct, m.abandonedCount, m.seconds));
  return m;
}

void criterion_5() {
  BatchMeans m = measure(shelter_config(270, 0), 100, 1);
  bool ok = within(m.abPct, 2.46, 1.0) && within(m.utilPct, 86.21, 3.0) &&
            within(m.abandonedCount, 39.0, 12.0);
  report(5, ok,
         fmt("270 beds, no thresholds: abandonment %.2f%% vs 2.46+-1pp, "
             "utilization %.2f%% vs 86.21+-3pp, abandoners %.1f vs 39+-12",
             m.abPct, m.utilPct, m.abandonedCount));
}

void criterion_6() {
  BatchMeans m = measure(shelter_config(270, 25), 100, 1);
  double maxHighWait = 0.0;
  for (int j = 0; j < 5; ++j) maxHighWait = std::max(maxHighWait, m.classWaitDays[j]);
  bool ok = within(m.abPct, 2.47, 1.0) && within(m.classAbPct[5], 19.75, 4.0) &&
            m.highRisk <= 3.0 && maxHighWait <= 0.02;
  report(6, ok,
         fmt("270 beds, lowest-class threshold 25: abandonment %.2f%% vs 2.47+-1pp, "
             "lowest-class abandonment %.2f%% vs 19.75+-4pp, high-risk abandoners "
             "%.2f (<= 3), worst high-risk wait %.4f d (<= 0.02)",
             m.abPct, m.classAbPct[5], m.highRisk, maxHighWait));
}

void criterion_7() {
  BatchMeans ed = measure(shelter_config(250, 51), 100, 1);
  BatchMeans qd = measure(shelter_config(298, 0), 100, 1);
  bool okEd = within(ed.abPct, 4.77, 1.5) && within(ed.utilPct, 91.03, 3.0);
  bool okQd = qd.abPct <= 0.5 && qd.meanWaitDays <= 0.02;
  report(7, okEd && okQd,
         fmt("efficiency sizing (250 beds, threshold 51): abandonment %.2f%% vs "
             "4.77+-1.5pp, utilization %.2f%% vs 91.03+-3pp; quality sizing "
             "(298 beds): abandonment %.3f%% (<= 0.5%%), mean wait %.4f d (<= 0.02)",
             ed.abPct, ed.utilPct, qd.abPct, qd.meanWaitDays));
}

void criterion_8() {
  ScenarioConfig base = shelter_config(270, 25);
  auto series = [](const SweepResult& res, const char* metric) {
    std::vector<double> out;
    for (const auto& s : res.summaries) out.push_back(s.at(metric).mean);
    return out;
  };
  auto nondecreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] < v[i - 1]) return false;
    return true;
  };
  auto nonincreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[i - 1]) return false;
    return true;
  };

  SweepResult lam = sweep(base, SweepParam::Lambda,
                          {3.55, 4.00, 4.44, 4.88, 5.33}, 100, 1);
  std::vector<double> lamAb = series(lam, "abandonment_proportion");
  std::vector<double> lamUtil = series(lam, "utilization");
  double abHigh = 100.0 * lamAb.back();
  double utilHigh = 100.0 * lamUtil.back();
  bool okLam = within(abHigh, 8.0, 2.0) && within(utilHigh, 95.0, 2.0) &&
               nondecreasing(lamAb) && nondecreasing(lamUtil);

  SweepResult mu = sweep(base, SweepParam::Mu,
                         {0.014, 0.015, 0.016, 0.018, 0.021}, 100, 1);
  std::vector<double> muAb = series(mu, "abandonment_proportion");
  std::vector<double> muUtil = series(mu, "utilization");
  double utilSlow = 100.0 * muUtil.front();
  bool okMu = utilSlow < 90.0 && nonincreasing(muAb) && nonincreasing(muUtil);

  SweepResult th = sweep(base, SweepParam::Theta, {0.0, 0.33, 0.5, 1.0}, 100, 1);
  std::vector<double> thAb = series(th, "abandonment_proportion");
  std::vector<double> thWait = series(th, "mean_wait_days");
  double waitPatient = thWait.front();
  bool okTh = within(waitPatient, 2.5, 0.5) && nondecreasing(thAb) &&
              nonincreasing(thWait);

  report(8, okLam && okMu && okTh,
         fmt("demand sweep at 5.33/day: abandonment %.2f%% vs 8+-2pp, utilization "
             "%.2f%% vs 95+-2pp; slow-service point utilization %.2f%% (< 90%%); "
             "no-abandonment mean wait %.2f d vs 2.5+-0.5; monotone series "
             "lambda:%s mu:%s theta:%s",
             abHigh, utilHigh, utilSlow, waitPatient,
             (nondecreasing(lamAb) && nondecreasing(lamUtil)) ? "yes" : "NO",
             (nonincreasing(muAb) && nonincreasing(muUtil)) ? "yes" : "NO",
             (nondecreasing(thAb) && nonincreasing(thWait)) ? "yes" : "NO"));
}

void criterion_9() {
  // Exhaustive mapping: the table must equal the first-match rule cascade except
  // on the single documented combination (welfare+minority only), which the
  // authoritative table sends to E rather than D.
  int mapped = 0;
  bool mappingOk = true;
  for (int mask = 0; mask < 32; ++mask) {
    std::array<bool, kNumAttributes> attrs{};
    for (int b = 0; b < kNumAttributes; ++b) attrs[b] = (mask >> b) & 1;
    Group expected;
    if (attrs[kAttrHtVictim]) expected = Group::A;
    else if (attrs[kAttrSubstanceOrMentalHealth]) expected = Group::B;
    else if (attrs[kAttrLgbtq]) expected = Group::C;
    else if (attrs[kAttrWelfareOrJustice])
      expected = attrs[kAttrUsMinority] ? Group::E : Group::D;
    else if (attrs[kAttrUsMinority]) expected = Group::E;
    else expected = Group::F;
    if (group_of(attrs) != expected) mappingOk = false;
    ++mapped;
  }

  // Monte Carlo shares vs the exact table sums.
  const std::array<double, kNumGroups> printedShares = {0.200, 0.240, 0.168,
                                                        0.0529, 0.2156, 0.1235};
  AttributeModel model;
  RandomStream rng(derive_stream_seed(2026, 0, kStreamProfile));
  std::array<std::int64_t, kNumGroups> counts{};
  const int samples = 1000000;
  for (int i = 0; i < samples; ++i) {
    counts[int(sample_profile(model, rng).group)]++;
  }
  double worstShareErr = 0.0;
  for (int j = 0; j < kNumGroups; ++j) {
    double share = double(counts[j]) / samples;
    worstShareErr = std::max(worstShareErr, std::fabs(share - printedShares[j]));
  }

  // Per-group arrival rates vs the published figures.
  const std::array<double, kNumGroups> printedRates = {0.89, 1.07, 0.75,
                                                       0.24, 0.96, 0.55};
  std::array<double, kNumGroups> rates = group_arrival_rates(kBaseline.lambda, model);
  double worstRateErr = 0.0;
  for (int j = 0; j < kNumGroups; ++j) {
    worstRateErr = std::max(worstRateErr, std::fabs(rates[j] - printedRates[j]));
  }

  bool ok = mappingOk && mapped == 32 && worstShareErr <= 0.005 && worstRateErr <= 0.02;
  report(9, ok,
         fmt("all 32 attribute combinations map correctly: %s; 10^6-sample group "
             "shares within %.4f of the exact sums (<= 0.005); per-group arrival "
             "rates within %.4f/day of the published values (<= 0.02)",
             mappingOk ? "yes" : "NO", worstShareErr, worstRateErr));
}

void criterion_10() {
  // Analytic policy on the recommended sizing: all high-risk thresholds collapse
  // to zero.
  std::vector<WaitCap> waitCaps = {{0.05, 1.0}, {0.08, 1.0}, {0.05, 2.0},
                                   {0.10, 2.0}, {0.15, 2.0}};
  ScenarioConfig cfg270 = shelter_config(270, 0);
  AnalyticThresholds analytic =
      analytic_thresholds(cfg270.classRates(), 270, kBaseline, waitCaps);
  bool analyticZeros = true;
  for (int j = 0; j <= 4; ++j) analyticZeros &= (analytic.policy.K[j] == 0);

  // Simulation calibration against the wait-tail caps plus the high-risk
  // abandoner cap of the base model.
  QosTargets caps;
  caps.perClassWaitCaps = waitCaps;
  caps.maxHighRiskAbandoned = 3.0;

  std::string detail;
  bool ok = analyticZeros;
  try {
    CalibratedThresholds cal270 =
        calibrate_thresholds_by_simulation(cfg270, caps, 200, 20, 1);
    int kf270 = cal270.policy.K[5];
    bool zerosAbove = true;
    for (int j = 0; j <= 4; ++j) zerosAbove &= (cal270.policy.K[j] == 0);

    ScenarioConfig check = cfg270;
    check.policy = cal270.policy;
    BatchMeans m = measure(check, 100, 1);

    // At the efficiency-driven sizing the high-risk cap is unattainable at any
    // threshold (blocking the lowest class entirely still leaves the five
    // protected classes over the cap), so the sizing comparison uses a shared
    // attainable cap; the strict attempt documents the infeasibility.
    bool strictInfeasibleAt250 = false;
    try {
      calibrate_thresholds_by_simulation(shelter_config(250, 0), caps, 200, 20, 1);
    } catch (const InfeasibleError&) {
      strictInfeasibleAt250 = true;
    }
    QosTargets shared = caps;
    shared.maxHighRiskAbandoned = 25.0;
    int kfQed =
        calibrate_thresholds_by_simulation(cfg270, shared, 200, 20, 1).policy.K[5];
    int kfEd = calibrate_thresholds_by_simulation(shelter_config(250, 0), shared,
                                                  200, 20, 1)
                   .policy.K[5];

    ok = ok && kf270 >= 15 && kf270 <= 40 && zerosAbove && m.highRisk <= 3.0 &&
         kfEd > kfQed;
    detail = fmt(
        "analytic high-risk thresholds all zero: %s; calibrated lowest-class "
        "threshold %d (in [15, 40]: %s) with high-risk abandoners %.2f over 100 "
        "replications (<= 3: %s); tighter sizing calibrates higher under a shared "
        "cap: %d > %d %s (strict cap infeasible at 250 beds: %s)",
        analyticZeros ? "yes" : "NO", kf270,
        (kf270 >= 15 && kf270 <= 40) ? "yes" : "NO", m.highRisk,
        m.highRisk <= 3.0 ? "yes" : "NO", kfEd, kfQed, kfEd > kfQed ? "yes" : "NO",
        strictInfeasibleAt250 ? "yes" : "no");
  } catch (const Error& e) {
    ok = false;
    detail = fmt("analytic high-risk thresholds all zero: %s; calibration failed: %s",
                 analyticZeros ? "yes" : "NO", e.what());
  }
  report(10, ok, detail);
}

void criterion_11() {
  fs::path scratch =
      fs::temp_directory_path() / ("shelterq_acceptance_" + std::to_string(::getpid()));
  fs::path dirA = scratch / "runA";
  fs::path dirB = scratch / "runB";
  fs::create_directories(dirA);
  fs::create_directories(dirB);
  std::string cli = SHELTERQ_CLI_PATH;
  std::string scenario = std::string(SHELTERQ_SOURCE_DIR) + "/scenarios/baseline.ini";

  auto run = [&](const fs::path& dir) {
    std::string cmd = cli + " simulate --scenario " + scenario + " --out-dir " +
                      dir.string() + " > " + (dir / "stdout.txt").string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  int rcA = run(dirA);
  int rcB = run(dirB);

  const char* files[] = {"replications_current.csv",  "summary_current.csv",
                         "replications_expanded.csv", "summary_expanded.csv",
                         "replications_reserve.csv",  "summary_reserve.csv",
                         "comparison.csv"};
  bool identical = rcA == 0 && rcB == 0;
  std::string firstDiff;
  for (const char* f : files) {
    std::string a = read_file(dirA / f);
    if (a.rfind("<missing", 0) == 0 || a != read_file(dirB / f)) {
      identical = false;
      if (firstDiff.empty()) firstDiff = f;
    }
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  report(11, identical,
         identical
             ? fmt("two identical cli runs produced byte-identical output files "
                   "(%zu files compared)",
                   std::size(files))
             : fmt("cli runs differ (exit %d/%d, first differing file: %s)", rcA,
                   rcB, firstDiff.empty() ? "none" : firstDiff.c_str()));
}

void criterion_12() {
  struct Setup {
    const char* name;
    int beds;
    int lowestThreshold;
  };
  const Setup setups[] = {{"current", 164, 0},
                        {"expanded", 270, 0},
                        {"reserve", 270, 25},
                        {"efficiency", 250, 51},
                        {"quality", 298, 0}};
  int verified = 0;
  int violations = 0;
  std::string firstBad;
  for (const Setup& s : setups) {
    ScenarioConfig cfg = shelter_config(s.beds, s.lowestThreshold);
    for (std::uint64_t r = 0; r < 100; ++r) {
      std::vector<TraceRow> trace;
      run_replication(cfg, 1, r, &trace);
      std::optional<TraceViolation> v =
          verify_threshold_trace(trace, cfg.policy, cfg.beds, cfg.initialOccupancy);
      ++verified;
      if (v.has_value()) {
        ++violations;
        if (firstBad.empty()) {
          firstBad = fmt("%s rep %llu row %zu: %s", s.name,
                         (unsigned long long)r, v->row, v->reason.c_str());
        }
      }
    }
  }
  report(12, violations == 0,
         violations == 0
             ? fmt("threshold traces verified clean on all %d replications "
                   "across the five evaluated systems",
                   verified)
             : fmt("%d of %d traces violated the admission rule (first: %s)",
                   violations, verified, firstBad.c_str()));
}

}  // namespace

int main() {
  std::printf("acceptance gate: twelve criteria\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  if (g_failures == 0) {
    std::printf("acceptance gate: all 12 criteria PASS\n");
  } else {
    std::printf("acceptance gate: %d of 12 criteria FAIL\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
