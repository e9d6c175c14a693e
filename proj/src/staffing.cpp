#include "shelterq/staffing.hpp"

#include <cmath>
#include <functional>

#include "shelterq/errors.hpp"
#include "shelterq/special_functions.hpp"

namespace shelterq {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::QD: return "QD";
    case Regime::ED: return "ED";
    case Regime::QED: return "QED";
    case Regime::EXACT_AB: return "EXACT_AB";
    case Regime::EXACT_WAIT: return "EXACT_WAIT";
  }
  return "?";
}

namespace {

void check_gamma(double gamma) {
  if (!std::isfinite(gamma) || gamma < 0.0 || gamma >= 1.0) {
    throw ValidationError("bad-gamma", "safety fraction gamma must lie in [0, 1)");
  }
}

void annotate_exact(StaffingResult& r, const SystemParams& p) {
  ErlangAMetrics m = erlang_a_metrics(r.beds, p);
  r.achievedPAb = m.pAb;
  r.achievedMeanWait = m.meanWait;
}

// First bed count at which the chain is stable even without abandonment.
int first_stable_beds(const SystemParams& p) {
  int n = static_cast<int>(std::floor(p.lambda / p.mu)) + 1;
  while (p.lambda >= n * p.mu) ++n;  // guard against floor landing on an integer R
  return n;
}

// Generic smallest-N search over a nonincreasing metric.
StaffingResult search_min_beds(Regime regime, const SystemParams& p, double cap,
                               const std::function<double(int)>& metric, int lowest) {
  constexpr int kMaxBeds = 1 << 26;
  int lo = lowest;
  if (metric(lo) <= cap) {
    StaffingResult r{regime, lo, p.lambda / p.mu};
    annotate_exact(r, p);
    return r;
  }
  int hi = lo;
  while (metric(hi) > cap) {
    if (hi > kMaxBeds) {
      throw InfeasibleError("no-feasible-beds",
                            "no bed count reaches the requested target");
    }
    lo = hi;
    hi *= 2;
  }
  // Invariant: metric(lo) > cap >= metric(hi).
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    (metric(mid) > cap ? lo : hi) = mid;
  }
  StaffingResult r{regime, hi, p.lambda / p.mu};
  annotate_exact(r, p);
  return r;
}

}  // namespace

StaffingResult staff_qd(const SystemParams& p, double gamma) {
  p.validate();
  check_gamma(gamma);
  double R = p.lambda / p.mu;
  StaffingResult r{Regime::QD, static_cast<int>(std::ceil(R * (1.0 + gamma))), R};
  r.gammaUsed = gamma;
  annotate_exact(r, p);
  return r;
}

StaffingResult staff_ed(const SystemParams& p, double gamma) {
  p.validate();
  check_gamma(gamma);
  double R = p.lambda / p.mu;
  int beds = std::max(1, static_cast<int>(std::ceil(R * (1.0 - gamma))));
  StaffingResult r{Regime::ED, beds, R};
  r.gammaUsed = gamma;
  if (p.theta > 0.0 || p.lambda < beds * p.mu) {
    annotate_exact(r, p);
  }
  return r;
}

double solve_beta_star(double targetAbandonFraction, const SystemParams& p) {
  p.validate();
  if (!(p.theta > 0.0)) {
    throw ValidationError("qed-needs-abandonment",
                          "square-root staffing balance requires theta > 0");
  }
  if (!std::isfinite(targetAbandonFraction) || targetAbandonFraction <= 0.0 ||
      targetAbandonFraction >= 1.0) {
    throw ValidationError("bad-abandon-target",
                          "target abandonment fraction must lie in (0, 1)");
  }

  const double lhs = targetAbandonFraction * std::sqrt(p.lambda);
  const double muOverTheta = std::sqrt(p.mu / p.theta);
  const double thetaOverMu = std::sqrt(p.theta / p.mu);
  auto residual = [&](double beta) {
    double bh = beta * muOverTheta;
    double numer = std::sqrt(p.theta) * (normal_hazard(bh) - bh);
    double denom = 1.0 + thetaOverMu * normal_hazard(bh) / normal_hazard(-beta);
    return numer / denom - lhs;
  };

  double lo = -10.0, hi = 10.0;
  int guard = 0;
  while (residual(lo) < 0.0) {
    lo *= 2.0;
    if (++guard > 5) throw InfeasibleError("no-root-in-bracket",
                                           "square-root staffing bracket exhausted");
  }
  guard = 0;
  while (residual(hi) > 0.0) {
    hi *= 2.0;
    if (++guard > 5) throw InfeasibleError("no-root-in-bracket",
                                           "square-root staffing bracket exhausted");
  }
  // The residual decreases in beta: residual(lo) >= 0 >= residual(hi).
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::fabs(lo)); ++i) {
    double mid = 0.5 * (lo + hi);
    (residual(mid) >= 0.0 ? lo : hi) = mid;
  }
  double beta = 0.5 * (lo + hi);
  if (std::fabs(residual(beta)) > 1e-9) {
    throw NumericalError("numerical-inconsistency",
                         "square-root staffing residual did not reach tolerance");
  }
  return beta;
}

StaffingResult staff_qed(double targetAbandonFraction, const SystemParams& p) {
  double beta = solve_beta_star(targetAbandonFraction, p);
  double R = p.lambda / p.mu;
  int beds = std::max(1, static_cast<int>(std::ceil(R + beta * std::sqrt(R))));
  StaffingResult r{Regime::QED, beds, R};
  r.betaStar = beta;
  annotate_exact(r, p);
  return r;
}

StaffingResult min_beds_for_abandonment(const SystemParams& p, double alpha) {
  p.validate();
  if (!std::isfinite(alpha) || alpha <= 0.0 || alpha >= 1.0) {
    throw ValidationError("bad-abandon-target",
                          "abandonment cap must lie in (0, 1)");
  }
  if (p.theta == 0.0) {
    // Without abandonment any stable system has P{abandon} = 0.
    StaffingResult r{Regime::EXACT_AB, first_stable_beds(p), p.lambda / p.mu};
    annotate_exact(r, p);
    return r;
  }
  auto metric = [&](int n) { return erlang_a_metrics(n, p).pAb; };
  return search_min_beds(Regime::EXACT_AB, p, alpha, metric, 1);
}

StaffingResult min_beds_for_wait(const SystemParams& p, double maxMeanWait) {
  p.validate();
  if (!std::isfinite(maxMeanWait) || maxMeanWait <= 0.0) {
    throw ValidationError("bad-wait-target", "mean wait cap must be > 0");
  }
  int lowest = (p.theta == 0.0) ? first_stable_beds(p) : 1;
  auto metric = [&](int n) { return erlang_a_metrics(n, p).meanWait; };
  return search_min_beds(Regime::EXACT_WAIT, p, maxMeanWait, metric, lowest);
}

}  // namespace shelterq
