#pragma once

#include <optional>

#include "shelterq/erlang.hpp"

namespace shelterq {

// Staffing rules. QD/ED/QED are regime formulas; the EXACT_* rules search the exact
// birth-death metrics for the smallest bed count meeting a cap.
enum class Regime { QD, ED, QED, EXACT_AB, EXACT_WAIT };
const char* regime_name(Regime r);

struct StaffingResult {
  Regime regime = Regime::QED;
  int beds = 0;
  double offeredLoad = 0.0;                // R = lambda / mu
  std::optional<double> gammaUsed;         // QD/ED safety fraction
  std::optional<double> betaStar;          // QED square-root slack coefficient
  std::optional<double> achievedPAb;       // exact P{abandon} at the returned bed count
  std::optional<double> achievedMeanWait;  // exact mean wait at the returned bed count
};

// Quality-driven: beds = ceil(R (1 + gamma)); over-provisions by a safety fraction.
StaffingResult staff_qd(const SystemParams& p, double gamma);

// Efficiency-driven: beds = ceil(R (1 - gamma)), at least 1; runs hot on purpose.
StaffingResult staff_ed(const SystemParams& p, double gamma);

// Square-root staffing slack: solves, for beta,
//   M sqrt(lambda) = sqrt(theta) (h(bh) - bh) / (1 + sqrt(theta/mu) h(bh) / h(-beta)),
// where bh = beta sqrt(mu/theta), h is the normal hazard rate, and M is the target
// abandonment fraction. The right-hand side decreases strictly from +inf to 0, so a
// unique root exists; bisection on an expanding bracket finds it to residual <= 1e-9.
double solve_beta_star(double targetAbandonFraction, const SystemParams& p);

// Quality-and-efficiency-driven: beds = ceil(R + betaStar * sqrt(R)).
StaffingResult staff_qed(double targetAbandonFraction, const SystemParams& p);

// Smallest bed count with exact P{abandon} <= alpha (monotone search).
StaffingResult min_beds_for_abandonment(const SystemParams& p, double alpha);

// Smallest bed count with exact mean wait <= maxMeanWait days, annotated with the
// abandonment probability that choice implies.
StaffingResult min_beds_for_wait(const SystemParams& p, double maxMeanWait);

}  // namespace shelterq
