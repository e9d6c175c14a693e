#pragma once

#include <vector>

namespace shelterq {

// Arrival, service, and abandonment rates of the single-pool Markov model.
// Units are per day throughout this library (any consistent unit works).
struct SystemParams {
  double lambda = 0.0;  // aggregate Poisson arrival rate
  double mu = 0.0;      // per-bed service (departure) rate
  double theta = 0.0;   // abandonment (patience) rate; 0 disables abandonment
  void validate() const;
};

// Steady-state performance of the N-bed system with abandonment.
struct ErlangAMetrics {
  double pWait = 0.0;            // P{arrival finds all beds busy}
  double pAbGivenWait = 0.0;     // P{abandon | wait > 0}
  double pAb = 0.0;              // P{abandon}
  double meanWait = 0.0;         // mean queueing time over all arrivals (days)
  double meanBusyServers = 0.0;  // E[number of occupied beds]
  double occupancy = 0.0;        // meanBusyServers / beds
};

// Stationary distribution pi_0..pi_K of the occupancy birth-death chain, truncated
// adaptively so the neglected tail is below tailEps relative to the retained mass.
// Uses a mode-anchored ratio recursion with a single final normalization: weights are
// built outward from the modal state so no factorials, no Erlang-B/C chaining, and no
// overflow appear at any bed count. Requires theta > 0 or lambda < beds * mu; otherwise
// the chain has no stationary law and a ValidationError with code
// "unstable-without-abandonment" is thrown.
std::vector<double> stationary_distribution(int beds, const SystemParams& p,
                                            double tailEps = 1e-12);

// Exact steady-state metrics computed from the stationary distribution.
ErlangAMetrics erlang_a_metrics(int beds, const SystemParams& p);

// Closed-form P{abandon | wait > 0} = 1/(rho A(x,y)) + 1 - 1/rho with
// x = beds*mu/theta, y = lambda/theta, rho = lambda/(beds*mu), evaluated in the
// cancellation-safe form 1 - (A-1)/(rho A). Requires theta > 0. Results outside [0, 1]
// by more than 1e-9 raise NumericalError("numerical-inconsistency"); smaller excursions
// are clamped.
double p_ab_given_wait_closed_form(int beds, const SystemParams& p);

}  // namespace shelterq
