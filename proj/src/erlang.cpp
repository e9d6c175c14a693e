#include "shelterq/erlang.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "shelterq/errors.hpp"
#include "shelterq/special_functions.hpp"

namespace shelterq {

void SystemParams::validate() const {
  if (!std::isfinite(lambda) || !(lambda > 0.0)) {
    throw ValidationError("bad-lambda", "arrival rate lambda must be finite and > 0");
  }
  if (!std::isfinite(mu) || !(mu > 0.0)) {
    throw ValidationError("bad-mu", "service rate mu must be finite and > 0");
  }
  if (!std::isfinite(theta) || !(theta >= 0.0)) {
    throw ValidationError("bad-theta", "abandonment rate theta must be finite and >= 0");
  }
}

namespace {

// Total departure rate out of state k (k customers present, min(k, beds) in service).
inline double death_rate(long long k, int beds, const SystemParams& p) {
  long long busy = std::min<long long>(k, beds);
  long long queued = k - busy;
  return static_cast<double>(busy) * p.mu + static_cast<double>(queued) * p.theta;
}

}  // namespace

std::vector<double> stationary_distribution(int beds, const SystemParams& p,
                                            double tailEps) {
  p.validate();
  if (beds < 1) {
    throw ValidationError("bad-beds", "bed count must be >= 1");
  }
  if (!(tailEps > 0.0) || tailEps > 1e-6) {
    throw ValidationError("bad-tail-eps", "tail tolerance must lie in (0, 1e-6]");
  }
  if (p.theta == 0.0 && p.lambda >= beds * p.mu) {
    throw ValidationError(
        "unstable-without-abandonment",
        "lambda >= beds*mu with theta = 0: the queue grows without bound");
  }

  // Modal state: largest k with birth rate >= death rate.
  long long mode;
  if (p.theta > 0.0 && p.lambda >= beds * p.mu) {
    mode = beds + static_cast<long long>(std::floor((p.lambda - beds * p.mu) / p.theta));
  } else {
    mode = std::min<long long>(beds, static_cast<long long>(std::floor(p.lambda / p.mu)));
  }

  // Minimum truncation point: far enough past the beds that the abandonment-damped
  // tail (spread ~ sqrt(lambda/theta + beds)) is fully covered.
  double spread = (p.theta > 0.0) ? std::sqrt(p.lambda / p.theta + beds)
                                  : std::sqrt(static_cast<double>(beds));
  long long minK = beds + static_cast<long long>(std::ceil(20.0 * spread));
  constexpr long long kHardCap = 5'000'000;

  // Unnormalized weights outward from the mode (w[mode] = 1): every ratio used is <= 1,
  // so nothing overflows; far-tail weights underflow harmlessly to 0.
  std::vector<double> up;  // w[mode], w[mode+1], ...
  up.push_back(1.0);
  long double upSum = 1.0L;
  for (long long k = mode + 1;; ++k) {
    double ratio = p.lambda / death_rate(k, beds, p);
    double w = up.back() * ratio;
    up.push_back(w);
    upSum += w;
    if (k >= minK && k > mode) {
      // Geometric bound on the neglected tail: ratios only decrease beyond k.
      double r = p.lambda / death_rate(k + 1, beds, p);
      if (r < 1.0 && w * r / (1.0 - r) < tailEps * static_cast<double>(upSum)) {
        break;
      }
    }
    if (k > kHardCap) {
      throw NumericalError("numerical-inconsistency",
                           "stationary distribution truncation exceeded hard cap");
    }
  }

  std::vector<double> pi(static_cast<std::size_t>(mode) + up.size(), 0.0);
  for (std::size_t i = 0; i < up.size(); ++i) {
    pi[static_cast<std::size_t>(mode) + i] = up[i];
  }
  long double total = upSum;
  double w = 1.0;
  for (long long k = mode; k >= 1; --k) {
    w *= death_rate(k, beds, p) / p.lambda;
    pi[static_cast<std::size_t>(k - 1)] = w;
    total += w;
  }

  double inv = static_cast<double>(1.0L / total);
  for (double& v : pi) v *= inv;
  return pi;
}

ErlangAMetrics erlang_a_metrics(int beds, const SystemParams& p) {
  std::vector<double> pi = stationary_distribution(beds, p);
  long double pWait = 0.0L;
  long double queueLen = 0.0L;
  long double busy = 0.0L;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    auto kk = static_cast<long long>(k);
    busy += static_cast<long double>(std::min<long long>(kk, beds)) * pi[k];
    if (kk >= beds) pWait += pi[k];
    if (kk > beds) queueLen += static_cast<long double>(kk - beds) * pi[k];
  }

  ErlangAMetrics m;
  m.pWait = static_cast<double>(pWait);
  m.meanWait = static_cast<double>(queueLen) / p.lambda;  // Little's law on the queue
  m.pAb = p.theta * m.meanWait;  // abandonment flow theta * E[queue] over arrival rate
  m.meanBusyServers = static_cast<double>(busy);
  m.occupancy = m.meanBusyServers / beds;
  m.pAbGivenWait = (m.pWait > 0.0) ? m.pAb / m.pWait : 0.0;
  return m;
}

double p_ab_given_wait_closed_form(int beds, const SystemParams& p) {
  p.validate();
  if (beds < 1) {
    throw ValidationError("bad-beds", "bed count must be >= 1");
  }
  if (!(p.theta > 0.0)) {
    throw ValidationError("closed-form-needs-abandonment",
                          "closed form requires theta > 0");
  }
  double x = beds * p.mu / p.theta;
  double y = p.lambda / p.theta;
  double rho = p.lambda / (beds * p.mu);
  // 1/(rho A) + 1 - 1/rho == 1 - (A-1)/(rho A); the right-hand form avoids cancelling
  // two nearly equal large terms when rho < 1.
  double am1 = a_func_minus_one(x, y);
  double v = 1.0 - am1 / (rho * (1.0 + am1));
  if (v < 0.0 || v > 1.0) {
    if (v < -1e-9 || v > 1.0 + 1e-9) {
      throw NumericalError("numerical-inconsistency",
                           "closed-form conditional abandonment left [0,1]");
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  return v;
}

}  // namespace shelterq
