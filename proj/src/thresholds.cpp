#include "shelterq/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "shelterq/desim.hpp"
#include "shelterq/errors.hpp"

namespace shelterq {

void ThresholdPolicy::validate() const {
  if (K.empty()) {
    throw ValidationError("bad-policy", "threshold policy must cover at least one class");
  }
  if (K.front() != 0) {
    throw ValidationError("bad-policy", "the highest-priority class must have threshold 0");
  }
  for (std::size_t j = 0; j < K.size(); ++j) {
    if (K[j] < 0) {
      throw ValidationError("bad-policy", "thresholds must be >= 0");
    }
    if (j > 0 && K[j] < K[j - 1]) {
      throw ValidationError("bad-policy",
                            "thresholds must not decrease with falling priority");
    }
  }
}

CumulativeLoads cumulative_loads(const std::vector<double>& classRates, int beds,
                                 double mu, double eps) {
  if (beds < 1) throw ValidationError("bad-beds", "bed count must be >= 1");
  if (!std::isfinite(mu) || !(mu > 0.0)) {
    throw ValidationError("bad-mu", "service rate mu must be finite and > 0");
  }
  if (!(eps > 0.0) || eps >= 0.5) {
    throw ValidationError("bad-eps", "degeneracy margin eps must lie in (0, 0.5)");
  }
  if (classRates.empty()) {
    throw ValidationError("bad-class-rates", "need at least one class rate");
  }
  CumulativeLoads out;
  out.beds = beds;
  out.mu = mu;
  double acc = 0.0;
  for (double r : classRates) {
    if (!std::isfinite(r) || r < 0.0) {
      throw ValidationError("bad-class-rates", "class rates must be finite and >= 0");
    }
    acc += r;
    double sigma = acc / (beds * mu);
    bool degen = sigma >= 1.0 - eps;
    out.sigma.push_back(degen ? 1.0 - eps : sigma);
    out.degenerate.push_back(degen);
    out.anyDegenerate = out.anyDegenerate || degen;
  }
  return out;
}

namespace {

// Shared body of the two analytic variants; numerators[j] is the cap numerator of the
// boundary between classes j and j+1 (0-based).
AnalyticThresholds run_recursion(const std::vector<double>& classRates, int beds,
                                 const SystemParams& aggregate,
                                 const std::vector<double>& numerators,
                                 bool allowDegenerate, double eps) {
  aggregate.validate();
  const int J = static_cast<int>(classRates.size());
  if (static_cast<int>(numerators.size()) != J - 1) {
    throw ValidationError("bad-caps", "need one cap per class except the lowest");
  }
  double sum = 0.0;
  for (double r : classRates) sum += r;
  if (std::fabs(sum - aggregate.lambda) > 1e-6 * std::max(1.0, sum)) {
    throw ValidationError("rates-lambda-mismatch",
                          "class rates must sum to the aggregate lambda");
  }
  CumulativeLoads loads = cumulative_loads(classRates, beds, aggregate.mu, eps);
  if (loads.anyDegenerate && !allowDegenerate) {
    throw InfeasibleError("degenerate-load",
                          "cumulative load too close to capacity for the heavy-traffic "
                          "recursion; use simulation calibration instead");
  }

  AnalyticThresholds out;
  out.analyticallyDegenerate = loads.anyDegenerate;
  out.delayProbability.assign(J, 0.0);
  out.delayProbability[J - 1] = erlang_a_metrics(beds, aggregate).pWait;

  std::vector<int> gap(std::max(0, J - 1), 0);
  for (int j = J - 2; j >= 0; --j) {
    double sigma = loads.sigma[j];
    double sigmaNext = loads.sigma[j + 1];
    double omega = 1.0 / (beds * aggregate.mu * (1.0 - sigmaNext) * (1.0 - sigma));
    double pNext = out.delayProbability[j + 1];
    int g = 0;
    if (pNext > 0.0 && sigma > 0.0) {
      double arg = numerators[j] / (pNext * omega);
      // The ceiling applies before the floor at zero.
      double raw = std::log(arg) / std::log(sigma);
      if (std::isfinite(raw)) {
        g = std::max(0, static_cast<int>(std::ceil(raw)));
      }
    }
    gap[j] = g;
    out.delayProbability[j] = pNext * std::pow(sigma, g);
  }

  out.policy.K.assign(J, 0);
  for (int j = 0; j + 1 < J; ++j) {
    out.policy.K[j + 1] = out.policy.K[j] + gap[j];
  }
  out.policy.validate();
  return out;
}

}  // namespace

AnalyticThresholds analytic_thresholds(const std::vector<double>& classRates, int beds,
                                       const SystemParams& aggregate,
                                       const std::vector<WaitCap>& caps,
                                       bool allowDegenerate, double eps) {
  std::vector<double> numerators;
  for (const WaitCap& c : caps) {
    if (!std::isfinite(c.x) || c.x <= 0.0 || c.x > 1.0 || !std::isfinite(c.T) ||
        c.T <= 0.0) {
      throw ValidationError("bad-caps", "wait caps need x in (0, 1] and T > 0");
    }
    numerators.push_back(c.x * c.T);
  }
  return run_recursion(classRates, beds, aggregate, numerators, allowDegenerate, eps);
}

AnalyticThresholds analytic_thresholds_abandonment(
    const std::vector<double>& classRates, int beds, const SystemParams& aggregate,
    const std::vector<double>& abandonCaps, double capWindowDays, bool allowDegenerate,
    double eps) {
  if (!(aggregate.theta > 0.0)) {
    throw ValidationError("closed-form-needs-abandonment",
                          "abandonment-cap thresholds require theta > 0");
  }
  if (!std::isfinite(capWindowDays) || capWindowDays <= 0.0) {
    throw ValidationError("bad-caps", "cap window must be > 0 days");
  }
  std::vector<double> numerators;
  for (double alpha : abandonCaps) {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha > 1.0) {
      throw ValidationError("bad-caps", "abandonment caps must lie in (0, 1]");
    }
    // Abandonment-to-wait conversion P{Ab} = theta E[W] puts alpha/theta on the
    // wait scale; the window length plays the role of T.
    numerators.push_back(alpha * capWindowDays / aggregate.theta);
  }
  return run_recursion(classRates, beds, aggregate, numerators, allowDegenerate, eps);
}

namespace {

// Replication means of everything the calibration caps speak about.
struct CapMeans {
  std::vector<double> abandonmentProportion;
  std::vector<double> waitTailProportion;
  std::vector<double> meanWaitDays;
  double highRiskAbandoned = 0.0;
  double aggregateAbandonment = 0.0;
  double aggregateMeanWait = 0.0;
};

CapMeans replication_means(const ScenarioConfig& config, int reps,
                           std::uint64_t baseSeed) {
  const int J = config.numClasses();
  CapMeans m;
  m.abandonmentProportion.assign(J, 0.0);
  m.waitTailProportion.assign(J, 0.0);
  m.meanWaitDays.assign(J, 0.0);
  for (int r = 0; r < reps; ++r) {
    RawReplicationMetrics rep = run_replication(config, baseSeed, r);
    for (int j = 0; j < J; ++j) {
      const ClassMetrics& c = rep.perClass[j];
      m.abandonmentProportion[j] += c.abandonmentProportion;
      m.meanWaitDays[j] += c.meanWaitDays;
      if (c.arrivals > 0) {
        m.waitTailProportion[j] += static_cast<double>(c.waitTailCount) / c.arrivals;
      }
    }
    m.highRiskAbandoned += static_cast<double>(rep.highRiskAbandonedCount);
    m.aggregateAbandonment += rep.aggregate.abandonmentProportion;
    m.aggregateMeanWait += rep.aggregate.meanWaitDays;
  }
  auto norm = [reps](double v) { return v / reps; };
  for (int j = 0; j < J; ++j) {
    m.abandonmentProportion[j] = norm(m.abandonmentProportion[j]);
    m.waitTailProportion[j] = norm(m.waitTailProportion[j]);
    m.meanWaitDays[j] = norm(m.meanWaitDays[j]);
  }
  m.highRiskAbandoned = norm(m.highRiskAbandoned);
  m.aggregateAbandonment = norm(m.aggregateAbandonment);
  m.aggregateMeanWait = norm(m.aggregateMeanWait);
  return m;
}

}  // namespace

CalibratedThresholds calibrate_thresholds_by_simulation(const ScenarioConfig& config,
                                                        const QosTargets& caps, int maxK,
                                                        int reps,
                                                        std::uint64_t baseSeed) {
  ScenarioConfig work = config;
  const int J = work.numClasses();
  work.policy.K.assign(J, 0);
  if (!caps.perClassWaitCaps.empty()) {
    if (static_cast<int>(caps.perClassWaitCaps.size()) != J - 1) {
      throw ValidationError("bad-caps", "need one wait cap per class except the lowest");
    }
    work.waitTailMarkerDays.assign(J, std::numeric_limits<double>::infinity());
    for (int j = 0; j + 1 < J; ++j) {
      work.waitTailMarkerDays[j] = caps.perClassWaitCaps[j].T;
    }
  }
  if (!caps.perClassAbandonCaps.empty() &&
      static_cast<int>(caps.perClassAbandonCaps.size()) != J - 1) {
    throw ValidationError("bad-caps",
                          "need one abandonment cap per class except the lowest");
  }
  work.validate();
  if (reps < 2) {
    throw ValidationError("bad-replications", "calibration needs at least 2 replications");
  }
  if (maxK < 0) {
    throw ValidationError("bad-maxk", "threshold search bound must be >= 0");
  }

  // Caps on classes 0..upTo, given the boundary being tuned sits below class upTo.
  auto satisfied = [&](const std::vector<int>& K, int upTo) {
    work.policy.K = K;
    CapMeans m = replication_means(work, reps, baseSeed);
    for (int j = 0; j <= upTo; ++j) {
      if (!caps.perClassWaitCaps.empty() &&
          m.waitTailProportion[j] > caps.perClassWaitCaps[j].x) {
        return false;
      }
      if (!caps.perClassAbandonCaps.empty() &&
          m.abandonmentProportion[j] > caps.perClassAbandonCaps[j]) {
        return false;
      }
      if (caps.maxPerClassMeanWait && m.meanWaitDays[j] > *caps.maxPerClassMeanWait) {
        return false;
      }
    }
    // The high-risk count covers exactly the classes above the lowest boundary.
    if (upTo == J - 2 && caps.maxHighRiskAbandoned &&
        m.highRiskAbandoned > *caps.maxHighRiskAbandoned) {
      return false;
    }
    return true;
  };

  std::vector<int> gap(std::max(0, J - 1), 0);
  auto policy_for = [&](const std::vector<int>& gaps) {
    std::vector<int> K(J, 0);
    for (int j = 0; j + 1 < J; ++j) K[j + 1] = K[j] + gaps[j];
    return K;
  };

  // Boundaries from the lowest priority upward; raising a boundary's increment only
  // shelters the classes above it, so cap satisfaction is monotone in the increment.
  for (int j = J - 2; j >= 0; --j) {
    auto try_gap = [&](int g) {
      std::vector<int> gaps = gap;
      gaps[j] = g;
      std::vector<int> K = policy_for(gaps);
      if (K[j + 1] > maxK) return std::optional<bool>{};  // out of budget
      return std::optional<bool>{satisfied(K, j)};
    };
    std::optional<bool> atZero = try_gap(0);
    if (!atZero.has_value()) {
      throw InfeasibleError("infeasible-at-maxK",
                            "threshold budget exhausted before boundary " +
                                std::to_string(j));
    }
    if (*atZero) {
      gap[j] = 0;
      continue;
    }
    int lo = 0;  // known failing
    int hi = 1;
    for (;;) {
      std::optional<bool> ok = try_gap(hi);
      if (!ok.has_value()) {
        throw InfeasibleError("infeasible-at-maxK",
                              "no feasible threshold within the search bound");
      }
      if (*ok) break;
      lo = hi;
      hi *= 2;
    }
    while (hi - lo > 1) {
      int mid = lo + (hi - lo) / 2;
      std::optional<bool> ok = try_gap(mid);
      if (ok.has_value() && *ok) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    gap[j] = hi;
  }

  CalibratedThresholds out;
  out.policy.K = policy_for(gap);
  out.policy.validate();
  out.replicationsPerPoint = reps;
  out.baseSeed = baseSeed;

  // Global caps are verified on the final policy (they are not monotone in any single
  // boundary and so cannot drive the search).
  if (caps.alphaGlobal || caps.maxMeanWait) {
    work.policy.K = out.policy.K;
    CapMeans m = replication_means(work, reps, baseSeed);
    if (caps.alphaGlobal && m.aggregateAbandonment > *caps.alphaGlobal) {
      throw InfeasibleError("infeasible-at-maxK",
                            "calibrated policy violates the aggregate abandonment cap");
    }
    if (caps.maxMeanWait && m.aggregateMeanWait > *caps.maxMeanWait) {
      throw InfeasibleError("infeasible-at-maxK",
                            "calibrated policy violates the aggregate mean wait cap");
    }
  }
  return out;
}

}  // namespace shelterq
