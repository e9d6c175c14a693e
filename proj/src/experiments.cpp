#include "shelterq/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <variant>

#include "shelterq/errors.hpp"
#include "shelterq/population.hpp"

namespace shelterq {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

bool has_wait_tails(const ScenarioConfig& config) {
  return !config.waitTailMarkerDays.empty();
}

}  // namespace

ReplicationStudy run_replications(const ScenarioConfig& config, int replications,
                                  std::uint64_t baseSeed) {
  if (replications < 2) {
    throw ValidationError("bad-replications",
                          "confidence intervals need at least 2 replications");
  }
  config.validate();
  ReplicationStudy study;
  study.config = config;
  study.baseSeed = baseSeed;
  study.replications.reserve(replications);
  for (int r = 0; r < replications; ++r) {
    study.replications.push_back(run_replication(config, baseSeed, r));
  }
  return study;
}

std::vector<std::string> metric_names(int numClasses, bool withWaitTails) {
  std::vector<std::string> names = {
      "arrivals",       "served",       "abandoned",
      "in_system_at_horizon", "abandonment_proportion", "mean_wait_days",
      "utilization",    "high_risk_abandoned"};
  for (int j = 0; j < numClasses; ++j) {
    std::string prefix = std::string("class_") + group_letter(static_cast<Group>(j)) + "_";
    names.push_back(prefix + "arrivals");
    names.push_back(prefix + "served");
    names.push_back(prefix + "abandoned");
    names.push_back(prefix + "abandonment_proportion");
    names.push_back(prefix + "mean_wait_days");
    if (withWaitTails) {
      names.push_back(prefix + "wait_tail_proportion");
    }
  }
  return names;
}

std::map<std::string, double> metric_values(const RawReplicationMetrics& rep,
                                            bool withWaitTails) {
  std::map<std::string, double> out;
  out["arrivals"] = static_cast<double>(rep.aggregate.arrivals);
  out["served"] = static_cast<double>(rep.aggregate.served);
  out["abandoned"] = static_cast<double>(rep.aggregate.abandoned);
  out["in_system_at_horizon"] = static_cast<double>(rep.aggregate.inSystemAtHorizon);
  out["abandonment_proportion"] = rep.aggregate.abandonmentProportion;
  out["mean_wait_days"] = rep.aggregate.meanWaitDays;
  out["utilization"] = rep.meanUtilization;
  out["high_risk_abandoned"] = static_cast<double>(rep.highRiskAbandonedCount);
  for (std::size_t j = 0; j < rep.perClass.size(); ++j) {
    const ClassMetrics& c = rep.perClass[j];
    std::string prefix = std::string("class_") + group_letter(static_cast<Group>(j)) + "_";
    out[prefix + "arrivals"] = static_cast<double>(c.arrivals);
    out[prefix + "served"] = static_cast<double>(c.served);
    out[prefix + "abandoned"] = static_cast<double>(c.abandoned);
    out[prefix + "abandonment_proportion"] = c.abandonmentProportion;
    out[prefix + "mean_wait_days"] = c.meanWaitDays;
    if (withWaitTails) {
      out[prefix + "wait_tail_proportion"] =
          c.arrivals > 0 ? static_cast<double>(c.waitTailCount) / c.arrivals : 0.0;
    }
  }
  return out;
}

std::map<std::string, MetricSummary> summarize(const ReplicationStudy& study) {
  const bool tails = has_wait_tails(study.config);
  const int n = static_cast<int>(study.replications.size());
  if (n < 2) {
    throw ValidationError("bad-replications",
                          "confidence intervals need at least 2 replications");
  }
  std::map<std::string, std::vector<double>> samples;
  for (const RawReplicationMetrics& rep : study.replications) {
    for (const auto& [name, value] : metric_values(rep, tails)) {
      samples[name].push_back(value);
    }
  }
  std::map<std::string, MetricSummary> out;
  for (const auto& [name, values] : samples) {
    MetricSummary s;
    s.n = n;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    double ss = 0.0;
    for (double v : values) {
      double d = v - s.mean;
      ss += d * d;
    }
    s.sd = std::sqrt(ss / (n - 1));
    s.ci95 = 1.96 * s.sd / std::sqrt(static_cast<double>(n));
    out[name] = s;
  }
  return out;
}

Comparison compare_scenarios(
    const std::vector<std::pair<std::string, ScenarioConfig>>& scenarios,
    int replications, std::uint64_t baseSeed) {
  if (scenarios.empty()) {
    throw ValidationError("bad-comparison", "need at least one scenario to compare");
  }
  Comparison out;
  int classes = scenarios.front().second.numClasses();
  bool tails = false;
  for (const auto& [name, config] : scenarios) {
    if (config.numClasses() != classes) {
      throw ValidationError("bad-comparison",
                            "compared scenarios must have the same classes");
    }
    tails = tails || has_wait_tails(config);
  }
  out.metrics = metric_names(classes, tails);
  for (const auto& [name, config] : scenarios) {
    out.names.push_back(name);
    // Same baseSeed for every scenario: replication r sees identical random input
    // everywhere, so scenario differences are not masked by sampling noise.
    ReplicationStudy study = run_replications(config, replications, baseSeed);
    out.summaries.push_back(summarize(study));
  }
  return out;
}

std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::Lambda: return "lambda";
    case SweepParam::Mu: return "mu";
    case SweepParam::Theta: return "theta";
  }
  throw ValidationError("bad-sweep-param", "unknown sweep parameter");
}

SweepResult sweep(const ScenarioConfig& base, SweepParam param,
                  const std::vector<double>& values, int replications,
                  std::uint64_t baseSeed) {
  if (values.empty()) {
    throw ValidationError("bad-sweep", "sweep needs at least one value");
  }
  base.validate();
  SweepResult out;
  out.param = param;
  out.values = values;
  out.metrics = metric_names(base.numClasses(), has_wait_tails(base));
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || (param != SweepParam::Theta && v <= 0.0)) {
      throw ValidationError("bad-sweep", "sweep values must be positive "
                                         "(theta may also be 0)");
    }
    ScenarioConfig config = base;
    switch (param) {
      case SweepParam::Lambda: {
        if (auto* rates = std::get_if<ExplicitRates>(&config.arrivals)) {
          double scale = v / config.params.lambda;
          for (double& r : rates->rates) r *= scale;
        }
        config.params.lambda = v;
        break;
      }
      case SweepParam::Mu:
        config.params.mu = v;
        break;
      case SweepParam::Theta:
        config.params.theta = v;
        break;
    }
    ReplicationStudy study = run_replications(config, replications, baseSeed);
    out.summaries.push_back(summarize(study));
  }
  return out;
}

std::string replications_to_csv(const ReplicationStudy& study) {
  const bool tails = has_wait_tails(study.config);
  std::vector<std::string> metrics = metric_names(study.config.numClasses(), tails);
  std::string out = "replication";
  for (const std::string& m : metrics) {
    out += ',';
    out += m;
  }
  out += '\n';
  for (const RawReplicationMetrics& rep : study.replications) {
    out += std::to_string(rep.replicationIndex);
    std::map<std::string, double> row = metric_values(rep, tails);
    for (const std::string& m : metrics) {
      out += ',';
      out += fmt_double(row.at(m));
    }
    out += '\n';
  }
  return out;
}

std::string summary_to_csv(const std::string& scenarioName,
                           const std::vector<std::string>& metrics,
                           const std::map<std::string, MetricSummary>& summary) {
  std::string out = "scenario,metric,mean,sd,ci95,n\n";
  for (const std::string& m : metrics) {
    auto it = summary.find(m);
    if (it == summary.end()) continue;
    const MetricSummary& s = it->second;
    out += scenarioName;
    out += ',';
    out += m;
    out += ',';
    out += fmt_double(s.mean);
    out += ',';
    out += fmt_double(s.sd);
    out += ',';
    out += fmt_double(s.ci95);
    out += ',';
    out += std::to_string(s.n);
    out += '\n';
  }
  return out;
}

std::string comparison_to_csv(const Comparison& comparison) {
  std::string out = "metric";
  for (const std::string& name : comparison.names) {
    out += ',';
    out += name + "_mean";
    out += ',';
    out += name + "_ci95";
  }
  out += '\n';
  for (const std::string& m : comparison.metrics) {
    out += m;
    for (const auto& summary : comparison.summaries) {
      auto it = summary.find(m);
      out += ',';
      out += it == summary.end() ? "" : fmt_double(it->second.mean);
      out += ',';
      out += it == summary.end() ? "" : fmt_double(it->second.ci95);
    }
    out += '\n';
  }
  return out;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out = "param,value,metric,mean,sd,ci95,n\n";
  const std::string pname = sweep_param_name(result.param);
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    for (const std::string& m : result.metrics) {
      auto it = result.summaries[i].find(m);
      if (it == result.summaries[i].end()) continue;
      const MetricSummary& s = it->second;
      out += pname;
      out += ',';
      out += fmt_double(result.values[i]);
      out += ',';
      out += m;
      out += ',';
      out += fmt_double(s.mean);
      out += ',';
      out += fmt_double(s.sd);
      out += ',';
      out += fmt_double(s.ci95);
      out += ',';
      out += std::to_string(s.n);
      out += '\n';
    }
  }
  return out;
}

}  // namespace shelterq
