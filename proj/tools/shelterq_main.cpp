// Command-line front end: exact analysis, staffing rules, threshold policies,
// replicated simulation, and parameter sweeps over scenario files.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shelterq/erlang.hpp"
#include "shelterq/errors.hpp"
#include "shelterq/experiments.hpp"
#include "shelterq/population.hpp"
#include "shelterq/scenario.hpp"
#include "shelterq/staffing.hpp"
#include "shelterq/thresholds.hpp"

namespace {

using namespace shelterq;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void kv(const std::string& key, const std::string& value) {
  std::cout << key << " = " << value << "\n";
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string default_out_dir() {
  const char* env = std::getenv("SHELTERQ_OUT_DIR");
  return env && *env ? env : ".";
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.flush();
  if (!out) {
    throw ValidationError("bad-output", "cannot write " + path.string());
  }
  std::cout << "wrote " << path.string() << "\n";
}

// "# key = value" preamble embedding the resolved configuration in result files.
std::string preamble(const ResolvedScenario& s) {
  std::string out;
  std::istringstream lines(describe_config(s));
  std::string line;
  while (std::getline(lines, line)) {
    out += "# ";
    out += line;
    out += '\n';
  }
  return out;
}

struct CommonFlags {
  std::string scenarioPath;
  std::string outDir = default_out_dir();
  std::uint64_t seed = 0;
  bool seedSet = false;
  int reps = 0;
  bool repsSet = false;
};

int cmd_analyze(double lambda, double mu, double theta, int beds,
                const std::string& format) {
  SystemParams p{lambda, mu, theta};
  ErlangAMetrics m = erlang_a_metrics(beds, p);
  std::optional<double> closed;
  if (theta > 0.0) closed = p_ab_given_wait_closed_form(beds, p);
  if (format == "csv") {
    std::cout << "lambda,mu,theta,beds,p_wait,p_abandon,p_abandon_given_wait,"
                 "p_abandon_given_wait_closed_form,mean_wait_days,mean_busy_servers,"
                 "occupancy\n";
    std::cout << fmt(lambda) << ',' << fmt(mu) << ',' << fmt(theta) << ',' << beds
              << ',' << fmt(m.pWait) << ',' << fmt(m.pAb) << ',' << fmt(m.pAbGivenWait)
              << ',' << (closed ? fmt(*closed) : std::string()) << ','
              << fmt(m.meanWait) << ',' << fmt(m.meanBusyServers) << ','
              << fmt(m.occupancy) << "\n";
  } else {
    kv("lambda", fmt(lambda));
    kv("mu", fmt(mu));
    kv("theta", fmt(theta));
    kv("beds", std::to_string(beds));
    kv("offered_load", fmt(lambda / mu));
    kv("p_wait", fmt(m.pWait));
    kv("p_abandon", fmt(m.pAb));
    kv("p_abandon_given_wait", fmt(m.pAbGivenWait));
    if (closed) kv("p_abandon_given_wait_closed_form", fmt(*closed));
    kv("mean_wait_days", fmt(m.meanWait));
    kv("mean_busy_servers", fmt(m.meanBusyServers));
    kv("occupancy", fmt(m.occupancy));
  }
  return 0;
}

int cmd_staff(double lambda, double mu, double theta, const std::string& regime,
              std::optional<double> gamma, std::optional<double> target,
              const std::string& format) {
  SystemParams p{lambda, mu, theta};
  StaffingResult r;
  if (regime == "qd") {
    if (!gamma) throw ValidationError("bad-capacity", "regime qd needs --gamma");
    r = staff_qd(p, *gamma);
  } else if (regime == "ed") {
    if (!gamma) throw ValidationError("bad-capacity", "regime ed needs --gamma");
    r = staff_ed(p, *gamma);
  } else if (regime == "qed") {
    if (!target) throw ValidationError("bad-capacity", "regime qed needs --target");
    r = staff_qed(*target, p);
  } else if (regime == "exact-ab") {
    if (!target) throw ValidationError("bad-capacity", "regime exact-ab needs --target");
    r = min_beds_for_abandonment(p, *target);
  } else if (regime == "exact-wait") {
    if (!target) {
      throw ValidationError("bad-capacity", "regime exact-wait needs --target");
    }
    r = min_beds_for_wait(p, *target);
  } else {
    throw ValidationError("bad-capacity",
                          "--regime must be qd, ed, qed, exact-ab or exact-wait");
  }
  if (format == "csv") {
    std::cout << "regime,beds,offered_load,gamma,beta_star,achieved_p_abandon,"
                 "achieved_mean_wait_days\n";
    std::cout << regime_name(r.regime) << ',' << r.beds << ',' << fmt(r.offeredLoad)
              << ',' << (r.gammaUsed ? fmt(*r.gammaUsed) : std::string()) << ','
              << (r.betaStar ? fmt(*r.betaStar) : std::string()) << ','
              << (r.achievedPAb ? fmt(*r.achievedPAb) : std::string()) << ','
              << (r.achievedMeanWait ? fmt(*r.achievedMeanWait) : std::string())
              << "\n";
  } else {
    kv("regime", regime_name(r.regime));
    kv("beds", std::to_string(r.beds));
    kv("offered_load", fmt(r.offeredLoad));
    if (r.gammaUsed) kv("gamma", fmt(*r.gammaUsed));
    if (r.betaStar) kv("beta_star", fmt(*r.betaStar));
    if (r.achievedPAb) kv("achieved_p_abandon", fmt(*r.achievedPAb));
    if (r.achievedMeanWait) kv("achieved_mean_wait_days", fmt(*r.achievedMeanWait));
  }
  return 0;
}

int cmd_thresholds(const CommonFlags& flags, const std::string& mode, int maxK,
                   bool maxKSet, const std::string& format,
                   const std::string& variantName) {
  ScenarioFile file = load_scenario_file(flags.scenarioPath);
  // Narrow to one variant before resolution: calibration runs while resolving,
  // so a sibling variant must not be able to abort the requested one.
  if (!variantName.empty()) {
    if (file.variants.empty()) {
      if (variantName != "base") {
        throw ValidationError("bad-variant", "scenario file has no variant named '" +
                                                 variantName + "'");
      }
    } else {
      std::vector<ScenarioEntry> kept;
      for (const ScenarioEntry& v : file.variants) {
        if (v.name == variantName) kept.push_back(v);
      }
      if (kept.empty()) {
        throw ValidationError("bad-variant", "scenario file has no variant named '" +
                                                 variantName + "'");
      }
      file.variants = std::move(kept);
    }
  }
  auto adjust = [&](ScenarioEntry& e) {
    if (mode == "calibrate") {
      e.policy.mode = PolicyMode::Calibrate;
    } else {
      e.policy.mode = PolicyMode::Analytic;
      e.policy.analyticFromAbandonCaps = (mode == "analytic-abandon");
    }
    if (maxKSet) e.policy.maxK = maxK;
    if (flags.repsSet) e.policy.calibrationReps = flags.reps;
  };
  adjust(file.base);
  for (ScenarioEntry& v : file.variants) adjust(v);
  std::optional<std::uint64_t> seedOv;
  if (flags.seedSet) seedOv = flags.seed;
  std::vector<ResolvedScenario> resolved = resolve_scenarios(file, seedOv, {});

  bool first = true;
  if (format == "csv") {
    std::cout << "scenario,class,threshold,delay_probability\n";
  }
  for (const ResolvedScenario& s : resolved) {
    if (format == "csv") {
      for (std::size_t j = 0; j < s.config.policy.K.size(); ++j) {
        std::cout << s.name << ',' << group_letter(static_cast<Group>(j)) << ','
                  << s.config.policy.K[j] << ','
                  << (s.analytic ? fmt(s.analytic->delayProbability[j]) : std::string())
                  << "\n";
      }
      continue;
    }
    if (!first) std::cout << "\n";
    first = false;
    kv("scenario", s.name);
    kv("beds", std::to_string(s.config.beds));
    kv("mode", mode);
    kv("thresholds", join_ints(s.config.policy.K));
    if (s.analytic) {
      std::string probs;
      for (std::size_t j = 0; j < s.analytic->delayProbability.size(); ++j) {
        if (j) probs += ',';
        probs += fmt(s.analytic->delayProbability[j]);
      }
      kv("delay_probabilities", probs);
      kv("analytically_degenerate",
         s.analytic->analyticallyDegenerate ? "true" : "false");
    }
    if (s.calibrated) {
      kv("calibration_reps", std::to_string(file.base.policy.calibrationReps));
      kv("base_seed", std::to_string(s.simulation.baseSeed));
    }
  }
  return 0;
}

int cmd_simulate(const CommonFlags& flags, bool forceTrace, int traceRep) {
  ScenarioFile file = load_scenario_file(flags.scenarioPath);
  std::optional<std::uint64_t> seedOv;
  if (flags.seedSet) seedOv = flags.seed;
  std::optional<int> repsOv;
  if (flags.repsSet) repsOv = flags.reps;
  std::vector<ResolvedScenario> resolved = resolve_scenarios(file, seedOv, repsOv);

  Comparison cmp;
  bool anyTails = false;
  int classes = resolved.front().config.numClasses();
  for (const ResolvedScenario& s : resolved) {
    anyTails = anyTails || !s.config.waitTailMarkerDays.empty();
  }
  cmp.metrics = metric_names(classes, anyTails);

  bool first = true;
  for (const ResolvedScenario& s : resolved) {
    if (!first) std::cout << "\n";
    first = false;
    ReplicationStudy study =
        run_replications(s.config, s.simulation.replications, s.simulation.baseSeed);
    std::map<std::string, MetricSummary> summary = summarize(study);

    std::cout << describe_config(s);
    auto stat = [&](const std::string& name) {
      auto it = summary.find(name);
      if (it == summary.end()) return;
      kv(name, fmt(it->second.mean) + " (ci95 " + fmt(it->second.ci95) + ")");
    };
    stat("abandonment_proportion");
    stat("mean_wait_days");
    stat("utilization");
    stat("high_risk_abandoned");

    write_file(flags.outDir, "replications_" + s.name + ".csv",
               preamble(s) + replications_to_csv(study));
    write_file(flags.outDir, "summary_" + s.name + ".csv",
               preamble(s) + summary_to_csv(s.name,
                                            metric_names(s.config.numClasses(),
                                                         !s.config.waitTailMarkerDays.empty()),
                                            summary));
    if (s.simulation.trace || forceTrace) {
      if (traceRep < 0 || traceRep >= s.simulation.replications) {
        throw ValidationError("bad-trace-rep",
                              "--trace-rep must name an existing replication");
      }
      std::vector<TraceRow> trace;
      run_replication(s.config, s.simulation.baseSeed, traceRep, &trace);
      write_file(flags.outDir, "trace_" + s.name + ".tsv",
                 trace_to_tsv(trace, s.config.numClasses()));
    }

    cmp.names.push_back(s.name);
    cmp.summaries.push_back(std::move(summary));
  }
  if (resolved.size() > 1) {
    write_file(flags.outDir, "comparison.csv", comparison_to_csv(cmp));
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param,
              const std::vector<double>& values, const std::string& variantName) {
  ScenarioFile file = load_scenario_file(flags.scenarioPath);
  std::optional<std::uint64_t> seedOv;
  if (flags.seedSet) seedOv = flags.seed;
  std::optional<int> repsOv;
  if (flags.repsSet) repsOv = flags.reps;
  std::vector<ResolvedScenario> resolved = resolve_scenarios(file, seedOv, repsOv);

  const ResolvedScenario* chosen = nullptr;
  if (variantName.empty()) {
    chosen = &resolved.front();
  } else {
    for (const ResolvedScenario& s : resolved) {
      if (s.name == variantName) chosen = &s;
    }
    if (!chosen) {
      throw ValidationError("bad-variant",
                            "scenario file has no variant named '" + variantName + "'");
    }
  }

  SweepParam p;
  if (param == "lambda") p = SweepParam::Lambda;
  else if (param == "mu") p = SweepParam::Mu;
  else if (param == "theta") p = SweepParam::Theta;
  else throw ValidationError("bad-sweep-param", "--param must be lambda, mu or theta");

  SweepResult result = sweep(chosen->config, p, values, chosen->simulation.replications,
                             chosen->simulation.baseSeed);

  std::cout << describe_config(*chosen);
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    const auto& summary = result.summaries[i];
    std::string line = param + " = " + fmt(result.values[i]);
    auto add = [&](const std::string& name) {
      auto it = summary.find(name);
      if (it == summary.end()) return;
      line += "  " + name + " = " + fmt(it->second.mean);
    };
    add("abandonment_proportion");
    add("mean_wait_days");
    add("utilization");
    std::cout << line << "\n";
  }
  write_file(flags.outDir, "sweep_" + param + ".csv",
             preamble(*chosen) + sweep_to_csv(result));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"staffing and priority-threshold analytics for a many-server "
               "service system with abandonment"};
  app.require_subcommand(1);

  // analyze
  double lambda = 0.0, mu = 0.0, theta = 0.0;
  int beds = 0;
  std::string format = "structured";
  CLI::App* analyze =
      app.add_subcommand("analyze", "exact steady-state metrics at one bed count");
  analyze->add_option("--lambda", lambda, "aggregate arrival rate per day")->required();
  analyze->add_option("--mu", mu, "per-bed service rate per day")->required();
  analyze->add_option("--theta", theta, "abandonment rate per day (0 = never)")
      ->required();
  analyze->add_option("--beds", beds, "number of beds")->required();
  analyze->add_option("--format", format, "structured or csv");

  // staff
  std::string regime;
  double gammaOpt = 0.0, targetOpt = 0.0;
  CLI::App* staff = app.add_subcommand("staff", "bed counts from staffing rules");
  staff->add_option("--lambda", lambda, "aggregate arrival rate per day")->required();
  staff->add_option("--mu", mu, "per-bed service rate per day")->required();
  staff->add_option("--theta", theta, "abandonment rate per day (0 = never)")
      ->required();
  staff->add_option("--regime", regime, "qd, ed, qed, exact-ab or exact-wait")
      ->required();
  CLI::Option* gammaFlag =
      staff->add_option("--gamma", gammaOpt, "safety fraction for qd/ed");
  CLI::Option* targetFlag = staff->add_option(
      "--target", targetOpt, "abandonment share (qed/exact-ab) or wait days (exact-wait)");
  staff->add_option("--format", format, "structured or csv");

  // thresholds
  CommonFlags flags;
  std::string mode = "analytic";
  int maxK = 0;
  CLI::App* thresholds =
      app.add_subcommand("thresholds", "idle-bed reservation thresholds per class");
  thresholds->add_option("--scenario", flags.scenarioPath, "scenario file")->required();
  thresholds->add_option("--mode", mode, "analytic, analytic-abandon or calibrate");
  CLI::Option* maxKFlag =
      thresholds->add_option("--max-k", maxK, "calibration search bound");
  CLI::Option* tReps = thresholds->add_option(
      "--reps", flags.reps, "calibration replications per candidate");
  CLI::Option* tSeed = thresholds->add_option("--seed", flags.seed, "base seed");
  std::string thresholdsVariant;
  thresholds->add_option("--variant", thresholdsVariant,
                         "restrict to one variant (default: all in the file)");
  thresholds->add_option("--format", format, "structured or csv");

  // simulate
  bool forceTrace = false;
  int traceRep = 0;
  CLI::App* simulate =
      app.add_subcommand("simulate", "replicated simulation of scenario variants");
  simulate->add_option("--scenario", flags.scenarioPath, "scenario file")->required();
  CLI::Option* sReps =
      simulate->add_option("--reps", flags.reps, "replications per scenario");
  CLI::Option* sSeed = simulate->add_option("--seed", flags.seed, "base seed");
  simulate->add_option("--out-dir", flags.outDir,
                       "output directory (default $SHELTERQ_OUT_DIR or .)");
  simulate->add_flag("--trace", forceTrace, "also write an event trace");
  simulate->add_option("--trace-rep", traceRep, "replication to trace (default 0)");

  // sweep
  std::string param;
  std::vector<double> values;
  std::string variantName;
  CLI::App* sweepCmd =
      app.add_subcommand("sweep", "re-evaluate one scenario across parameter values");
  sweepCmd->add_option("--scenario", flags.scenarioPath, "scenario file")->required();
  sweepCmd->add_option("--param", param, "lambda, mu or theta")->required();
  sweepCmd->add_option("--values", values, "comma-separated parameter values")
      ->required()
      ->delimiter(',');
  CLI::Option* wReps =
      sweepCmd->add_option("--reps", flags.reps, "replications per value");
  CLI::Option* wSeed = sweepCmd->add_option("--seed", flags.seed, "base seed");
  sweepCmd->add_option("--out-dir", flags.outDir,
                       "output directory (default $SHELTERQ_OUT_DIR or .)");
  sweepCmd->add_option("--variant", variantName,
                       "variant to sweep (default: the file's first scenario)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (analyze->parsed()) {
      return cmd_analyze(lambda, mu, theta, beds, format);
    }
    if (staff->parsed()) {
      std::optional<double> g, t;
      if (gammaFlag->count()) g = gammaOpt;
      if (targetFlag->count()) t = targetOpt;
      return cmd_staff(lambda, mu, theta, regime, g, t, format);
    }
    if (thresholds->parsed()) {
      flags.repsSet = tReps->count() > 0;
      flags.seedSet = tSeed->count() > 0;
      return cmd_thresholds(flags, mode, maxK, maxKFlag->count() > 0, format,
                            thresholdsVariant);
    }
    if (simulate->parsed()) {
      flags.repsSet = sReps->count() > 0;
      flags.seedSet = sSeed->count() > 0;
      return cmd_simulate(flags, forceTrace, traceRep);
    }
    if (sweepCmd->parsed()) {
      flags.repsSet = wReps->count() > 0;
      flags.seedSet = wSeed->count() > 0;
      return cmd_sweep(flags, param, values, variantName);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
