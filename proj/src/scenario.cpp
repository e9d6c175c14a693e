#include "shelterq/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "shelterq/errors.hpp"
#include "shelterq/population.hpp"

namespace shelterq {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Parse-state flags that cannot be recovered from ScenarioEntry itself.
struct EntryState {
  ScenarioEntry entry;
  bool lambdaSet = false;
  bool muSet = false;
  bool thetaSet = false;
  bool bedsAuto = false;
};

struct KeyContext {
  const std::string& file;
  int line;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("bad-scenario-file",
                          file + ":" + std::to_string(line) + ": " + what);
  }

  double number(const std::string& v) const {
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail("expected a number, got '" + v + "'");
    }
    if (pos != v.size()) fail("trailing characters after number in '" + v + "'");
    return x;
  }

  int integer(const std::string& v) const {
    std::size_t pos = 0;
    long x = 0;
    try {
      x = std::stol(v, &pos);
    } catch (const std::exception&) {
      fail("expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) fail("trailing characters after integer in '" + v + "'");
    return static_cast<int>(x);
  }

  std::uint64_t seed(const std::string& v) const {
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
      x = std::stoull(v, &pos);
    } catch (const std::exception&) {
      fail("expected an unsigned integer, got '" + v + "'");
    }
    if (pos != v.size()) fail("trailing characters after integer in '" + v + "'");
    return x;
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected true/false, got '" + v + "'");
  }

  std::vector<double> number_list(const std::string& v) const {
    std::vector<double> out;
    for (const std::string& piece : split(v, ',')) {
      out.push_back(number(trim(piece)));
    }
    return out;
  }

  std::vector<int> integer_list(const std::string& v) const {
    std::vector<int> out;
    for (const std::string& piece : split(v, ',')) {
      out.push_back(integer(trim(piece)));
    }
    return out;
  }

  std::vector<WaitCap> wait_caps(const std::string& v) const {
    std::vector<WaitCap> out;
    for (const std::string& piece : split(v, ',')) {
      std::vector<std::string> parts = split(trim(piece), ':');
      if (parts.size() != 2) fail("wait caps use the form fraction:days");
      out.push_back(WaitCap{number(trim(parts[0])), number(trim(parts[1]))});
    }
    return out;
  }
};

void apply_key(EntryState& st, const std::string& section, const std::string& key,
               const std::string& value, const KeyContext& ctx) {
  ScenarioEntry& e = st.entry;
  if (section == "system") {
    if (key == "lambda") {
      e.params.lambda = ctx.number(value);
      st.lambdaSet = true;
    } else if (key == "mu") {
      e.params.mu = ctx.number(value);
      st.muSet = true;
    } else if (key == "theta") {
      e.params.theta = ctx.number(value);
      st.thetaSet = true;
    } else {
      ctx.fail("unknown key 'system." + key + "'");
    }
  } else if (section == "population") {
    auto model = [&]() -> AttributeModel& {
      if (!std::holds_alternative<AttributeModel>(e.arrivals)) {
        e.arrivals = AttributeModel{};
      }
      return std::get<AttributeModel>(e.arrivals);
    };
    if (key == "mode") {
      if (value == "attributes") {
        if (!std::holds_alternative<AttributeModel>(e.arrivals)) {
          e.arrivals = AttributeModel{};
        }
      } else if (value == "rates") {
        if (!std::holds_alternative<ExplicitRates>(e.arrivals)) {
          e.arrivals = ExplicitRates{};
        }
      } else {
        ctx.fail("population.mode must be 'attributes' or 'rates'");
      }
    } else if (key == "htVictim") {
      model().htVictim = ctx.number(value);
    } else if (key == "substanceOrMentalHealth") {
      model().substanceOrMentalHealth = ctx.number(value);
    } else if (key == "lgbtq") {
      model().lgbtq = ctx.number(value);
    } else if (key == "welfareOrJustice") {
      model().welfareOrJustice = ctx.number(value);
    } else if (key == "usMinority") {
      model().usMinority = ctx.number(value);
    } else if (key == "rates") {
      e.arrivals = ExplicitRates{ctx.number_list(value)};
    } else {
      ctx.fail("unknown key 'population." + key + "'");
    }
  } else if (section == "capacity") {
    if (key == "beds") {
      if (value == "auto") {
        e.capacity.beds.reset();
        st.bedsAuto = true;
      } else {
        e.capacity.beds = ctx.integer(value);
        st.bedsAuto = false;
      }
    } else if (key == "regime") {
      if (value == "qd") e.capacity.regime = Regime::QD;
      else if (value == "ed") e.capacity.regime = Regime::ED;
      else if (value == "qed") e.capacity.regime = Regime::QED;
      else if (value == "exact-ab") e.capacity.regime = Regime::EXACT_AB;
      else if (value == "exact-wait") e.capacity.regime = Regime::EXACT_WAIT;
      else ctx.fail("capacity.regime must be qd, ed, qed, exact-ab or exact-wait");
    } else if (key == "gamma") {
      e.capacity.gamma = ctx.number(value);
    } else if (key == "target") {
      e.capacity.target = ctx.number(value);
    } else {
      ctx.fail("unknown key 'capacity." + key + "'");
    }
  } else if (section == "policy") {
    if (key == "mode") {
      if (value == "explicit") e.policy.mode = PolicyMode::Explicit;
      else if (value == "analytic") e.policy.mode = PolicyMode::Analytic;
      else if (value == "calibrate") e.policy.mode = PolicyMode::Calibrate;
      else ctx.fail("policy.mode must be explicit, analytic or calibrate");
    } else if (key == "thresholds") {
      e.policy.thresholds = ctx.integer_list(value);
    } else if (key == "analyticSource") {
      if (value == "wait-caps") e.policy.analyticFromAbandonCaps = false;
      else if (value == "abandon-caps") e.policy.analyticFromAbandonCaps = true;
      else ctx.fail("policy.analyticSource must be wait-caps or abandon-caps");
    } else if (key == "maxK") {
      e.policy.maxK = ctx.integer(value);
    } else if (key == "calibrationReps") {
      e.policy.calibrationReps = ctx.integer(value);
    } else {
      ctx.fail("unknown key 'policy." + key + "'");
    }
  } else if (section == "simulation") {
    if (key == "horizonDays") {
      e.simulation.horizonDays = ctx.number(value);
    } else if (key == "warmupDays") {
      e.simulation.warmupDays = ctx.number(value);
    } else if (key == "initialOccupancy") {
      e.simulation.initialOccupancy = ctx.integer(value);
    } else if (key == "replications") {
      e.simulation.replications = ctx.integer(value);
    } else if (key == "baseSeed") {
      e.simulation.baseSeed = ctx.seed(value);
    } else if (key == "trace") {
      e.simulation.trace = ctx.boolean(value);
    } else {
      ctx.fail("unknown key 'simulation." + key + "'");
    }
  } else if (section == "qos") {
    if (key == "alphaGlobal") {
      e.qos.alphaGlobal = ctx.number(value);
    } else if (key == "maxMeanWaitDays") {
      e.qos.maxMeanWait = ctx.number(value);
    } else if (key == "waitCaps") {
      e.qos.perClassWaitCaps = ctx.wait_caps(value);
    } else if (key == "abandonCaps") {
      e.qos.perClassAbandonCaps = ctx.number_list(value);
    } else if (key == "maxPerClassMeanWaitDays") {
      e.qos.maxPerClassMeanWait = ctx.number(value);
    } else if (key == "maxHighRiskAbandoned") {
      e.qos.maxHighRiskAbandoned = ctx.number(value);
    } else {
      ctx.fail("unknown key 'qos." + key + "'");
    }
  } else {
    ctx.fail("unknown section [" + section + "]");
  }
}

void finish_entry(EntryState& st, const std::string& file) {
  ScenarioEntry& e = st.entry;
  if (const auto* rates = std::get_if<ExplicitRates>(&e.arrivals)) {
    if (rates->rates.empty()) {
      throw ValidationError("bad-scenario-file",
                            file + ": population.mode = rates needs population.rates");
    }
    double sum = 0.0;
    for (double r : rates->rates) sum += r;
    if (!st.lambdaSet) {
      e.params.lambda = sum;
      st.lambdaSet = true;
    } else if (std::fabs(sum - e.params.lambda) > 1e-9 * std::max(1.0, sum)) {
      throw ValidationError("bad-scenario-file",
                            file + ": population.rates sum to " + std::to_string(sum) +
                                " but system.lambda says " +
                                std::to_string(e.params.lambda));
    }
  }
  if (!st.lambdaSet) {
    throw ValidationError("bad-scenario-file", file + ": missing key system.lambda");
  }
  if (!st.muSet) {
    throw ValidationError("bad-scenario-file", file + ": missing key system.mu");
  }
  if (!st.thetaSet) {
    throw ValidationError("bad-scenario-file", file + ": missing key system.theta");
  }
}

}  // namespace

ScenarioFile parse_scenario_file(const std::string& text, const std::string& filename) {
  EntryState base;
  base.entry.name = "base";
  // Variant bodies are replayed on top of the finished base, so they are collected
  // first as raw (section.key, value) pairs.
  struct PendingVariant {
    std::string name;
    std::vector<std::tuple<std::string, std::string, std::string, int>> keys;
  };
  std::vector<PendingVariant> pending;

  std::string section;
  bool inVariant = false;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    KeyContext ctx{filename, lineNo};
    if (t.front() == '[') {
      if (t.back() != ']') ctx.fail("unterminated section header");
      std::string inner = trim(t.substr(1, t.size() - 2));
      if (inner.rfind("variant", 0) == 0) {
        std::string name = trim(inner.substr(7));
        if (name.empty()) ctx.fail("variant sections need a name: [variant <name>]");
        for (const PendingVariant& v : pending) {
          if (v.name == name) ctx.fail("duplicate variant '" + name + "'");
        }
        pending.push_back(PendingVariant{name, {}});
        inVariant = true;
      } else {
        section = inner;
        inVariant = false;
        if (section != "system" && section != "population" && section != "capacity" &&
            section != "policy" && section != "simulation" && section != "qos") {
          ctx.fail("unknown section [" + section + "]");
        }
      }
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) ctx.fail("expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) ctx.fail("empty key");
    if (inVariant) {
      std::size_t dot = key.find('.');
      if (dot == std::string::npos) {
        ctx.fail("variant keys must be qualified as section.key");
      }
      std::string sec = key.substr(0, dot);
      std::string sub = key.substr(dot + 1);
      if (sec == "simulation" && (sub == "replications" || sub == "baseSeed")) {
        ctx.fail("variants may not override simulation." + sub +
                 " (the seed ladder is shared across variants)");
      }
      pending.back().keys.emplace_back(sec, sub, value, lineNo);
    } else {
      if (section.empty()) ctx.fail("key before any section header");
      apply_key(base, section, key, value, ctx);
    }
  }

  finish_entry(base, filename);

  ScenarioFile out;
  out.base = base.entry;
  for (const PendingVariant& v : pending) {
    EntryState st = base;
    st.entry.name = v.name;
    for (const auto& [sec, sub, value, keyLine] : v.keys) {
      apply_key(st, sec, sub, value, KeyContext{filename, keyLine});
    }
    finish_entry(st, filename);
    out.variants.push_back(st.entry);
  }
  return out;
}

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("bad-scenario-file", "cannot open scenario file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_file(buf.str(), path);
}

namespace {

ResolvedScenario resolve_one(const ScenarioEntry& entry) {
  ResolvedScenario out;
  out.name = entry.name;
  out.simulation = entry.simulation;
  out.qos = entry.qos;

  ScenarioConfig cfg;
  cfg.params = entry.params;
  cfg.arrivals = entry.arrivals;
  cfg.horizonDays = entry.simulation.horizonDays;
  cfg.warmupDays = entry.simulation.warmupDays;
  cfg.initialOccupancy = entry.simulation.initialOccupancy;

  // Beds: fixed count or staffing rule.
  if (entry.capacity.beds) {
    cfg.beds = *entry.capacity.beds;
  } else if (entry.capacity.regime) {
    const SystemParams& p = entry.params;
    switch (*entry.capacity.regime) {
      case Regime::QD:
        if (!entry.capacity.gamma) {
          throw ValidationError("bad-capacity", "regime qd needs capacity.gamma");
        }
        out.staffing = staff_qd(p, *entry.capacity.gamma);
        break;
      case Regime::ED:
        if (!entry.capacity.gamma) {
          throw ValidationError("bad-capacity", "regime ed needs capacity.gamma");
        }
        out.staffing = staff_ed(p, *entry.capacity.gamma);
        break;
      case Regime::QED: {
        std::optional<double> target = entry.capacity.target;
        if (!target) target = entry.qos.alphaGlobal;
        if (!target) {
          throw ValidationError("bad-capacity",
                                "regime qed needs capacity.target or qos.alphaGlobal");
        }
        out.staffing = staff_qed(*target, p);
        break;
      }
      case Regime::EXACT_AB: {
        std::optional<double> target = entry.capacity.target;
        if (!target) target = entry.qos.alphaGlobal;
        if (!target) {
          throw ValidationError(
              "bad-capacity", "regime exact-ab needs capacity.target or qos.alphaGlobal");
        }
        out.staffing = min_beds_for_abandonment(p, *target);
        break;
      }
      case Regime::EXACT_WAIT: {
        std::optional<double> target = entry.capacity.target;
        if (!target) target = entry.qos.maxMeanWait;
        if (!target) {
          throw ValidationError(
              "bad-capacity",
              "regime exact-wait needs capacity.target or qos.maxMeanWaitDays");
        }
        out.staffing = min_beds_for_wait(p, *target);
        break;
      }
    }
    cfg.beds = out.staffing->beds;
  } else {
    throw ValidationError("bad-capacity",
                          "scenario needs capacity.beds or capacity.regime");
  }

  const int J = cfg.numClasses();

  // Wait-tail markers come from the per-class QoS wait caps.
  if (!entry.qos.perClassWaitCaps.empty()) {
    if (static_cast<int>(entry.qos.perClassWaitCaps.size()) != J - 1) {
      throw ValidationError("bad-caps",
                            "qos.waitCaps needs one entry per class except the lowest");
    }
    cfg.waitTailMarkerDays.assign(J, std::numeric_limits<double>::infinity());
    for (int j = 0; j + 1 < J; ++j) {
      cfg.waitTailMarkerDays[j] = entry.qos.perClassWaitCaps[j].T;
    }
  }

  // Threshold policy.
  switch (entry.policy.mode) {
    case PolicyMode::Explicit:
      if (entry.policy.thresholds.empty()) {
        cfg.policy.K.assign(J, 0);
      } else {
        cfg.policy.K = entry.policy.thresholds;
      }
      break;
    case PolicyMode::Analytic: {
      std::vector<double> rates = cfg.classRates();
      if (entry.policy.analyticFromAbandonCaps) {
        if (static_cast<int>(entry.qos.perClassAbandonCaps.size()) != J - 1) {
          throw ValidationError(
              "bad-caps", "qos.abandonCaps needs one entry per class except the lowest");
        }
        out.analytic = analytic_thresholds_abandonment(rates, cfg.beds, cfg.params,
                                                       entry.qos.perClassAbandonCaps);
      } else {
        if (static_cast<int>(entry.qos.perClassWaitCaps.size()) != J - 1) {
          throw ValidationError(
              "bad-caps", "qos.waitCaps needs one entry per class except the lowest");
        }
        out.analytic = analytic_thresholds(rates, cfg.beds, cfg.params,
                                           entry.qos.perClassWaitCaps);
      }
      cfg.policy = out.analytic->policy;
      break;
    }
    case PolicyMode::Calibrate: {
      cfg.policy.K.assign(J, 0);
      CalibratedThresholds ct = calibrate_thresholds_by_simulation(
          cfg, entry.qos, entry.policy.maxK, entry.policy.calibrationReps,
          entry.simulation.baseSeed);
      cfg.policy = ct.policy;
      out.calibrated = true;
      break;
    }
  }

  cfg.validate();
  out.config = cfg;
  return out;
}

}  // namespace

std::vector<ResolvedScenario> resolve_scenarios(
    const ScenarioFile& file, std::optional<std::uint64_t> seedOverride,
    std::optional<int> replicationsOverride) {
  std::vector<ScenarioEntry> entries;
  if (file.variants.empty()) {
    entries.push_back(file.base);
  } else {
    entries = file.variants;
  }
  std::vector<ResolvedScenario> out;
  for (ScenarioEntry entry : entries) {
    if (seedOverride) entry.simulation.baseSeed = *seedOverride;
    if (replicationsOverride) entry.simulation.replications = *replicationsOverride;
    out.push_back(resolve_one(entry));
  }
  return out;
}

std::string describe_config(const ResolvedScenario& s) {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  kv("scenario", s.name);
  kv("lambda", fmt_double(s.config.params.lambda));
  kv("mu", fmt_double(s.config.params.mu));
  kv("theta", fmt_double(s.config.params.theta));
  if (const auto* model = std::get_if<AttributeModel>(&s.config.arrivals)) {
    std::string v = "attributes";
    for (double p : model->probs()) {
      v += ' ';
      v += fmt_double(p);
    }
    kv("arrivals", v);
  } else {
    const auto& rates = std::get<ExplicitRates>(s.config.arrivals);
    std::string v = "rates";
    for (double r : rates.rates) {
      v += ' ';
      v += fmt_double(r);
    }
    kv("arrivals", v);
  }
  kv("beds", std::to_string(s.config.beds));
  if (s.staffing) {
    kv("staffing_regime", regime_name(s.staffing->regime));
    kv("staffing_offered_load", fmt_double(s.staffing->offeredLoad));
    if (s.staffing->betaStar) kv("staffing_beta_star", fmt_double(*s.staffing->betaStar));
  }
  {
    std::string v;
    for (std::size_t j = 0; j < s.config.policy.K.size(); ++j) {
      if (j) v += ',';
      v += std::to_string(s.config.policy.K[j]);
    }
    kv("thresholds", v);
  }
  if (s.analytic) kv("policy_mode", "analytic");
  else if (s.calibrated) kv("policy_mode", "calibrate");
  else kv("policy_mode", "explicit");
  kv("horizon_days", fmt_double(s.config.horizonDays));
  kv("warmup_days", fmt_double(s.config.warmupDays));
  kv("initial_occupancy", std::to_string(s.config.initialOccupancy));
  kv("replications", std::to_string(s.simulation.replications));
  kv("base_seed", std::to_string(s.simulation.baseSeed));
  if (!s.config.waitTailMarkerDays.empty()) {
    std::string v;
    for (std::size_t j = 0; j < s.config.waitTailMarkerDays.size(); ++j) {
      if (j) v += ',';
      double m = s.config.waitTailMarkerDays[j];
      v += std::isinf(m) ? "inf" : fmt_double(m);
    }
    kv("wait_tail_markers", v);
  }
  return out;
}

}  // namespace shelterq
