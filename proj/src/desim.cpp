#include "shelterq/desim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>

#include "shelterq/errors.hpp"
#include "shelterq/rng.hpp"

namespace shelterq {

int ScenarioConfig::numClasses() const {
  if (std::holds_alternative<AttributeModel>(arrivals)) return kNumGroups;
  return static_cast<int>(std::get<ExplicitRates>(arrivals).rates.size());
}

std::vector<double> ScenarioConfig::classRates() const {
  if (const auto* m = std::get_if<AttributeModel>(&arrivals)) {
    std::array<double, kNumGroups> r = group_arrival_rates(params.lambda, *m);
    return std::vector<double>(r.begin(), r.end());
  }
  return std::get<ExplicitRates>(arrivals).rates;
}

void ScenarioConfig::validate() const {
  params.validate();
  if (beds < 1) {
    throw ValidationError("bad-beds", "bed count must be >= 1");
  }
  if (const auto* m = std::get_if<AttributeModel>(&arrivals)) {
    m->validate();
  } else {
    const auto& rates = std::get<ExplicitRates>(arrivals).rates;
    if (rates.empty()) {
      throw ValidationError("bad-class-rates", "need at least one class rate");
    }
    double sum = 0.0;
    for (double r : rates) {
      if (!std::isfinite(r) || r < 0.0) {
        throw ValidationError("bad-class-rates", "class rates must be finite and >= 0");
      }
      sum += r;
    }
    if (!(sum > 0.0)) {
      throw ValidationError("bad-class-rates", "class rates must not all be zero");
    }
    if (std::fabs(sum - params.lambda) > 1e-9 * std::max(1.0, sum)) {
      throw ValidationError("rates-lambda-mismatch",
                            "explicit class rates must sum to the aggregate lambda");
    }
  }
  policy.validate();
  if (static_cast<int>(policy.K.size()) != numClasses()) {
    throw ValidationError("bad-policy-size",
                          "threshold policy must list one threshold per class");
  }
  if (!std::isfinite(horizonDays) || !(horizonDays > 0.0) || !(warmupDays >= 0.0) ||
      !(horizonDays > warmupDays)) {
    throw ValidationError("bad-window",
                          "need horizonDays > warmupDays >= 0 with a finite horizon");
  }
  if (initialOccupancy < 0 || initialOccupancy > beds) {
    throw ValidationError("bad-initial-occupancy",
                          "initial occupancy must lie in [0, beds]");
  }
  if (!waitTailMarkerDays.empty() &&
      static_cast<int>(waitTailMarkerDays.size()) != numClasses()) {
    throw ValidationError("bad-wait-markers",
                          "wait-tail markers must cover every class when present");
  }
  for (double m : waitTailMarkerDays) {
    if (std::isnan(m) || m < 0.0) {
      throw ValidationError("bad-wait-markers", "wait-tail markers must be >= 0");
    }
  }
}

namespace {

struct Customer {
  enum class State { Waiting, InService, Abandoned, Initial };
  double arrivalTime = 0.0;
  int cls = -1;
  double serviceTime = 0.0;
  double patienceTime = 0.0;
  State state = State::Waiting;
};

// Event kinds ranked by their processing order at equal times.
enum : int { kRankCompletion = 0, kRankExpiry = 1, kRankArrival = 2 };

struct Event {
  double time;
  int rank;
  std::uint64_t subject;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.rank != b.rank) return a.rank > b.rank;
    return a.subject > b.subject;
  }
};

}  // namespace

RawReplicationMetrics run_replication(const ScenarioConfig& config,
                                      std::uint64_t baseSeed,
                                      std::uint64_t replicationIndex,
                                      std::vector<TraceRow>* trace) {
  config.validate();
  const int J = config.numClasses();
  const int N = config.beds;
  const double horizon = config.horizonDays;
  const double warmup = config.warmupDays;

  RandomStream arrivalRng(derive_stream_seed(baseSeed, replicationIndex, kStreamInterarrival));
  RandomStream profileRng(derive_stream_seed(baseSeed, replicationIndex, kStreamProfile));
  RandomStream serviceRng(derive_stream_seed(baseSeed, replicationIndex, kStreamService));
  RandomStream patienceRng(derive_stream_seed(baseSeed, replicationIndex, kStreamPatience));

  const AttributeModel* attrModel = std::get_if<AttributeModel>(&config.arrivals);
  std::vector<double> cumulativeShare;
  if (attrModel == nullptr) {
    const auto& rates = std::get<ExplicitRates>(config.arrivals).rates;
    double sum = 0.0;
    for (double r : rates) sum += r;
    double acc = 0.0;
    for (double r : rates) {
      acc += r / sum;
      cumulativeShare.push_back(acc);
    }
    cumulativeShare.back() = 1.0;
  }
  auto sample_class = [&]() -> int {
    if (attrModel != nullptr) {
      return static_cast<int>(sample_profile(*attrModel, profileRng).group);
    }
    double u = profileRng.uniform();
    for (int j = 0; j < J; ++j) {
      if (u < cumulativeShare[j]) return j;
    }
    return J - 1;
  };

  std::vector<Customer> customers;
  std::priority_queue<Event, std::vector<Event>, EventAfter> events;
  std::vector<std::deque<std::uint64_t>> queues(J);
  std::vector<int> queueLen(J, 0);
  int idle = N - config.initialOccupancy;
  int busy = config.initialOccupancy;

  // Busy-bed time integral over the measurement window.
  double busyIntegral = 0.0;
  double lastTime = 0.0;
  auto advance_clock = [&](double to) {
    double a = std::max(lastTime, warmup);
    double b = std::min(to, horizon);
    if (b > a) busyIntegral += static_cast<double>(busy) * (b - a);
    lastTime = to;
  };

  std::vector<ClassMetrics> cm(J);
  std::vector<double> waitSum(J, 0.0);
  const bool markers = !config.waitTailMarkerDays.empty();
  auto in_window = [&](double t) { return t > warmup && t <= horizon; };

  auto emit = [&](double t, char kind, int cls, int idleBefore) {
    if (trace == nullptr) return;
    TraceRow row;
    row.time = t;
    row.kind = kind;
    row.cls = cls;
    row.idleBefore = idleBefore;
    row.queueLens.assign(queueLen.begin(), queueLen.end());
    trace->push_back(std::move(row));
  };

  // Initial occupants hold beds at time zero with fresh service draws (memoryless
  // residuals); they are not arrivals and never touch the queues or the counters.
  for (int i = 0; i < config.initialOccupancy; ++i) {
    Customer c;
    c.cls = -1;
    c.serviceTime = serviceRng.exponential(config.params.mu);
    c.patienceTime = std::numeric_limits<double>::infinity();
    c.state = Customer::State::Initial;
    customers.push_back(c);
    events.push({c.serviceTime, kRankCompletion, customers.size() - 1});
  }

  // The dispatcher: highest-priority class whose threshold is met admits its
  // longest-waiting customer; repeat until nothing more can start.
  auto dispatch = [&](double t) {
    for (;;) {
      int pick = -1;
      for (int j = 0; j < J; ++j) {
        if (queueLen[j] > 0 && idle > config.policy.K[j]) {
          pick = j;
          break;
        }
      }
      if (pick < 0) break;
      auto& q = queues[pick];
      while (customers[q.front()].state != Customer::State::Waiting) q.pop_front();
      std::uint64_t id = q.front();
      q.pop_front();
      --queueLen[pick];
      Customer& c = customers[id];
      int idleBefore = idle;
      --idle;
      ++busy;
      c.state = Customer::State::InService;
      if (in_window(c.arrivalTime)) {
        double wait = t - c.arrivalTime;
        ++cm[pick].served;
        waitSum[pick] += wait;
        if (markers && wait > config.waitTailMarkerDays[pick]) ++cm[pick].waitTailCount;
      }
      events.push({t + c.serviceTime, kRankCompletion, id});
      emit(t, 'M', pick, idleBefore);
    }
  };

  // First arrival; the subject id of an arrival event is the id the customer will get.
  events.push({arrivalRng.exponential(config.params.lambda), kRankArrival,
               customers.size()});

  while (!events.empty()) {
    Event ev = events.top();
    if (ev.time > horizon) break;
    events.pop();
    advance_clock(ev.time);
    const double t = ev.time;

    switch (ev.rank) {
      case kRankCompletion: {
        Customer& c = customers[ev.subject];
        int idleBefore = idle;
        ++idle;
        --busy;
        c.state = Customer::State::Initial;  // departed; slot bookkeeping only
        emit(t, 'S', c.cls, idleBefore);
        dispatch(t);
        break;
      }
      case kRankExpiry: {
        Customer& c = customers[ev.subject];
        if (c.state == Customer::State::Waiting) {
          c.state = Customer::State::Abandoned;
          --queueLen[c.cls];
          if (in_window(c.arrivalTime)) {
            double wait = t - c.arrivalTime;
            ++cm[c.cls].abandoned;
            waitSum[c.cls] += wait;
            if (markers && wait > config.waitTailMarkerDays[c.cls]) {
              ++cm[c.cls].waitTailCount;
            }
          }
          emit(t, 'X', c.cls, idle);
          // Abandonment frees no bed, so no dispatch can be enabled by it.
        }
        break;
      }
      case kRankArrival: {
        Customer c;
        c.arrivalTime = t;
        c.cls = sample_class();
        c.serviceTime = serviceRng.exponential(config.params.mu);
        c.patienceTime = patienceRng.exponential(config.params.theta);
        c.state = Customer::State::Waiting;
        customers.push_back(c);
        std::uint64_t id = customers.size() - 1;
        queues[c.cls].push_back(id);
        ++queueLen[c.cls];
        if (in_window(t)) ++cm[c.cls].arrivals;
        if (std::isfinite(c.patienceTime)) {
          events.push({t + c.patienceTime, kRankExpiry, id});
        }
        emit(t, 'A', c.cls, idle);
        events.push({t + arrivalRng.exponential(config.params.lambda), kRankArrival,
                     customers.size()});
        dispatch(t);
        break;
      }
    }
  }
  advance_clock(horizon);

  // Customers still waiting at the horizon: censored waits, counted as in-system.
  for (const Customer& c : customers) {
    if (c.state == Customer::State::Waiting && in_window(c.arrivalTime)) {
      double wait = horizon - c.arrivalTime;
      ++cm[c.cls].inSystemAtHorizon;
      waitSum[c.cls] += wait;
      if (markers && wait > config.waitTailMarkerDays[c.cls]) ++cm[c.cls].waitTailCount;
    }
  }

  RawReplicationMetrics out;
  out.perClass.resize(J);
  double waitTotal = 0.0;
  for (int j = 0; j < J; ++j) {
    ClassMetrics& m = cm[j];
    m.abandonmentProportion =
        (m.arrivals > 0) ? static_cast<double>(m.abandoned) / m.arrivals : 0.0;
    m.meanWaitDays = (m.arrivals > 0) ? waitSum[j] / m.arrivals : 0.0;
    out.perClass[j] = m;
    out.aggregate.arrivals += m.arrivals;
    out.aggregate.served += m.served;
    out.aggregate.abandoned += m.abandoned;
    out.aggregate.inSystemAtHorizon += m.inSystemAtHorizon;
    out.aggregate.waitTailCount += m.waitTailCount;
    waitTotal += waitSum[j];
    if (j + 1 < J) out.highRiskAbandonedCount += m.abandoned;
  }
  out.aggregate.abandonmentProportion =
      (out.aggregate.arrivals > 0)
          ? static_cast<double>(out.aggregate.abandoned) / out.aggregate.arrivals
          : 0.0;
  out.aggregate.meanWaitDays =
      (out.aggregate.arrivals > 0) ? waitTotal / out.aggregate.arrivals : 0.0;
  out.meanUtilization = busyIntegral / (static_cast<double>(N) * (horizon - warmup));
  out.replicationIndex = replicationIndex;
  return out;
}

std::string trace_to_tsv(const std::vector<TraceRow>& trace, int numClasses) {
  std::ostringstream out;
  out << "time\tkind\tclass\tidle_before";
  for (int j = 0; j < numClasses; ++j) {
    out << "\tq_" << static_cast<char>('A' + j);
  }
  out << '\n';
  char buf[64];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof buf, "%.9f", r.time);
    out << buf << '\t' << r.kind << '\t' << r.cls << '\t' << r.idleBefore;
    for (int q : r.queueLens) out << '\t' << q;
    out << '\n';
  }
  return out.str();
}

std::vector<TraceRow> trace_from_tsv(const std::string& text, int* numClassesOut) {
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  auto fail = [&](const std::string& why) {
    throw ValidationError("bad-trace",
                          "trace line " + std::to_string(lineNo) + ": " + why);
  };
  if (!std::getline(in, line)) {
    throw ValidationError("bad-trace", "empty trace text");
  }
  ++lineNo;
  int cols = 1;
  for (char c : line) cols += (c == '\t');
  int numClasses = cols - 4;
  if (numClasses < 1) fail("header must list at least one queue column");
  if (numClassesOut != nullptr) *numClassesOut = numClasses;

  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream fields(line);
    TraceRow r;
    std::string kind;
    if (!(fields >> r.time >> kind >> r.cls >> r.idleBefore) || kind.size() != 1) {
      fail("malformed row");
    }
    r.kind = kind[0];
    r.queueLens.resize(numClasses);
    for (int j = 0; j < numClasses; ++j) {
      if (!(fields >> r.queueLens[j])) fail("missing queue column");
    }
    std::string extra;
    if (fields >> extra) fail("unexpected trailing field");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::optional<TraceViolation> verify_threshold_trace(const std::vector<TraceRow>& trace,
                                                     const ThresholdPolicy& policy,
                                                     int beds, int initialOccupancy) {
  policy.validate();
  const int J = static_cast<int>(policy.K.size());
  if (beds < 1 || initialOccupancy < 0 || initialOccupancy > beds) {
    throw ValidationError("bad-beds", "verifier needs beds >= 1 and 0 <= initial <= beds");
  }
  int idle = beds - initialOccupancy;
  std::vector<long long> q(J, 0);
  double lastTime = -std::numeric_limits<double>::infinity();

  auto settled = [&](std::size_t row) -> std::optional<TraceViolation> {
    for (int j = 0; j < J; ++j) {
      if (q[j] > 0 && idle > policy.K[j]) {
        return TraceViolation{row, "class " + std::string(1, static_cast<char>('A' + j)) +
                                       " left waiting with idle beds above its threshold"};
      }
    }
    return std::nullopt;
  };

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRow& r = trace[i];
    if (static_cast<int>(r.queueLens.size()) != J) {
      return TraceViolation{i, "queue column count does not match policy size"};
    }
    if (r.time < lastTime) {
      return TraceViolation{i, "time went backwards"};
    }
    // Entering any event row the previous dispatch round must have settled.
    if (r.kind != 'M') {
      if (auto v = settled(i)) return v;
    }
    if (r.idleBefore != idle) {
      return TraceViolation{i, "idle count does not chain from the previous row"};
    }
    bool needsClass = (r.kind == 'A' || r.kind == 'X' || r.kind == 'M');
    if (needsClass && (r.cls < 0 || r.cls >= J)) {
      return TraceViolation{i, "class out of range"};
    }
    switch (r.kind) {
      case 'A':
        ++q[r.cls];
        break;
      case 'S':
        ++idle;
        if (idle > beds) return TraceViolation{i, "idle count exceeds bed count"};
        break;
      case 'X':
        if (--q[r.cls] < 0) return TraceViolation{i, "queue went negative"};
        break;
      case 'M':
        if (r.idleBefore <= policy.K[r.cls]) {
          return TraceViolation{i, "admission with idle count at or below the class threshold"};
        }
        --idle;
        if (idle < 0) return TraceViolation{i, "idle count went negative"};
        if (--q[r.cls] < 0) return TraceViolation{i, "queue went negative"};
        break;
      default:
        return TraceViolation{i, "unknown event kind"};
    }
    for (int j = 0; j < J; ++j) {
      if (r.queueLens[j] != q[j]) {
        return TraceViolation{i, "queue lengths do not match the replayed state"};
      }
    }
    lastTime = r.time;
  }
  if (auto v = settled(trace.size())) {
    v->reason += " (at end of trace)";
    return v;
  }
  return std::nullopt;
}

}  // namespace shelterq
