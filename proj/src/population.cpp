#include "shelterq/population.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "shelterq/errors.hpp"

namespace shelterq {

char group_letter(Group g) {
  return static_cast<char>('A' + static_cast<int>(g));
}

Group group_from_letter(char c) {
  if (c < 'A' || c > 'F') {
    throw ValidationError("bad-group", std::string("unknown group letter '") + c + "'");
  }
  return static_cast<Group>(c - 'A');
}

void AttributeModel::validate() const {
  for (double p : probs()) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("bad-probability",
                            "attribute probabilities must lie in [0, 1]");
    }
  }
}

std::array<double, kNumAttributes> AttributeModel::probs() const {
  return {htVictim, substanceOrMentalHealth, lgbtq, welfareOrJustice, usMinority};
}

namespace {

constexpr Group A = Group::A, B = Group::B, C = Group::C;
constexpr Group D = Group::D, E = Group::E, F = Group::F;

// Authoritative combination-to-group assignment with the default-model probabilities.
// Flag order: trafficking victim, substance/mental health, LGBTQ+, welfare/justice,
// US minority. Note the one combination (0,0,0,1,1) that maps to E rather than the
// first-match rule order's D; the table is normative, not the rule order.
constexpr std::array<CombinationRow, 32> kTable{{
    {{0, 0, 0, 0, 0}, F, 0.12348},
    {{0, 0, 0, 1, 0}, D, 0.05292},
    {{0, 0, 1, 0, 0}, C, 0.05292},
    {{0, 1, 0, 0, 0}, B, 0.05292},
    {{0, 0, 1, 1, 0}, C, 0.02268},
    {{0, 1, 0, 1, 0}, B, 0.02268},
    {{0, 1, 1, 0, 0}, B, 0.02268},
    {{0, 1, 1, 1, 0}, B, 0.00972},
    {{0, 0, 0, 0, 1}, E, 0.15092},
    {{0, 0, 0, 1, 1}, E, 0.06468},
    {{0, 0, 1, 0, 1}, C, 0.06468},
    {{0, 1, 0, 0, 1}, B, 0.06468},
    {{0, 0, 1, 1, 1}, C, 0.02772},
    {{0, 1, 0, 1, 1}, B, 0.02772},
    {{0, 1, 1, 0, 1}, B, 0.02772},
    {{0, 1, 1, 1, 1}, B, 0.01188},
    {{1, 0, 0, 0, 0}, A, 0.03087},
    {{1, 0, 0, 1, 0}, A, 0.01323},
    {{1, 0, 1, 0, 0}, A, 0.01323},
    {{1, 1, 0, 0, 0}, A, 0.01323},
    {{1, 0, 1, 1, 0}, A, 0.00567},
    {{1, 1, 0, 1, 0}, A, 0.00567},
    {{1, 1, 1, 0, 0}, A, 0.00567},
    {{1, 1, 1, 1, 0}, A, 0.00243},
    {{1, 0, 0, 0, 1}, A, 0.03773},
    {{1, 0, 0, 1, 1}, A, 0.01617},
    {{1, 0, 1, 0, 1}, A, 0.01617},
    {{1, 1, 0, 0, 1}, A, 0.01617},
    {{1, 0, 1, 1, 1}, A, 0.00693},
    {{1, 1, 0, 1, 1}, A, 0.00693},
    {{1, 1, 1, 0, 1}, A, 0.00693},
    {{1, 1, 1, 1, 1}, A, 0.00297},
}};

inline int combo_index(const std::array<bool, kNumAttributes>& attrs) {
  int idx = 0;
  for (int i = 0; i < kNumAttributes; ++i) idx = (idx << 1) | (attrs[i] ? 1 : 0);
  return idx;
}

const std::array<Group, 32>& group_lookup() {
  static const std::array<Group, 32> lut = [] {
    std::array<Group, 32> t{};
    for (const CombinationRow& row : kTable) t[combo_index(row.attrs)] = row.group;
    return t;
  }();
  return lut;
}

}  // namespace

const std::array<CombinationRow, 32>& combination_table() { return kTable; }

Group group_of(const std::array<bool, kNumAttributes>& attrs) {
  return group_lookup()[combo_index(attrs)];
}

Group group_of_rule_order(const std::array<bool, kNumAttributes>& attrs) {
  if (attrs[kAttrHtVictim]) return Group::A;
  if (attrs[kAttrSubstanceOrMentalHealth]) return Group::B;
  if (attrs[kAttrLgbtq]) return Group::C;
  if (attrs[kAttrWelfareOrJustice]) return Group::D;
  if (attrs[kAttrUsMinority]) return Group::E;
  return Group::F;
}

std::array<double, kNumGroups> group_proportions(const AttributeModel& m) {
  m.validate();
  std::array<double, kNumAttributes> p = m.probs();
  std::array<double, kNumGroups> shares{};
  for (const CombinationRow& row : kTable) {
    double prob = 1.0;
    for (int i = 0; i < kNumAttributes; ++i) {
      prob *= row.attrs[i] ? p[i] : (1.0 - p[i]);
    }
    shares[static_cast<int>(row.group)] += prob;
  }
  return shares;
}

std::array<double, kNumGroups> group_arrival_rates(double lambda, const AttributeModel& m) {
  if (!std::isfinite(lambda) || !(lambda > 0.0)) {
    throw ValidationError("bad-lambda", "arrival rate lambda must be finite and > 0");
  }
  std::array<double, kNumGroups> rates = group_proportions(m);
  for (double& r : rates) r *= lambda;
  return rates;
}

VulnerabilityProfile sample_profile(const AttributeModel& m, RandomStream& rng) {
  std::array<double, kNumAttributes> p = m.probs();
  VulnerabilityProfile v{};
  for (int i = 0; i < kNumAttributes; ++i) {
    v.attrs[i] = rng.bernoulli(p[i]);  // fixed draw order and count per profile
  }
  v.group = group_of(v.attrs);
  return v;
}

std::array<CombinationRow, 32> load_combination_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("bad-data-file", "cannot open combination table: " + path);
  }
  std::array<CombinationRow, 32> rows{};
  std::array<bool, 32> seen{};
  int count = 0;
  std::string line;
  int lineNo = 0;
  bool headerSeen = false;
  auto fail = [&](const std::string& why) {
    throw ValidationError("bad-data-file",
                          path + " line " + std::to_string(lineNo) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    if (!headerSeen) {  // first non-comment line is the column header
      headerSeen = true;
      continue;
    }
    std::istringstream fields(line);
    CombinationRow row{};
    for (int i = 0; i < kNumAttributes; ++i) {
      int flag;
      if (!(fields >> flag) || (flag != 0 && flag != 1)) fail("attribute flags must be 0 or 1");
      row.attrs[i] = flag == 1;
    }
    std::string group;
    if (!(fields >> group) || group.size() != 1 || group[0] < 'A' || group[0] > 'F') {
      fail("group must be a letter A-F");
    }
    row.group = group_from_letter(group[0]);
    if (!(fields >> row.probability) || !(row.probability >= 0.0) ||
        !(row.probability <= 1.0)) {
      fail("probability must lie in [0, 1]");
    }
    std::string extra;
    if (fields >> extra) fail("unexpected trailing field");
    if (count >= 32) fail("more than 32 rows");
    int idx = combo_index(row.attrs);
    if (seen[idx]) fail("duplicate attribute combination");
    seen[idx] = true;
    rows[count++] = row;
  }
  if (count != 32) {
    throw ValidationError("bad-data-file",
                          path + ": expected 32 rows, found " + std::to_string(count));
  }
  double total = 0.0;
  for (const CombinationRow& r : rows) total += r.probability;
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError("bad-data-file", path + ": probabilities do not sum to 1");
  }
  return rows;
}

}  // namespace shelterq
