#pragma once

#include <array>
#include <string>

#include "shelterq/rng.hpp"

namespace shelterq {

// Priority classes, highest priority (A) to lowest (F).
enum class Group : int { A = 0, B = 1, C = 2, D = 3, E = 4, F = 5 };
inline constexpr int kNumGroups = 6;
char group_letter(Group g);
Group group_from_letter(char c);

// Attribute order used everywhere a five-flag vector appears.
inline constexpr int kNumAttributes = 5;
enum : int {
  kAttrHtVictim = 0,
  kAttrSubstanceOrMentalHealth = 1,
  kAttrLgbtq = 2,
  kAttrWelfareOrJustice = 3,
  kAttrUsMinority = 4,
};

// Marginal probabilities of the five independent binary vulnerability attributes.
struct AttributeModel {
  double htVictim = 0.20;                 // trafficking victimization
  double substanceOrMentalHealth = 0.30;  // substance abuse or mental-health problems
  double lgbtq = 0.30;                    // LGBTQ+
  double welfareOrJustice = 0.30;         // child-welfare or juvenile-justice involvement
  double usMinority = 0.55;               // US racial/ethnic minority
  void validate() const;                  // each probability in [0, 1]
  std::array<double, kNumAttributes> probs() const;
};

// One row of the attribute-combination table: five flags, the assigned priority group,
// and the probability of the combination under the default attribute model.
struct CombinationRow {
  std::array<bool, kNumAttributes> attrs;
  Group group;
  double probability;
};

// The authoritative 32-row combination-to-group table (embedded copy of the versioned
// data file shipped at data/vulnerability_groups.tsv).
const std::array<CombinationRow, 32>& combination_table();

// Load and validate a combination table from its tab-separated data file. Throws
// ValidationError with the offending line number on malformed content.
std::array<CombinationRow, 32> load_combination_table(const std::string& path);

// Group assignment by exact table lookup (authoritative).
Group group_of(const std::array<bool, kNumAttributes>& attrs);

// Group assignment by first-match rule order (trafficking -> A, substance/mental
// health -> B, LGBTQ -> C, welfare/justice -> D, minority -> E, else F). Kept for
// comparison: it disagrees with the authoritative table on exactly one combination.
Group group_of_rule_order(const std::array<bool, kNumAttributes>& attrs);

// Exact group shares under an attribute model: per-group sums of the 32 combination
// products (independent attributes).
std::array<double, kNumGroups> group_proportions(const AttributeModel& m = AttributeModel{});

// Split an aggregate arrival rate into per-group Poisson rates: proportion * lambda.
std::array<double, kNumGroups> group_arrival_rates(double lambda,
                                                   const AttributeModel& m = AttributeModel{});

// One arriving youth's sampled attribute vector and the group it maps to.
struct VulnerabilityProfile {
  std::array<bool, kNumAttributes> attrs;
  Group group;
};

// Sample a profile as five independent coin flips from the profile stream.
VulnerabilityProfile sample_profile(const AttributeModel& m, RandomStream& rng);

}  // namespace shelterq
