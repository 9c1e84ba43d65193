#pragma once

#include <string>
#include <vector>

#include "cfglab/numerics.hpp"

namespace cfglab {

// Sentinel for a dropped / never-provided condition factor.
inline constexpr int kAbsent = -1;

// Which of the two condition factors an evaluation sees.
enum class ConditionMask { none, a_only, b_only, full };

std::string to_string(ConditionMask mask);

// Factor A is the text analog, factor B the speaker analog.
enum class Factor { A, B };

struct ConditionPair {
  int a = kAbsent;
  int b = kAbsent;

  bool has_a() const { return a != kAbsent; }
  bool has_b() const { return b != kAbsent; }
  ConditionMask mask() const {
    if (has_a() && has_b()) return ConditionMask::full;
    if (has_a()) return ConditionMask::a_only;
    if (has_b()) return ConditionMask::b_only;
    return ConditionMask::none;
  }
  // Projection of this pair onto a coarser mask (factors outside the mask
  // become ABSENT).
  ConditionPair with_mask(ConditionMask m) const {
    switch (m) {
      case ConditionMask::full: return {a, b};
      case ConditionMask::a_only: return {a, kAbsent};
      case ConditionMask::b_only: return {kAbsent, b};
      default: return {kAbsent, kAbsent};
    }
  }
  bool operator==(const ConditionPair&) const = default;
};

// Two-factor synthetic task: targets are draws from an axis-aligned Gaussian
// grid. Factor A offsets coordinate 0, factor B offsets coordinate 1.
struct TaskSpec {
  int dim = 2;
  std::vector<double> centers_a = {-3.0, -1.0, 1.0, 3.0};
  std::vector<double> centers_b = {-3.0, -1.0, 1.0, 3.0};
  double sigma = 0.35;
  double drop_a = 0.15;
  double drop_b = 0.15;

  int num_classes_a() const { return static_cast<int>(centers_a.size()); }
  int num_classes_b() const { return static_cast<int>(centers_b.size()); }

  // Mean of the target Gaussian for a fully specified condition.
  Vec center(int a, int b) const;

  void validate() const;
};

// Draw x1 ~ N(center(a, b), sigma^2 I). Both factors must be present.
Vec sample_target(const TaskSpec& spec, const ConditionPair& cond, Rng& rng);

// Independently drops factor A with probability drop_a and factor B with
// probability drop_b. ABSENT factors stay ABSENT.
ConditionPair mask_dropout(const ConditionPair& cond, const TaskSpec& spec,
                           Rng& rng);

// Exact posterior over one factor's classes given x, under uniform priors
// with the other factor marginalized. Sums to 1.
std::vector<double> bayes_posterior(const TaskSpec& spec, const Vec& x,
                                    Factor factor);

// Index of the posterior maximum, ties broken toward the lowest class.
int bayes_argmax(const TaskSpec& spec, const Vec& x, Factor factor);

}  // namespace cfglab
