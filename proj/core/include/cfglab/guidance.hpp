#pragma once

#include <array>
#include <optional>
#include <string>

#include "cfglab/velocity_model.hpp"

namespace cfglab {

enum class Strategy {
  none,
  standard,
  negative_prompt,
  perp_neg,
  cfg_zero_star,
  dual_separated,
  mega_separated,
  input_text,
  input_audio,
  def_text,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

enum class WeightScheduleKind { constant, linear, linear_clamped };

// Timestep-dependent guidance weight. constant uses GuidanceSpec::lambda;
// linear interpolates w0 -> w1 over t in [0,1]; linear_clamped additionally
// floors the value at w_min.
struct WeightSchedule {
  WeightScheduleKind kind = WeightScheduleKind::constant;
  double w0 = 0.0;
  double w1 = 0.0;
  double w_min = 0.0;
};

// Fully describes one guided predictor: strategy + weights + schedule +
// timestep switch. Exactly one strategy is active. tz > 0 requests zero-init
// (grid truncation with a pure-noise start).
struct GuidanceSpec {
  Strategy strategy = Strategy::standard;
  double lambda = 0.0;
  double lambda_text = 0.0;
  double lambda_spk = 0.0;
  double t_threshold = 0.08;  // def_text switch time
  WeightSchedule schedule{};
  double tz = 0.0;

  void validate() const;
};

// Scheduled weight at time t for single-lambda strategies.
double effective_lambda(const GuidanceSpec& spec, double t);

// Model evaluations at one (x, t), keyed by condition mask and fetched on
// demand; at most one evaluation per mask.
class EvalSet {
 public:
  EvalSet(const VelocityModel& model, const Vec& x, double t,
          const ConditionPair& cond);

  // Detached set over preloaded vectors (no model behind it). get() on a
  // mask that was not provided is a contract violation.
  static EvalSet from_values(std::optional<Vec> full, std::optional<Vec> a_only,
                             std::optional<Vec> b_only, std::optional<Vec> none);

  const Vec& get(ConditionMask mask);

  int eval_count() const { return eval_count_; }

 private:
  EvalSet() = default;

  const VelocityModel* model_ = nullptr;
  const Vec* x_ = nullptr;
  double t_ = 0.0;
  ConditionPair cond_{};
  std::array<std::optional<Vec>, 4> cache_{};
  int eval_count_ = 0;
};

// e_full + lam * (e_full - e_none)
Vec guide_standard(const Vec& e_full, const Vec& e_none, double lam);

// Standard form with the unconditioned branch replaced by the negative one.
Vec guide_negative(const Vec& e_full, const Vec& e_neg, double lam);

// e_full - lam * perp_component(e_neg, e_full)
Vec guide_perp_neg(const Vec& e_full, const Vec& e_neg, double lam);

// s* e_none + (1 + lam) * (e_full - s* e_none), s* = <e_full,e_none>/<e_none,e_none>.
// The second term is (1 + lam) times the component of e_full perpendicular
// to e_none.
Vec guide_cfg_zero_star(const Vec& e_full, const Vec& e_none, double lam);

// e_full + lam_text (e_a - e_none) + lam_spk (e_b - e_none)
Vec guide_dual_separated(EvalSet& evals, double lam_text, double lam_spk);

// e_none + lam_text (e_a - e_none) + lam_spk (e_full - e_a)
Vec guide_mega_separated(EvalSet& evals, double lam_text, double lam_spk);

// e_full + lam (e_full - e_a): guidance emphasizes only the speaker factor.
Vec guide_input_text(EvalSet& evals, double lam);

// e_full + lam (e_full - e_b): guidance emphasizes only the text factor.
Vec guide_input_audio(EvalSet& evals, double lam);

// standard below t_threshold, input_text at and above it.
Vec guide_def_text(EvalSet& evals, double lam, double t, double t_threshold);

struct GuidedVelocity {
  Vec v;
  int eval_count = 0;
};

// Fetches only the masks the strategy needs, applies the weight schedule,
// and dispatches. cond must be fully present.
GuidedVelocity guided_velocity(const VelocityModel& model, const Vec& x,
                               double t, const ConditionPair& cond,
                               const GuidanceSpec& spec);

}  // namespace cfglab
