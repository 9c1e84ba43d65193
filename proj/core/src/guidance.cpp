#include "cfglab/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfglab {

namespace {

void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

std::size_t mask_index(ConditionMask mask) {
  return static_cast<std::size_t>(mask);
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::standard: return "standard";
    case Strategy::negative_prompt: return "negative_prompt";
    case Strategy::perp_neg: return "perp_neg";
    case Strategy::cfg_zero_star: return "cfg_zero_star";
    case Strategy::dual_separated: return "dual_separated";
    case Strategy::mega_separated: return "mega_separated";
    case Strategy::input_text: return "input_text";
    case Strategy::input_audio: return "input_audio";
    case Strategy::def_text: return "def_text";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  for (Strategy k : {Strategy::none, Strategy::standard, Strategy::negative_prompt,
                     Strategy::perp_neg, Strategy::cfg_zero_star,
                     Strategy::dual_separated, Strategy::mega_separated,
                     Strategy::input_text, Strategy::input_audio,
                     Strategy::def_text}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown guidance strategy: " + s);
}

void GuidanceSpec::validate() const {
  if (!(lambda >= 0.0) || !(lambda_text >= 0.0) || !(lambda_spk >= 0.0)) {
    throw std::invalid_argument("GuidanceSpec: weights must be >= 0");
  }
  if (!(t_threshold >= 0.0 && t_threshold <= 1.0)) {
    throw std::invalid_argument("GuidanceSpec: t_threshold must lie in [0, 1]");
  }
  if (!(tz >= 0.0 && tz < 1.0)) {
    throw std::invalid_argument("GuidanceSpec: tz must lie in [0, 1)");
  }
  for (double w : {schedule.w0, schedule.w1, schedule.w_min}) {
    if (!std::isfinite(w)) {
      throw std::invalid_argument("GuidanceSpec: schedule weights must be finite");
    }
  }
}

double effective_lambda(const GuidanceSpec& spec, double t) {
  switch (spec.schedule.kind) {
    case WeightScheduleKind::constant:
      return spec.lambda;
    case WeightScheduleKind::linear:
      return spec.schedule.w0 + (spec.schedule.w1 - spec.schedule.w0) * t;
    case WeightScheduleKind::linear_clamped:
      return std::max(spec.schedule.w0 + (spec.schedule.w1 - spec.schedule.w0) * t,
                      spec.schedule.w_min);
  }
  return spec.lambda;
}

EvalSet::EvalSet(const VelocityModel& model, const Vec& x, double t,
                 const ConditionPair& cond)
    : model_(&model), x_(&x), t_(t), cond_(cond) {
  if (!cond.has_a() || !cond.has_b()) {
    throw std::invalid_argument("EvalSet: condition must be fully present");
  }
}

EvalSet EvalSet::from_values(std::optional<Vec> full, std::optional<Vec> a_only,
                             std::optional<Vec> b_only, std::optional<Vec> none) {
  EvalSet set;
  set.cache_[mask_index(ConditionMask::full)] = std::move(full);
  set.cache_[mask_index(ConditionMask::a_only)] = std::move(a_only);
  set.cache_[mask_index(ConditionMask::b_only)] = std::move(b_only);
  set.cache_[mask_index(ConditionMask::none)] = std::move(none);
  return set;
}

const Vec& EvalSet::get(ConditionMask mask) {
  auto& slot = cache_[mask_index(mask)];
  if (!slot.has_value()) {
    if (model_ == nullptr) {
      throw std::invalid_argument("EvalSet: missing evaluation for mask " +
                                  to_string(mask));
    }
    slot = model_->velocity(*x_, t_, cond_.with_mask(mask));
    ++eval_count_;
  }
  return *slot;
}

Vec guide_standard(const Vec& e_full, const Vec& e_none, double lam) {
  check_same_dim(e_full, e_none, "guide_standard");
  Vec out(e_full.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = e_full[i] + lam * (e_full[i] - e_none[i]);
  }
  return out;
}

Vec guide_negative(const Vec& e_full, const Vec& e_neg, double lam) {
  check_same_dim(e_full, e_neg, "guide_negative");
  return guide_standard(e_full, e_neg, lam);
}

Vec guide_perp_neg(const Vec& e_full, const Vec& e_neg, double lam) {
  check_same_dim(e_full, e_neg, "guide_perp_neg");
  const Vec perp = perp_component(e_neg, e_full);
  Vec out(e_full.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = e_full[i] - lam * perp[i];
  }
  return out;
}

Vec guide_cfg_zero_star(const Vec& e_full, const Vec& e_none, double lam) {
  check_same_dim(e_full, e_none, "guide_cfg_zero_star");
  const double nn = norm_sq(e_none);
  const double eps_den = 1e-12 * std::max(1.0, norm_sq(e_full));
  const double s_star = nn < eps_den ? 0.0 : dot(e_full, e_none) / nn;
  Vec out(e_full.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double parallel = s_star * e_none[i];
    out[i] = parallel + (1.0 + lam) * (e_full[i] - parallel);
  }
  return out;
}

Vec guide_dual_separated(EvalSet& evals, double lam_text, double lam_spk) {
  const Vec& e_full = evals.get(ConditionMask::full);
  const Vec& e_a = evals.get(ConditionMask::a_only);
  const Vec& e_b = evals.get(ConditionMask::b_only);
  const Vec& e_none = evals.get(ConditionMask::none);
  Vec out(e_full.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = e_full[i] + lam_text * (e_a[i] - e_none[i]) +
             lam_spk * (e_b[i] - e_none[i]);
  }
  return out;
}

Vec guide_mega_separated(EvalSet& evals, double lam_text, double lam_spk) {
  const Vec& e_none = evals.get(ConditionMask::none);
  const Vec& e_a = evals.get(ConditionMask::a_only);
  const Vec& e_full = evals.get(ConditionMask::full);
  Vec out(e_full.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = e_none[i] + lam_text * (e_a[i] - e_none[i]) +
             lam_spk * (e_full[i] - e_a[i]);
  }
  return out;
}

Vec guide_input_text(EvalSet& evals, double lam) {
  const Vec& e_full = evals.get(ConditionMask::full);
  const Vec& e_a = evals.get(ConditionMask::a_only);
  return guide_standard(e_full, e_a, lam);
}

Vec guide_input_audio(EvalSet& evals, double lam) {
  const Vec& e_full = evals.get(ConditionMask::full);
  const Vec& e_b = evals.get(ConditionMask::b_only);
  return guide_standard(e_full, e_b, lam);
}

Vec guide_def_text(EvalSet& evals, double lam, double t, double t_threshold) {
  if (t < t_threshold) {
    return guide_standard(evals.get(ConditionMask::full),
                          evals.get(ConditionMask::none), lam);
  }
  return guide_input_text(evals, lam);
}

GuidedVelocity guided_velocity(const VelocityModel& model, const Vec& x,
                               double t, const ConditionPair& cond,
                               const GuidanceSpec& spec) {
  spec.validate();
  EvalSet evals(model, x, t, cond);
  const double lam = effective_lambda(spec, t);
  Vec v;
  switch (spec.strategy) {
    case Strategy::none:
      v = evals.get(ConditionMask::full);
      break;
    case Strategy::standard:
      v = guide_standard(evals.get(ConditionMask::full),
                         evals.get(ConditionMask::none), lam);
      break;
    case Strategy::negative_prompt:
      // The two-factor task has no separate negative condition; the empty
      // negative anchor is the unconditioned branch.
      v = guide_negative(evals.get(ConditionMask::full),
                         evals.get(ConditionMask::none), lam);
      break;
    case Strategy::perp_neg:
      v = guide_perp_neg(evals.get(ConditionMask::full),
                         evals.get(ConditionMask::none), lam);
      break;
    case Strategy::cfg_zero_star:
      v = guide_cfg_zero_star(evals.get(ConditionMask::full),
                              evals.get(ConditionMask::none), lam);
      break;
    case Strategy::dual_separated:
      v = guide_dual_separated(evals, spec.lambda_text, spec.lambda_spk);
      break;
    case Strategy::mega_separated:
      v = guide_mega_separated(evals, spec.lambda_text, spec.lambda_spk);
      break;
    case Strategy::input_text:
      v = guide_input_text(evals, lam);
      break;
    case Strategy::input_audio:
      v = guide_input_audio(evals, lam);
      break;
    case Strategy::def_text:
      v = guide_def_text(evals, lam, t, spec.t_threshold);
      break;
  }
  return {std::move(v), evals.eval_count()};
}

}  // namespace cfglab
