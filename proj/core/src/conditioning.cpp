#include "cfglab/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfglab {

std::string to_string(ConditionMask mask) {
  switch (mask) {
    case ConditionMask::none: return "none";
    case ConditionMask::a_only: return "a_only";
    case ConditionMask::b_only: return "b_only";
    case ConditionMask::full: return "full";
  }
  return "?";
}

Vec TaskSpec::center(int a, int b) const {
  Vec mu(static_cast<std::size_t>(dim), 0.0);
  mu[0] = centers_a.at(static_cast<std::size_t>(a));
  mu[1] = centers_b.at(static_cast<std::size_t>(b));
  return mu;
}

void TaskSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("TaskSpec: dim must be >= 2");
  if (centers_a.empty() || centers_b.empty()) {
    throw std::invalid_argument("TaskSpec: centers must be nonempty");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("TaskSpec: sigma must be > 0");
  for (const auto* centers : {&centers_a, &centers_b}) {
    for (std::size_t i = 0; i < centers->size(); ++i) {
      for (std::size_t j = i + 1; j < centers->size(); ++j) {
        if ((*centers)[i] == (*centers)[j]) {
          throw std::invalid_argument("TaskSpec: centers must be distinct");
        }
      }
    }
  }
  for (double p : {drop_a, drop_b}) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw std::invalid_argument("TaskSpec: dropout probability must lie in [0, 1)");
    }
  }
}

Vec sample_target(const TaskSpec& spec, const ConditionPair& cond, Rng& rng) {
  if (!cond.has_a() || !cond.has_b()) {
    throw std::invalid_argument("sample_target: both factors must be present");
  }
  if (cond.a < 0 || cond.a >= spec.num_classes_a() || cond.b < 0 ||
      cond.b >= spec.num_classes_b()) {
    throw std::invalid_argument("sample_target: class index out of range");
  }
  Vec x = spec.center(cond.a, cond.b);
  for (auto& xi : x) xi += spec.sigma * rng.next_gaussian();
  return x;
}

ConditionPair mask_dropout(const ConditionPair& cond, const TaskSpec& spec,
                           Rng& rng) {
  ConditionPair out = cond;
  if (out.has_a() && rng.next_double() < spec.drop_a) out.a = kAbsent;
  if (out.has_b() && rng.next_double() < spec.drop_b) out.b = kAbsent;
  return out;
}

std::vector<double> bayes_posterior(const TaskSpec& spec, const Vec& x,
                                    Factor factor) {
  if (static_cast<int>(x.size()) != spec.dim) {
    throw std::invalid_argument("bayes_posterior: x has wrong dimension");
  }
  if (!all_finite(x)) {
    throw std::invalid_argument("bayes_posterior: x must be finite");
  }
  const int ka = spec.num_classes_a();
  const int kb = spec.num_classes_b();
  const int n = factor == Factor::A ? ka : kb;
  const double inv_two_var = 1.0 / (2.0 * spec.sigma * spec.sigma);

  // log sum over the marginalized factor, per class of the queried factor.
  std::vector<double> log_post(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double m = -HUGE_VAL;
    std::vector<double> terms;
    const int n_other = factor == Factor::A ? kb : ka;
    terms.reserve(static_cast<std::size_t>(n_other));
    for (int j = 0; j < n_other; ++j) {
      const int a = factor == Factor::A ? k : j;
      const int b = factor == Factor::A ? j : k;
      double d2 = 0.0;
      const Vec mu = spec.center(a, b);
      for (int i = 0; i < spec.dim; ++i) {
        const double diff = x[static_cast<std::size_t>(i)] - mu[static_cast<std::size_t>(i)];
        d2 += diff * diff;
      }
      const double lt = -d2 * inv_two_var;
      terms.push_back(lt);
      m = std::max(m, lt);
    }
    double s = 0.0;
    for (double lt : terms) s += std::exp(lt - m);
    log_post[static_cast<std::size_t>(k)] = m + std::log(s);
  }

  const double lmax = *std::max_element(log_post.begin(), log_post.end());
  double total = 0.0;
  std::vector<double> post(log_post.size());
  for (std::size_t k = 0; k < post.size(); ++k) {
    post[k] = std::exp(log_post[k] - lmax);
    total += post[k];
  }
  for (auto& p : post) p /= total;
  return post;
}

int bayes_argmax(const TaskSpec& spec, const Vec& x, Factor factor) {
  const auto post = bayes_posterior(spec, x, factor);
  int best = 0;
  for (int k = 1; k < static_cast<int>(post.size()); ++k) {
    if (post[static_cast<std::size_t>(k)] > post[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

}  // namespace cfglab
