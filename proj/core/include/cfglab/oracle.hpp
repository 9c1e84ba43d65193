#pragma once

#include <vector>

#include "cfglab/velocity_model.hpp"

namespace cfglab {

// Exact conditional velocity field for the Gaussian-grid task under the
// straight-line interpolant x_t = x0 + t (x1 - x0) with x0 ~ N(0, I).
//
// Per mixture component k (target N(mu_k, sigma^2 I)) the interpolant
// marginal is x_t ~ N(t mu_k, ((1-t)^2 + t^2 sigma^2) I), and
//   E[x1 - x0 | x_t = x, k] = mu_k + (t sigma^2 - (1-t)) / m(t) * (x - t mu_k)
// with m(t) = (1-t)^2 + t^2 sigma^2. ABSENT factors are marginalized
// uniformly; the field is the responsibility-weighted sum over components.
class OracleModel final : public VelocityModel {
 public:
  explicit OracleModel(TaskSpec spec);

  Vec velocity(const Vec& x, double t, const ConditionPair& cond) const override;
  int dim() const override { return spec_.dim; }

  const TaskSpec& task() const { return spec_; }

  // Component means matching a condition (ABSENT factors enumerated).
  std::vector<Vec> component_means(const ConditionPair& cond) const;

 private:
  TaskSpec spec_;
};

}  // namespace cfglab
