#pragma once

// Shared test-only helpers: an independent numerical route to the oracle
// velocity, and a probe model that records which condition masks were
// evaluated. Nothing here may call into OracleModel's closed-form internals
// beyond its public task()/component_means() accessors.

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cfglab/oracle.hpp"

namespace cfglab::testing {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> solve_gauss(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

inline double determinant(Matrix a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (pivot != col) {
      std::swap(a[col], a[pivot]);
      det = -det;
    }
    det *= a[col][col];
    if (a[col][col] == 0.0) return 0.0;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return det;
}

// Independent route to E[x1 - x0 | x_t = x, cond]: build the joint
// covariance of (x_t, x1 - x0) per mixture component, condition by a generic
// linear solve, and average with responsibilities from the x_t marginal
// density evaluated directly.
inline Vec numeric_velocity(const OracleModel& oracle, const Vec& x, double t,
                            const ConditionPair& cond) {
  const TaskSpec& spec = oracle.task();
  const std::size_t d = x.size();
  const double s2 = spec.sigma * spec.sigma;
  const auto means = oracle.component_means(cond);

  Matrix sigma_ww(d, std::vector<double>(d, 0.0));
  Matrix sigma_uw(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    sigma_ww[i][i] = (1.0 - t) * (1.0 - t) * 1.0 + t * t * s2;
    sigma_uw[i][i] = -(1.0 - t) * 1.0 + t * s2;
  }

  double weight_sum = 0.0;
  std::vector<double> weights;
  std::vector<Vec> cond_means;
  for (const auto& mu : means) {
    std::vector<double> delta(d);
    for (std::size_t i = 0; i < d; ++i) delta[i] = x[i] - t * mu[i];
    const auto sol = solve_gauss(sigma_ww, delta);
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) quad += delta[i] * sol[i];
    const double det = determinant(sigma_ww);
    const double pdf =
        std::exp(-0.5 * quad) /
        std::pow(2.0 * M_PI, static_cast<double>(d) / 2.0) / std::sqrt(det);
    weights.push_back(pdf);
    weight_sum += pdf;

    Vec cm(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = mu[i];
      for (std::size_t j = 0; j < d; ++j) acc += sigma_uw[i][j] * sol[j];
      cm[i] = acc;
    }
    cond_means.push_back(std::move(cm));
  }

  Vec out(d, 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      out[i] += weights[k] / weight_sum * cond_means[k][i];
    }
  }
  return out;
}

// Deterministic fake model recording mask usage and call counts.
class ProbeModel final : public VelocityModel {
 public:
  Vec velocity(const Vec& x, double t, const ConditionPair& cond) const override {
    masks_seen.insert(to_string(cond.mask()));
    ++calls;
    const double tag = 1.0 + static_cast<double>(static_cast<int>(cond.mask()));
    Vec v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      v[i] = tag * (x[i] + 0.1 * static_cast<double>(i)) + 0.3 * t;
    }
    return v;
  }
  int dim() const override { return 2; }

  mutable std::set<std::string> masks_seen;
  mutable int calls = 0;
};

}  // namespace cfglab::testing
