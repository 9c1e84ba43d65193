#include "cfglab/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace cfglab {

OracleModel::OracleModel(TaskSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<Vec> OracleModel::component_means(const ConditionPair& cond) const {
  const int ka = spec_.num_classes_a();
  const int kb = spec_.num_classes_b();
  if (cond.has_a() && (cond.a < 0 || cond.a >= ka)) {
    throw std::invalid_argument("OracleModel: class a out of range");
  }
  if (cond.has_b() && (cond.b < 0 || cond.b >= kb)) {
    throw std::invalid_argument("OracleModel: class b out of range");
  }
  std::vector<Vec> means;
  const int a_lo = cond.has_a() ? cond.a : 0;
  const int a_hi = cond.has_a() ? cond.a + 1 : ka;
  const int b_lo = cond.has_b() ? cond.b : 0;
  const int b_hi = cond.has_b() ? cond.b + 1 : kb;
  means.reserve(static_cast<std::size_t>((a_hi - a_lo) * (b_hi - b_lo)));
  for (int a = a_lo; a < a_hi; ++a) {
    for (int b = b_lo; b < b_hi; ++b) {
      means.push_back(spec_.center(a, b));
    }
  }
  return means;
}

Vec OracleModel::velocity(const Vec& x, double t, const ConditionPair& cond) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("OracleModel: t must lie in [0, 1]");
  }
  if (static_cast<int>(x.size()) != spec_.dim) {
    throw std::invalid_argument("OracleModel: x has wrong dimension");
  }
  if (!all_finite(x)) {
    throw std::invalid_argument("OracleModel: x must be finite");
  }

  const double sigma2 = spec_.sigma * spec_.sigma;
  const double omt = 1.0 - t;
  // Per-coordinate marginal variance of x_t; clamped to guard sigma -> 0.
  const double m = std::max(omt * omt + t * t * sigma2, 1e-12);
  const double gain = (t * sigma2 - omt) / m;

  const auto means = component_means(cond);
  const std::size_t d = x.size();

  // Log responsibilities, max-subtracted: centers at +-3 with small sigma
  // underflow naive exponentials at small t.
  std::vector<double> logw(means.size());
  double lmax = -HUGE_VAL;
  for (std::size_t k = 0; k < means.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = x[i] - t * means[k][i];
      d2 += diff * diff;
    }
    logw[k] = -d2 / (2.0 * m);
    lmax = std::max(lmax, logw[k]);
  }
  double wsum = 0.0;
  for (auto& lw : logw) {
    lw = std::exp(lw - lmax);
    wsum += lw;
  }

  Vec out(d, 0.0);
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double r = logw[k] / wsum;
    for (std::size_t i = 0; i < d; ++i) {
      const double cond_mean = means[k][i] + gain * (x[i] - t * means[k][i]);
      out[i] += r * cond_mean;
    }
  }
  return out;
}

}  // namespace cfglab
