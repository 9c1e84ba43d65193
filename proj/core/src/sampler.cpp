#include "cfglab/sampler.hpp"

#include <cmath>
#include <ostream>

#include "format.hpp"

namespace cfglab {

std::string to_string(OdeMethod m) {
  return m == OdeMethod::euler ? "euler" : "midpoint";
}

OdeMethod ode_method_from_string(const std::string& s) {
  if (s == "euler") return OdeMethod::euler;
  if (s == "midpoint") return OdeMethod::midpoint;
  throw std::invalid_argument("unknown ODE method: " + s);
}

Vec extrapolate(const Vec& x, double t, const Vec& v) {
  if (x.size() != v.size()) {
    throw std::invalid_argument("extrapolate: dimension mismatch");
  }
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + (1.0 - t) * v[i];
  return out;
}

SampleResult sample(const VelocityModel& model, const ConditionPair& cond,
                    const TimeGrid& grid, const GuidanceSpec& spec, Rng& rng,
                    OdeMethod method, SampleTrace* trace) {
  if (!cond.has_a() || !cond.has_b()) {
    throw std::invalid_argument("sample: condition must be fully present");
  }
  if (grid.points.size() < 2) {
    throw std::invalid_argument("sample: grid needs at least one step");
  }

  Vec x = gaussian_sample(rng, model.dim());
  long evals = 0;

  if (trace != nullptr) {
    trace->times.clear();
    trace->states.clear();
    trace->extrapolated.clear();
    trace->eval_count = 0;
  }

  const int n = static_cast<int>(grid.points.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const double t0 = grid.points[static_cast<std::size_t>(i)];
    const double t1 = grid.points[static_cast<std::size_t>(i) + 1];
    const double dt = t1 - t0;

    auto [v0, c0] = guided_velocity(model, x, t0, cond, spec);
    evals += c0;

    if (trace != nullptr) {
      trace->times.push_back(t0);
      trace->states.push_back(x);
      trace->extrapolated.push_back(extrapolate(x, t0, v0));
    }

    if (method == OdeMethod::euler) {
      axpy(dt, v0, x);
    } else {
      Vec x_mid = x;
      axpy(0.5 * dt, v0, x_mid);
      if (!all_finite(x_mid)) {
        throw IntegrationFailure(i, "sample: non-finite midpoint state at step " +
                                        std::to_string(i));
      }
      auto [v_mid, c_mid] =
          guided_velocity(model, x_mid, t0 + 0.5 * dt, cond, spec);
      evals += c_mid;
      axpy(dt, v_mid, x);
    }

    if (!all_finite(x)) {
      throw IntegrationFailure(i, "sample: non-finite state at step " +
                                      std::to_string(i));
    }
  }

  if (trace != nullptr) {
    trace->times.push_back(grid.points.back());
    trace->states.push_back(x);
    trace->extrapolated.push_back(x);  // extrapolate(x, 1, v) == x
    trace->eval_count = evals;
  }
  return {std::move(x), evals};
}

void write_trace_csv(std::ostream& os, const SampleTrace& trace) {
  const std::size_t d = trace.states.empty() ? 0 : trace.states.front().size();
  os << "step,t";
  for (std::size_t i = 0; i < d; ++i) os << ",x_" << i;
  for (std::size_t i = 0; i < d; ++i) os << ",ex_" << i;
  os << "\n";
  for (std::size_t s = 0; s < trace.times.size(); ++s) {
    os << s << "," << format_double(trace.times[s]);
    for (double v : trace.states[s]) os << "," << format_double(v);
    for (double v : trace.extrapolated[s]) os << "," << format_double(v);
    os << "\n";
  }
}

}  // namespace cfglab
