#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfglab/guidance.hpp"
#include "cfglab/schedule.hpp"

namespace cfglab {

enum class OdeMethod { euler, midpoint };

std::string to_string(OdeMethod m);
OdeMethod ode_method_from_string(const std::string& s);

// Thrown when the integrator state goes non-finite.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct SampleTrace {
  std::vector<double> times;           // grid points
  std::vector<Vec> states;             // x at each grid point
  std::vector<Vec> extrapolated;       // x_t + (1-t) v at each grid point;
                                       // the last entry equals the final state
  long eval_count = 0;
};

// x + (1 - t) * v: per-step estimate of the final sample.
Vec extrapolate(const Vec& x, double t, const Vec& v);

struct SampleResult {
  Vec x;               // state at the final grid point
  long eval_count = 0;  // total model evaluations consumed
};

// Integrates the guided field over the grid from a pure-noise start (even
// when the grid starts at a truncated time). Euler uses the velocity at the
// step's left endpoint; midpoint takes one half-step probe first.
SampleResult sample(const VelocityModel& model, const ConditionPair& cond,
                    const TimeGrid& grid, const GuidanceSpec& spec, Rng& rng,
                    OdeMethod method = OdeMethod::euler,
                    SampleTrace* trace = nullptr);

// step, t, x_0..x_{d-1}, ex_0..ex_{d-1} -- one row per grid point.
void write_trace_csv(std::ostream& os, const SampleTrace& trace);

}  // namespace cfglab
