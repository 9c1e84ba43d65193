#pragma once

#include "cfglab/conditioning.hpp"
#include "cfglab/numerics.hpp"

namespace cfglab {

// Evaluation contract: (state, time, condition mask) -> velocity. Implemented
// by the analytic oracle and the trained network. Implementations must be
// deterministic and safe for concurrent const evaluation.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;

  virtual Vec velocity(const Vec& x, double t, const ConditionPair& cond) const = 0;
  virtual int dim() const = 0;
};

}  // namespace cfglab
