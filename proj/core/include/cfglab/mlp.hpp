#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cfglab/velocity_model.hpp"

namespace cfglab {

inline constexpr int kTimeFeatureCount = 9;
inline constexpr int kEmbedDim = 8;
inline constexpr int kHiddenUnits = 64;

// [t, sin(2 pi k t), cos(2 pi k t) for k = 1..4]
Vec time_features(double t);

struct TrainConfig {
  int steps = 20000;
  int batch = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;

  void validate() const;
};

class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(int last_valid_step, const std::string& what)
      : std::runtime_error(what), last_valid_step_(last_valid_step) {}
  int last_valid_step() const { return last_valid_step_; }

 private:
  int last_valid_step_;
};

// Named view into the flat parameter vector.
struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
};

// Velocity network: input x ++ time features ++ class embeddings, two SiLU
// hidden layers of 64 units, linear output of dimension d. Each embedding
// table carries one extra null row selected when the factor is ABSENT.
class MlpModel final : public VelocityModel {
 public:
  MlpModel(TaskSpec spec, std::uint64_t init_seed);

  Vec velocity(const Vec& x, double t, const ConditionPair& cond) const override;
  int dim() const override { return spec_.dim; }

  const TaskSpec& task() const { return spec_; }
  int input_dim() const { return in_dim_; }

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::span<double> tensor_span(const std::string& name);

 private:
  friend double fm_loss(const MlpModel&, const std::vector<Vec>&,
                        const std::vector<ConditionPair>&, Rng&,
                        std::vector<double>*);

  void forward(const Vec& x, double t, const ConditionPair& cond,
               std::vector<double>& input, std::vector<double>& pre1,
               std::vector<double>& h1, std::vector<double>& pre2,
               std::vector<double>& h2, std::vector<double>& out) const;

  const TensorInfo& info(const std::string& name) const;

  TaskSpec spec_;
  int in_dim_ = 0;
  std::vector<TensorInfo> tensors_;
  std::vector<double> params_;
};

// Flow-matching loss on one batch: per item draws t ~ U[0,1] and x0 ~ N(0,I),
// applies condition dropout, forms x_t = x0 + t (x1 - x0), and scores the
// prediction against x1 - x0. Returns the mean squared error (squared norm
// averaged over the batch); when grad is non-null it receives exact
// backpropagated gradients, laid out like model.params().
double fm_loss(const MlpModel& model, const std::vector<Vec>& x1,
               const std::vector<ConditionPair>& cond, Rng& rng,
               std::vector<double>* grad = nullptr);

// Loss-only evaluation of the same objective (same draw sequence) for any
// velocity model; useful for scoring a reference field.
double fm_loss_value(const VelocityModel& model, const TaskSpec& spec,
                     const std::vector<Vec>& x1,
                     const std::vector<ConditionPair>& cond, Rng& rng);

struct TrainResult {
  MlpModel model;
  std::vector<std::pair<int, double>> curve;  // (step, loss)
  std::vector<std::pair<int, MlpModel>> snapshots;
};

// Adam-optimized flow-matching training, deterministic per cfg.seed.
// snapshot_steps requests parameter copies at those step counts.
TrainResult train(const TaskSpec& spec, const TrainConfig& cfg,
                  std::span<const int> snapshot_steps = {});

}  // namespace cfglab
