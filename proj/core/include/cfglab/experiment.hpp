#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfglab/guidance.hpp"
#include "cfglab/metrics.hpp"
#include "cfglab/mlp.hpp"
#include "cfglab/sampler.hpp"
#include "cfglab/schedule.hpp"

namespace cfglab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSource {
  enum class Kind { oracle, checkpoint };
  Kind kind = Kind::oracle;
  std::string path;  // checkpoint only
};

struct GridConfig {
  GridKind kind = GridKind::cosine;
  int n_steps = 32;
  double tz = 0.0;
};

// One sweep: for each (guidance entry, lambda, seed, condition) cell,
// sample a batch and score it. Guidance entries with a scalar lambda take
// each value of `lambdas`; separated-condition entries and `none` run once
// with their configured weights. A guidance entry with tz > 0 overrides the
// grid's tz for its cells.
struct ExperimentConfig {
  int format_version = 1;
  TaskSpec task;
  ModelSource model;
  GridConfig grid;
  OdeMethod method = OdeMethod::euler;
  std::vector<GuidanceSpec> guidance;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int samples_per_cell = 2000;
  std::vector<ConditionPair> conditions;  // empty = all (a, b) pairs
  int jobs = 1;                           // runtime knob, not fingerprinted
  std::string out = "results.csv";        // runtime knob, not fingerprinted

  void validate() const;
};

// Hex digest of the canonical config serialization; embedded in results.
std::string config_fingerprint(const ExperimentConfig& cfg);

// Per-cell seed: hash(seed, strategy, lambda, condition) so cells stay
// reproducible when a sweep list is edited.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& strategy,
                        double lambda, const ConditionPair& cond);

// Builds the model and runs every cell. Integration failures mark the cell
// failed and the sweep continues. Cells run on up to cfg.jobs threads;
// output order is canonical regardless.
std::vector<MetricsRecord> run_sweep(const ExperimentConfig& cfg);

// Results CSV with the config fingerprint and canonical config embedded as
// leading '#' comment lines.
void write_results_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_results_csv(std::istream& is);

void write_summary_csv(std::ostream& os, const std::vector<std::string>& group_keys,
                       const std::vector<SummaryRow>& rows);

// Model construction (oracle, or checkpoint validated against the task
// spec).
std::unique_ptr<VelocityModel> build_model(const TaskSpec& task,
                                           const ModelSource& source);
std::unique_ptr<VelocityModel> build_model(const ExperimentConfig& cfg);

}  // namespace cfglab
