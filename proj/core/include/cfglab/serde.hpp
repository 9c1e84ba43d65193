#pragma once

#include <cstdint>
#include <string>

#include "cfglab/experiment.hpp"
#include "cfglab/mlp.hpp"

namespace cfglab {

// JSON text <-> config structs. Parsers are strict: unknown keys and
// format_version mismatches are ConfigErrors. Missing keys fall back to the
// struct defaults.
std::string task_spec_to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const std::string& text);

std::string guidance_spec_to_json(const GuidanceSpec& spec);
GuidanceSpec guidance_spec_from_json(const std::string& text);

std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct TrainRunConfig {
  int format_version = 1;
  TaskSpec task;
  TrainConfig train;
};
TrainRunConfig train_run_config_from_json(const std::string& text);
TrainRunConfig load_train_run_config(const std::string& path);

struct SampleRunConfig {
  int format_version = 1;
  TaskSpec task;
  ModelSource model;
  GridConfig grid;
  OdeMethod method = OdeMethod::euler;
  GuidanceSpec guidance;
  ConditionPair condition{0, 0};
  int n_samples = 100;
};
SampleRunConfig sample_run_config_from_json(const std::string& text);
SampleRunConfig load_sample_run_config(const std::string& path);

// Checkpoint envelope: format_version, task spec, architecture dims, seed,
// step count, and per-tensor base64 little-endian float32 payloads.
struct Checkpoint {
  MlpModel model;
  std::uint64_t seed = 0;
  int steps = 0;
};
std::string checkpoint_to_json(const MlpModel& model, std::uint64_t seed, int steps);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const MlpModel& model, std::uint64_t seed, int steps,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cfglab
