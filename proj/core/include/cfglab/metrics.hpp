#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfglab/conditioning.hpp"

namespace cfglab {

// One sampled batch reduced to its scores. adherence_a is the text analog
// (its complement plays WER's role), adherence_b the speaker analog (SIM's
// role).
struct MetricsRecord {
  std::string strategy;
  double lambda = 0.0;
  double lambda_text = 0.0;
  double lambda_spk = 0.0;
  double t_threshold = 0.0;
  double tz = 0.0;
  int n_steps = 0;
  std::uint64_t seed = 0;
  int cond_a = kAbsent;
  int cond_b = kAbsent;
  double adherence_a = 0.0;
  double adherence_b = 0.0;
  double energy_distance = 0.0;
  long n_samples = 0;
  long eval_count = 0;
  bool failed = false;
  std::string fingerprint;
};

// Fraction of samples whose posterior argmax for the factor equals the
// conditioned class.
double adherence(const std::vector<Vec>& samples, const TaskSpec& spec,
                 const ConditionPair& cond, Factor factor);

// Unbiased two-sample energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'|.
double energy_distance(const std::vector<Vec>& samples_x,
                       const std::vector<Vec>& samples_y);

struct SummaryRow {
  std::vector<std::string> group;  // values of the group keys, in key order
  double mean_adherence_a = 0.0, sd_adherence_a = 0.0;
  double mean_adherence_b = 0.0, sd_adherence_b = 0.0;
  double mean_energy_distance = 0.0, sd_energy_distance = 0.0;
  int count = 0;
};

// Per-group mean and standard deviation of each metric. group_keys name
// MetricsRecord columns (strategy, lambda, lambda_text, lambda_spk,
// t_threshold, tz, n_steps, seed, cond_a, cond_b). Rows are ordered by
// lambda first, then the remaining keys. Failed records are skipped.
std::vector<SummaryRow> sweep_summary(const std::vector<MetricsRecord>& records,
                                      const std::vector<std::string>& group_keys);

// CSV column order for results files.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& r);
MetricsRecord metrics_csv_parse_row(const std::string& line);

}  // namespace cfglab
