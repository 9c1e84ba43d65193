#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfglab/experiment.hpp"
#include "cfglab/serde.hpp"

namespace {

using namespace cfglab;

std::string format_g(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

int cmd_train(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_path) {
  TrainRunConfig cfg = load_train_run_config(config_path);
  if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);

  TrainResult result = train(cfg.task, cfg.train);
  save_checkpoint(result.model, cfg.train.seed, cfg.train.steps, out_path);

  if (!result.curve.empty()) {
    const std::size_t n = result.curve.size();
    const std::size_t head = std::min<std::size_t>(1000, n);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < head; ++i) first += result.curve[i].second;
    for (std::size_t i = n - head; i < n; ++i) last += result.curve[i].second;
    std::cout << "trained " << cfg.train.steps << " steps (seed "
              << cfg.train.seed << "): loss " << format_g(first / head) << " -> "
              << format_g(last / head) << " (first/last 1000-step mean)\n";
  }
  std::cout << "checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_sample(const std::string& config_path, std::uint64_t seed,
               const std::string& out_path) {
  const SampleRunConfig cfg = load_sample_run_config(config_path);
  const auto model = build_model(cfg.task, cfg.model);
  const TimeGrid grid = make_grid(
      cfg.grid.kind, cfg.grid.n_steps,
      cfg.guidance.tz > 0.0 ? cfg.guidance.tz : cfg.grid.tz);

  Rng rng(seed);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write file: " + out_path);
  out.precision(12);
  out << "sample";
  for (int i = 0; i < model->dim(); ++i) out << ",x_" << i;
  out << "\n";
  for (int i = 0; i < cfg.n_samples; ++i) {
    const auto res = sample(*model, cfg.condition, grid, cfg.guidance, rng,
                            cfg.method);
    out << i;
    for (double v : res.x) out << "," << v;
    out << "\n";
  }
  std::cout << cfg.n_samples << " samples written to " << out_path << "\n";
  return 0;
}

int cmd_probe(const std::string& config_path, std::uint64_t seed,
              const std::string& out_path) {
  const SampleRunConfig cfg = load_sample_run_config(config_path);
  const auto model = build_model(cfg.task, cfg.model);
  const TimeGrid grid = make_grid(
      cfg.grid.kind, cfg.grid.n_steps,
      cfg.guidance.tz > 0.0 ? cfg.guidance.tz : cfg.grid.tz);

  Rng rng(seed);
  SampleTrace trace;
  sample(*model, cfg.condition, grid, cfg.guidance, rng, cfg.method, &trace);

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write file: " + out_path);
  write_trace_csv(out, trace);
  std::cout << "trace (" << trace.times.size() << " rows, " << trace.eval_count
            << " model evaluations) written to " << out_path << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, std::int64_t seed_override,
              std::string out_path, int jobs_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
  if (jobs_override > 0) cfg.jobs = jobs_override;
  if (out_path.empty()) out_path = cfg.out;

  const auto records = run_sweep(cfg);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write file: " + out_path);
  write_results_csv(out, cfg, records);

  long failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  std::cout << records.size() << " cells written to " << out_path;
  if (failed > 0) std::cout << " (" << failed << " failed)";
  std::cout << "\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path,
               const std::string& group_by) {
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open file: " + in_path);
  const auto records = read_results_csv(in);

  std::vector<std::string> keys;
  std::string cur;
  for (char c : group_by) {
    if (c == ',') {
      if (!cur.empty()) keys.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) keys.push_back(cur);

  const auto rows = sweep_summary(records, keys);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write file: " + out_path);
  write_summary_csv(out, keys, rows);
  std::cout << rows.size() << " groups written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfglab: guidance strategies for flow-matching samplers on a "
               "two-factor synthetic task"};
  app.require_subcommand(1);

  struct {
    std::string config;
    std::int64_t seed = -1;
    std::string out = "checkpoint.json";
  } train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a velocity network and write a checkpoint");
  train_cmd->add_option("--config", train_args.config, "Train config JSON")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path");

  struct {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = "samples.csv";
  } sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw guided samples and write them as CSV");
  sample_cmd->add_option("--config", sample_args.config, "Sample config JSON")->required();
  sample_cmd->add_option("--seed", sample_args.seed, "Sampling seed");
  sample_cmd->add_option("--out", sample_args.out, "Samples CSV path");

  struct {
    std::string config;
    std::int64_t seed = -1;
    std::string out;
    int jobs = 0;
  } sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a full experiment sweep to a results CSV");
  sweep_cmd->add_option("--config", sweep_args.config, "Experiment config JSON")->required();
  sweep_cmd->add_option("--seed", sweep_args.seed, "Replace the config seed list with one seed");
  sweep_cmd->add_option("--out", sweep_args.out, "Results CSV path (default: config 'out')");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker thread bound");

  struct {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = "trace.csv";
  } probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Record one trajectory with the extrapolated-signal probe");
  probe_cmd->add_option("--config", probe_args.config, "Sample config JSON")->required();
  probe_cmd->add_option("--seed", probe_args.seed, "Sampling seed");
  probe_cmd->add_option("--out", probe_args.out, "Trace CSV path");

  struct {
    std::string in;
    std::string out = "summary.csv";
    std::string group_by = "strategy,lambda";
  } report_args;
  auto* report_cmd = app.add_subcommand("report", "Group a results CSV into a summary CSV");
  report_cmd->add_option("--in", report_args.in, "Results CSV")->required();
  report_cmd->add_option("--out", report_args.out, "Summary CSV path");
  report_cmd->add_option("--group-by", report_args.group_by, "Comma-separated group keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(train_args.config, train_args.seed, train_args.out);
    }
    if (sample_cmd->parsed()) {
      return cmd_sample(sample_args.config, sample_args.seed, sample_args.out);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_args.config, sweep_args.seed, sweep_args.out,
                       sweep_args.jobs);
    }
    if (probe_cmd->parsed()) {
      return cmd_probe(probe_args.config, probe_args.seed, probe_args.out);
    }
    if (report_cmd->parsed()) {
      return cmd_report(report_args.in, report_args.out, report_args.group_by);
    }
  } catch (const std::exception& e) {
    std::cerr << "cfglab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
