#include "cfglab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <thread>

#include "cfglab/oracle.hpp"
#include "cfglab/serde.hpp"
#include "format.hpp"

namespace cfglab {

void ExperimentConfig::validate() const {
  if (format_version != 1) throw ConfigError("experiment config: format_version must be 1");
  task.validate();
  if (guidance.empty()) throw ConfigError("experiment config: guidance list must be nonempty");
  for (const auto& g : guidance) g.validate();
  if (seeds.empty()) throw ConfigError("experiment config: seeds must be nonempty");
  if (samples_per_cell < 1) throw ConfigError("experiment config: samples_per_cell must be >= 1");
  if (grid.n_steps < 1) throw ConfigError("experiment config: n_steps must be >= 1");
  if (jobs < 1) throw ConfigError("experiment config: jobs must be >= 1");
  for (const auto& c : conditions) {
    if (c.a < 0 || c.a >= task.num_classes_a() || c.b < 0 ||
        c.b >= task.num_classes_b()) {
      throw ConfigError("experiment config: condition out of range");
    }
  }
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  const std::string canon = experiment_config_to_json(cfg);
  std::uint64_t h = hash_key(0x63666c6162ULL, std::string_view(canon));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& strategy,
                        double lambda, const ConditionPair& cond) {
  std::uint64_t h = hash_key(seed, std::string_view(strategy));
  h = hash_key(h, lambda);
  h = hash_key(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(cond.a)));
  h = hash_key(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(cond.b)));
  return h;
}

std::unique_ptr<VelocityModel> build_model(const TaskSpec& task,
                                           const ModelSource& source) {
  if (source.kind == ModelSource::Kind::oracle) {
    return std::make_unique<OracleModel>(task);
  }
  Checkpoint ckpt = load_checkpoint(source.path);
  if (task_spec_to_json(ckpt.model.task()) != task_spec_to_json(task)) {
    throw ConfigError("checkpoint task spec does not match the experiment task: " +
                      source.path);
  }
  return std::make_unique<MlpModel>(std::move(ckpt.model));
}

std::unique_ptr<VelocityModel> build_model(const ExperimentConfig& cfg) {
  return build_model(cfg.task, cfg.model);
}

namespace {

bool uses_scalar_lambda(Strategy s) {
  switch (s) {
    case Strategy::standard:
    case Strategy::negative_prompt:
    case Strategy::perp_neg:
    case Strategy::cfg_zero_star:
    case Strategy::input_text:
    case Strategy::input_audio:
    case Strategy::def_text:
      return true;
    default:
      return false;
  }
}

struct Cell {
  GuidanceSpec guidance;
  std::uint64_t seed = 0;
  ConditionPair cond;
};

MetricsRecord run_cell(const ExperimentConfig& cfg, const VelocityModel& model,
                       const Cell& cell, const std::string& fingerprint) {
  MetricsRecord rec;
  rec.strategy = to_string(cell.guidance.strategy);
  rec.lambda = cell.guidance.lambda;
  rec.lambda_text = cell.guidance.lambda_text;
  rec.lambda_spk = cell.guidance.lambda_spk;
  rec.t_threshold = cell.guidance.t_threshold;
  rec.tz = cell.guidance.tz > 0.0 ? cell.guidance.tz : cfg.grid.tz;
  rec.n_steps = cfg.grid.n_steps;
  rec.seed = cell.seed;
  rec.cond_a = cell.cond.a;
  rec.cond_b = cell.cond.b;
  rec.n_samples = cfg.samples_per_cell;
  rec.fingerprint = fingerprint;

  const TimeGrid grid = make_grid(cfg.grid.kind, cfg.grid.n_steps, rec.tz);
  const std::uint64_t derived =
      cell_seed(cell.seed, rec.strategy, rec.lambda, cell.cond);
  Rng root(derived);
  Rng sample_rng = root.split(0);
  Rng ref_rng = root.split(1);

  try {
    std::vector<Vec> samples;
    samples.reserve(static_cast<std::size_t>(cfg.samples_per_cell));
    long evals = 0;
    for (int i = 0; i < cfg.samples_per_cell; ++i) {
      auto res = sample(model, cell.cond, grid, cell.guidance, sample_rng,
                        cfg.method);
      evals += res.eval_count;
      samples.push_back(std::move(res.x));
    }
    std::vector<Vec> reference;
    reference.reserve(samples.size());
    for (int i = 0; i < cfg.samples_per_cell; ++i) {
      reference.push_back(sample_target(cfg.task, cell.cond, ref_rng));
    }
    rec.adherence_a = adherence(samples, cfg.task, cell.cond, Factor::A);
    rec.adherence_b = adherence(samples, cfg.task, cell.cond, Factor::B);
    rec.energy_distance = energy_distance(samples, reference);
    rec.eval_count = evals;
  } catch (const IntegrationFailure&) {
    rec.failed = true;
    rec.adherence_a = rec.adherence_b = rec.energy_distance = 0.0;
    rec.eval_count = 0;
  }
  return rec;
}

}  // namespace

std::vector<MetricsRecord> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto model = build_model(cfg);
  const std::string fingerprint = config_fingerprint(cfg);

  std::vector<ConditionPair> conds = cfg.conditions;
  if (conds.empty()) {
    for (int a = 0; a < cfg.task.num_classes_a(); ++a) {
      for (int b = 0; b < cfg.task.num_classes_b(); ++b) conds.push_back({a, b});
    }
  }

  std::vector<Cell> cells;
  for (const auto& g : cfg.guidance) {
    std::vector<double> lambdas;
    if (uses_scalar_lambda(g.strategy) && !cfg.lambdas.empty() &&
        g.schedule.kind == WeightScheduleKind::constant) {
      lambdas = cfg.lambdas;
    } else {
      lambdas = {g.lambda};
    }
    for (double lam : lambdas) {
      GuidanceSpec spec = g;
      spec.lambda = lam;
      for (std::uint64_t seed : cfg.seeds) {
        for (const auto& cond : conds) {
          cells.push_back({spec, seed, cond});
        }
      }
    }
  }

  std::vector<MetricsRecord> records(cells.size());
  const int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      records[i] = run_cell(cfg, *model, cells[i], fingerprint);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        records[i] = run_cell(cfg, *model, cells[i], fingerprint);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Canonical output order, independent of scheduling and list edits.
  std::sort(records.begin(), records.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) {
              return std::tie(a.strategy, a.lambda, a.lambda_text, a.lambda_spk,
                              a.t_threshold, a.tz, a.n_steps, a.seed, a.cond_a,
                              a.cond_b) <
                     std::tie(b.strategy, b.lambda, b.lambda_text, b.lambda_spk,
                              b.t_threshold, b.tz, b.n_steps, b.seed, b.cond_a,
                              b.cond_b);
            });
  return records;
}

void write_results_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<MetricsRecord>& records) {
  os << "# cfglab results v1\n";
  os << "# config_fingerprint: " << config_fingerprint(cfg) << "\n";
  std::string canon = experiment_config_to_json(cfg);
  std::replace(canon.begin(), canon.end(), '\n', ' ');
  os << "# config: " << canon << "\n";
  os << metrics_csv_header() << "\n";
  for (const auto& r : records) os << metrics_csv_row(r) << "\n";
}

std::vector<MetricsRecord> read_results_csv(std::istream& is) {
  std::vector<MetricsRecord> records;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != metrics_csv_header()) {
        throw ConfigError("results CSV: unexpected header");
      }
      header_seen = true;
      continue;
    }
    records.push_back(metrics_csv_parse_row(line));
  }
  if (!header_seen) throw ConfigError("results CSV: missing header");
  return records;
}

void write_summary_csv(std::ostream& os, const std::vector<std::string>& group_keys,
                       const std::vector<SummaryRow>& rows) {
  for (const auto& k : group_keys) os << k << ",";
  os << "mean_adherence_a,sd_adherence_a,mean_adherence_b,sd_adherence_b,"
        "mean_energy_distance,sd_energy_distance,count\n";
  for (const auto& row : rows) {
    for (const auto& g : row.group) os << g << ",";
    os << format_double(row.mean_adherence_a) << ','
       << format_double(row.sd_adherence_a) << ','
       << format_double(row.mean_adherence_b) << ','
       << format_double(row.sd_adherence_b) << ','
       << format_double(row.mean_energy_distance) << ','
       << format_double(row.sd_energy_distance) << ',' << row.count << "\n";
  }
}

}  // namespace cfglab
