#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfglab/experiment.hpp"
#include "cfglab/oracle.hpp"
#include "cfglab/serde.hpp"
#include "json.hpp"

using namespace cfglab;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "cfglab_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

ExperimentConfig small_sweep_config() {
  ExperimentConfig cfg;
  cfg.model.kind = ModelSource::Kind::oracle;
  cfg.grid.n_steps = 8;
  cfg.samples_per_cell = 50;
  cfg.seeds = {0, 1};
  cfg.conditions = {{0, 0}, {1, 2}};
  cfg.lambdas = {0.0, 1.0};
  GuidanceSpec standard;
  standard.strategy = Strategy::standard;
  GuidanceSpec input_text;
  input_text.strategy = Strategy::input_text;
  cfg.guidance = {standard, input_text};
  return cfg;
}

int run_cli(const std::string& args, const fs::path& workdir) {
  const std::string cmd = "cd " + workdir.string() + " && " + CFGLAB_CLI_PATH +
                          " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("task and guidance specs round-trip through JSON") {
  TaskSpec task;
  task.sigma = 0.5;
  task.centers_a = {-2.0, 0.0, 2.0};
  const TaskSpec back = task_spec_from_json(task_spec_to_json(task));
  CHECK(back.sigma == task.sigma);
  CHECK(back.centers_a == task.centers_a);
  CHECK(back.centers_b == task.centers_b);

  GuidanceSpec g;
  g.strategy = Strategy::def_text;
  g.lambda = 2.5;
  g.t_threshold = 0.04;
  g.schedule = {WeightScheduleKind::linear_clamped, 4.0, 0.0, 1.0};
  const GuidanceSpec gback = guidance_spec_from_json(guidance_spec_to_json(g));
  CHECK(gback.strategy == Strategy::def_text);
  CHECK(gback.lambda == 2.5);
  CHECK(gback.t_threshold == 0.04);
  CHECK(gback.schedule.kind == WeightScheduleKind::linear_clamped);
  CHECK(gback.schedule.w_min == 1.0);
}

TEST_CASE("unknown config keys are rejected") {
  CHECK_THROWS_AS(task_spec_from_json(R"({"sigma": 0.3, "sgima": 0.4})"),
                  ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(R"({"format_version": 1, "guidnace": []})"),
      ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"format_version": 2})"),
                  ConfigError);
}

TEST_CASE("experiment config round-trips through canonical JSON") {
  ExperimentConfig cfg = small_sweep_config();
  const std::string text = experiment_config_to_json(cfg);
  const ExperimentConfig back = experiment_config_from_json(text);
  CHECK(back.grid.n_steps == cfg.grid.n_steps);
  CHECK(back.samples_per_cell == cfg.samples_per_cell);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.lambdas == cfg.lambdas);
  CHECK(back.guidance.size() == cfg.guidance.size());
  CHECK(back.conditions.size() == cfg.conditions.size());
  CHECK(config_fingerprint(back) == config_fingerprint(cfg));
}

TEST_CASE("checkpoints round-trip with float32 precision") {
  const TaskSpec spec;
  TrainConfig tc;
  tc.steps = 50;
  tc.batch = 32;
  tc.seed = 3;
  const TrainResult result = train(spec, tc);

  const fs::path path = test_dir() / "ckpt_roundtrip.json";
  save_checkpoint(result.model, tc.seed, tc.steps, path.string());
  const Checkpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.seed == 3);
  CHECK(loaded.steps == 50);
  REQUIRE(loaded.model.params().size() == result.model.params().size());
  for (std::size_t i = 0; i < loaded.model.params().size(); ++i) {
    const double orig = result.model.params()[i];
    CHECK(loaded.model.params()[i] ==
          doctest::Approx(orig).epsilon(1e-6));  // float32 rounding
    CHECK(static_cast<float>(loaded.model.params()[i]) ==
          static_cast<float>(orig));
  }
}

TEST_CASE("checkpoint loading validates the envelope") {
  const TaskSpec spec;
  const MlpModel model(spec, 0);
  const std::string text = checkpoint_to_json(model, 0, 0);

  auto j = nlohmann::json::parse(text);
  j["arch"]["hidden"] = 32;
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), ConfigError);

  j = nlohmann::json::parse(text);
  j["tensors"][0]["rows"] = 17;
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), ConfigError);

  j = nlohmann::json::parse(text);
  j["tensors"][0]["data"] = "AAAA";
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), ConfigError);

  j = nlohmann::json::parse(text);
  j["kind"] = "something_else";
  CHECK_THROWS_AS(checkpoint_from_json(j.dump()), ConfigError);
}

TEST_CASE("build_model rejects a checkpoint whose task differs") {
  TaskSpec spec;
  const MlpModel model(spec, 0);
  const fs::path path = test_dir() / "ckpt_mismatch.json";
  save_checkpoint(model, 0, 0, path.string());

  ExperimentConfig cfg = small_sweep_config();
  cfg.task.sigma = 0.5;  // differs from the checkpoint's 0.35
  cfg.model.kind = ModelSource::Kind::checkpoint;
  cfg.model.path = path.string();
  CHECK_THROWS_AS(build_model(cfg), ConfigError);
}

TEST_CASE("run_sweep produces one record per cell in canonical order") {
  const ExperimentConfig cfg = small_sweep_config();
  const auto records = run_sweep(cfg);
  // 2 strategies x 2 lambdas x 2 seeds x 2 conditions
  REQUIRE(records.size() == 16);
  for (const auto& r : records) {
    CHECK_FALSE(r.failed);
    CHECK(r.n_samples == 50);
    CHECK(r.eval_count == 50L * 8 * 2);  // both strategies cost 2 evals/step
    CHECK(r.adherence_a >= 0.0);
    CHECK(r.adherence_a <= 1.0);
  }
  CHECK(std::is_sorted(records.begin(), records.end(),
                       [](const MetricsRecord& a, const MetricsRecord& b) {
                         return std::tie(a.strategy, a.lambda, a.seed, a.cond_a,
                                         a.cond_b) <
                                std::tie(b.strategy, b.lambda, b.seed, b.cond_a,
                                         b.cond_b);
                       }));
}

TEST_CASE("a three-strategy seven-lambda sweep yields 63 rows per condition") {
  ExperimentConfig cfg;
  cfg.model.kind = ModelSource::Kind::oracle;
  cfg.grid.n_steps = 8;
  cfg.samples_per_cell = 20;
  cfg.seeds = {0, 1, 2};
  cfg.conditions = {{2, 3}};
  cfg.lambdas = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  GuidanceSpec standard;
  standard.strategy = Strategy::standard;
  GuidanceSpec input_text;
  input_text.strategy = Strategy::input_text;
  GuidanceSpec def_text;
  def_text.strategy = Strategy::def_text;
  def_text.t_threshold = 0.08;
  cfg.guidance = {standard, input_text, def_text};
  const auto records = run_sweep(cfg);
  CHECK(records.size() == 63);
}

TEST_CASE("run_sweep is deterministic and independent of the job count") {
  ExperimentConfig cfg = small_sweep_config();
  const auto once = run_sweep(cfg);
  cfg.jobs = 4;
  const auto parallel = run_sweep(cfg);

  std::ostringstream a, b;
  write_results_csv(a, cfg, once);
  write_results_csv(b, cfg, parallel);
  CHECK(a.str() == b.str());
}

TEST_CASE("cell seeds ignore sweep-list position") {
  ExperimentConfig cfg = small_sweep_config();
  const auto records = run_sweep(cfg);

  // rerun with the guidance list reordered and an extra lambda added
  ExperimentConfig edited = cfg;
  std::swap(edited.guidance[0], edited.guidance[1]);
  edited.lambdas = {1.0, 0.5, 0.0};
  const auto edited_records = run_sweep(edited);

  for (const auto& r : records) {
    bool found = false;
    for (const auto& e : edited_records) {
      if (e.strategy == r.strategy && e.lambda == r.lambda && e.seed == r.seed &&
          e.cond_a == r.cond_a && e.cond_b == r.cond_b) {
        CHECK(e.adherence_a == r.adherence_a);
        CHECK(e.adherence_b == r.adherence_b);
        CHECK(e.energy_distance == r.energy_distance);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("failed cells are recorded and do not abort the sweep") {
  const TaskSpec spec;
  MlpModel model(spec, 0);
  std::fill(model.params().begin(), model.params().end(), 1e30);
  const fs::path path = test_dir() / "ckpt_exploding.json";
  save_checkpoint(model, 0, 0, path.string());

  ExperimentConfig cfg = small_sweep_config();
  cfg.model.kind = ModelSource::Kind::checkpoint;
  cfg.model.path = path.string();
  cfg.samples_per_cell = 5;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 16);
  for (const auto& r : records) CHECK(r.failed);

  cfg.method = OdeMethod::midpoint;
  for (const auto& r : run_sweep(cfg)) CHECK(r.failed);

  std::ostringstream os;
  write_results_csv(os, cfg, records);
  CHECK(os.str().find("failed") != std::string::npos);

  std::istringstream is(os.str());
  const auto back = read_results_csv(is);
  REQUIRE(back.size() == 16);
  CHECK(back.front().failed);
}

TEST_CASE("results CSV round-trips and embeds the fingerprint") {
  const ExperimentConfig cfg = small_sweep_config();
  const auto records = run_sweep(cfg);
  std::ostringstream os;
  write_results_csv(os, cfg, records);
  CHECK(os.str().find(config_fingerprint(cfg)) != std::string::npos);

  std::istringstream is(os.str());
  const auto back = read_results_csv(is);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].strategy == records[i].strategy);
    CHECK(back[i].adherence_a == records[i].adherence_a);
    CHECK(back[i].energy_distance == records[i].energy_distance);
    CHECK(back[i].eval_count == records[i].eval_count);
  }
}

TEST_CASE("cli: train twice gives byte-identical checkpoints") {
  const fs::path dir = test_dir() / "cli_train";
  fs::create_directories(dir);
  {
    nlohmann::json j{{"format_version", 1},
                     {"train", {{"steps", 60}, {"batch", 32}, {"seed", 0}}}};
    std::ofstream(dir / "train.json") << j.dump();
  }
  CHECK(run_cli("train --config train.json --seed 4 --out ckpt1.json", dir) == 0);
  CHECK(run_cli("train --config train.json --seed 4 --out ckpt2.json", dir) == 0);
  CHECK(slurp(dir / "ckpt1.json") == slurp(dir / "ckpt2.json"));
  CHECK(slurp(dir / "ckpt1.json").find("cfglab_checkpoint") != std::string::npos);
}

TEST_CASE("cli: sweep then report produce seed-averaged curves") {
  const fs::path dir = test_dir() / "cli_sweep";
  fs::create_directories(dir);
  {
    ExperimentConfig cfg = small_sweep_config();
    cfg.samples_per_cell = 30;
    std::ofstream(dir / "sweep.json") << experiment_config_to_json(cfg);
  }
  CHECK(run_cli("sweep --config sweep.json --out results.csv --jobs 2", dir) == 0);
  const std::string results = slurp(dir / "results.csv");
  CHECK(results.find("# config_fingerprint:") != std::string::npos);

  CHECK(run_cli("report --in results.csv --out summary.csv", dir) == 0);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.find("strategy,lambda,mean_adherence_a") == 0);

  // hand-check one group mean against the raw rows
  std::istringstream is(results);
  const auto records = read_results_csv(is);
  double sum = 0.0;
  int count = 0;
  for (const auto& r : records) {
    if (r.strategy == "standard" && r.lambda == 1.0) {
      sum += r.adherence_a;
      ++count;
    }
  }
  REQUIRE(count == 4);  // 2 seeds x 2 conditions
  const auto rows = sweep_summary(records, {"strategy", "lambda"});
  bool checked = false;
  for (const auto& row : rows) {
    if (row.group == std::vector<std::string>{"standard", "1"}) {
      CHECK(row.mean_adherence_a == doctest::Approx(sum / count).epsilon(1e-12));
      checked = true;
    }
  }
  CHECK(checked);
}

TEST_CASE("cli: probe writes a trace with extrapolation columns") {
  const fs::path dir = test_dir() / "cli_probe";
  fs::create_directories(dir);
  {
    nlohmann::json j{{"format_version", 1},
                     {"model", {{"kind", "oracle"}}},
                     {"grid", {{"kind", "cosine"}, {"n_steps", 16}}},
                     {"guidance", {{"strategy", "standard"}, {"lambda", 2.0}}},
                     {"condition", {2, 1}}};
    std::ofstream(dir / "probe.json") << j.dump();
  }
  CHECK(run_cli("probe --config probe.json --seed 7 --out trace.csv", dir) == 0);
  const std::string trace = slurp(dir / "trace.csv");
  CHECK(trace.rfind("step,t,x_0,x_1,ex_0,ex_1", 0) == 0);
  // 17 grid points plus the header
  int lines = 0;
  for (char c : trace) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 18);
}

TEST_CASE("cli: sample writes final states") {
  const fs::path dir = test_dir() / "cli_sample";
  fs::create_directories(dir);
  {
    nlohmann::json j{{"format_version", 1},
                     {"model", {{"kind", "oracle"}}},
                     {"grid", {{"kind", "cosine"}, {"n_steps", 8}}},
                     {"guidance", {{"strategy", "none"}}},
                     {"condition", {0, 0}},
                     {"n_samples", 10}};
    std::ofstream(dir / "sample.json") << j.dump();
  }
  CHECK(run_cli("sample --config sample.json --out samples.csv", dir) == 0);
  const std::string samples = slurp(dir / "samples.csv");
  CHECK(samples.rfind("sample,x_0,x_1", 0) == 0);
  int lines = 0;
  for (char c : samples) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 11);
}

TEST_CASE("cli: bad usage exits 2, bad configs exit 1") {
  const fs::path dir = test_dir() / "cli_err";
  fs::create_directories(dir);
  CHECK(run_cli("nonsense", dir) == 2);
  CHECK(run_cli("sweep --no-such-flag", dir) == 2);
  CHECK(run_cli("", dir) == 2);

  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(run_cli("sweep --config bad.json", dir) == 1);
  CHECK(run_cli("train --config does_not_exist.json", dir) == 1);
  const std::string err = slurp(dir / "cli_stderr.txt");
  CHECK(err.find("cfglab:") != std::string::npos);
}

TEST_CASE("bundled configs parse and validate") {
  const fs::path configs = CFGLAB_CONFIGS_DIR;
  const auto train_cfg =
      load_train_run_config((configs / "default_task.json").string());
  CHECK(train_cfg.train.steps == 20000);
  CHECK(train_cfg.task.sigma == 0.35);

  for (const char* name :
       {"baseline_vs_deftext.json", "threshold_sweep.json", "zero_init_sweep.json"}) {
    const auto cfg = load_experiment_config((configs / name).string());
    CHECK(!cfg.guidance.empty());
    CHECK(cfg.model.kind == ModelSource::Kind::checkpoint);
  }

  const auto probe_cfg =
      load_sample_run_config((configs / "probe_default.json").string());
  CHECK(probe_cfg.model.kind == ModelSource::Kind::oracle);
  CHECK(probe_cfg.grid.n_steps == 32);
}

TEST_CASE("probe trace stabilizes the A-factor argmax early") {
  // analog of watching words become audible quickly in the extrapolation
  const TaskSpec spec;
  const OracleModel oracle(spec);
  const TimeGrid grid = make_grid(GridKind::cosine, 32);
  GuidanceSpec g;
  g.strategy = Strategy::standard;
  g.lambda = 2.0;
  const ConditionPair cond{3, 0};

  int stable_from = -1;
  Rng rng(9);
  SampleTrace trace;
  sample(oracle, cond, grid, g, rng, OdeMethod::euler, &trace);
  for (int i = static_cast<int>(trace.extrapolated.size()) - 1; i >= 0; --i) {
    if (bayes_argmax(spec, trace.extrapolated[i], Factor::A) == cond.a) {
      stable_from = i;
    } else {
      break;
    }
  }
  REQUIRE(stable_from >= 0);
  CHECK(stable_from <= static_cast<int>(trace.extrapolated.size()) / 4);
}
