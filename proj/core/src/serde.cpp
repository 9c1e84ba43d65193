#include "cfglab/serde.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cfglab {

using nlohmann::json;

namespace {

constexpr char kB64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const unsigned v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += kB64Chars[(v >> 6) & 63];
    out += kB64Chars[v & 63];
  }
  const std::size_t rem = data.size() - i;
  if (rem == 1) {
    const unsigned v = data[i] << 16;
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += "==";
  } else if (rem == 2) {
    const unsigned v = (data[i] << 16) | (data[i + 1] << 8);
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += kB64Chars[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  unsigned buf = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = b64_value(c);
    if (v < 0) throw ConfigError("invalid base64 payload");
    buf = (buf << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buf >> bits) & 0xFF));
    }
  }
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* what) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
  }
}

json task_to_j(const TaskSpec& s) {
  return json{{"dim", s.dim},          {"centers_a", s.centers_a},
              {"centers_b", s.centers_b}, {"sigma", s.sigma},
              {"drop_a", s.drop_a},    {"drop_b", s.drop_b}};
}

TaskSpec task_from_j(const json& j) {
  check_keys(j, {"dim", "centers_a", "centers_b", "sigma", "drop_a", "drop_b"},
             "task");
  TaskSpec s;
  s.dim = j.value("dim", s.dim);
  s.centers_a = j.value("centers_a", s.centers_a);
  s.centers_b = j.value("centers_b", s.centers_b);
  s.sigma = j.value("sigma", s.sigma);
  s.drop_a = j.value("drop_a", s.drop_a);
  s.drop_b = j.value("drop_b", s.drop_b);
  s.validate();
  return s;
}

json schedule_to_j(const WeightSchedule& s) {
  switch (s.kind) {
    case WeightScheduleKind::constant:
      return json{{"kind", "constant"}};
    case WeightScheduleKind::linear:
      return json{{"kind", "linear"}, {"w0", s.w0}, {"w1", s.w1}};
    case WeightScheduleKind::linear_clamped:
      return json{{"kind", "linear_clamped"}, {"w0", s.w0}, {"w1", s.w1},
                  {"w_min", s.w_min}};
  }
  return json{{"kind", "constant"}};
}

WeightSchedule schedule_from_j(const json& j) {
  check_keys(j, {"kind", "w0", "w1", "w_min"}, "schedule");
  WeightSchedule s;
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") {
    s.kind = WeightScheduleKind::constant;
  } else if (kind == "linear") {
    s.kind = WeightScheduleKind::linear;
  } else if (kind == "linear_clamped") {
    s.kind = WeightScheduleKind::linear_clamped;
  } else {
    throw ConfigError("schedule: unknown kind '" + kind + "'");
  }
  s.w0 = j.value("w0", 0.0);
  s.w1 = j.value("w1", 0.0);
  s.w_min = j.value("w_min", 0.0);
  return s;
}

json guidance_to_j(const GuidanceSpec& g) {
  return json{{"strategy", to_string(g.strategy)},
              {"lambda", g.lambda},
              {"lambda_text", g.lambda_text},
              {"lambda_spk", g.lambda_spk},
              {"t_threshold", g.t_threshold},
              {"schedule", schedule_to_j(g.schedule)},
              {"tz", g.tz}};
}

GuidanceSpec guidance_from_j(const json& j) {
  check_keys(j,
             {"strategy", "lambda", "lambda_text", "lambda_spk", "t_threshold",
              "schedule", "tz"},
             "guidance");
  GuidanceSpec g;
  g.strategy = strategy_from_string(j.value("strategy", "standard"));
  g.lambda = j.value("lambda", 0.0);
  g.lambda_text = j.value("lambda_text", 0.0);
  g.lambda_spk = j.value("lambda_spk", 0.0);
  g.t_threshold = j.value("t_threshold", 0.08);
  if (j.contains("schedule")) g.schedule = schedule_from_j(j.at("schedule"));
  g.tz = j.value("tz", 0.0);
  g.validate();
  return g;
}

json grid_to_j(const GridConfig& g) {
  return json{{"kind", to_string(g.kind)}, {"n_steps", g.n_steps}, {"tz", g.tz}};
}

GridConfig grid_from_j(const json& j) {
  check_keys(j, {"kind", "n_steps", "tz"}, "grid");
  GridConfig g;
  g.kind = grid_kind_from_string(j.value("kind", "cosine"));
  g.n_steps = j.value("n_steps", 32);
  g.tz = j.value("tz", 0.0);
  return g;
}

json model_to_j(const ModelSource& m) {
  if (m.kind == ModelSource::Kind::oracle) return json{{"kind", "oracle"}};
  return json{{"kind", "checkpoint"}, {"path", m.path}};
}

ModelSource model_from_j(const json& j) {
  check_keys(j, {"kind", "path"}, "model");
  ModelSource m;
  const std::string kind = j.value("kind", "oracle");
  if (kind == "oracle") {
    m.kind = ModelSource::Kind::oracle;
  } else if (kind == "checkpoint") {
    m.kind = ModelSource::Kind::checkpoint;
    m.path = j.value("path", "");
    if (m.path.empty()) throw ConfigError("model: checkpoint requires a path");
  } else {
    throw ConfigError("model: unknown kind '" + kind + "'");
  }
  return m;
}

TrainConfig train_from_j(const json& j) {
  check_keys(j, {"steps", "batch", "learning_rate", "beta1", "beta2", "seed"},
             "train");
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.batch = j.value("batch", c.batch);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void check_format_version(const json& j, const char* what) {
  const int v = j.value("format_version", 1);
  if (v != 1) {
    throw ConfigError(std::string(what) + ": unsupported format_version " +
                      std::to_string(v));
  }
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(std::string(what) + ": invalid JSON");
  return j;
}

}  // namespace

std::string task_spec_to_json(const TaskSpec& spec) { return task_to_j(spec).dump(2); }

TaskSpec task_spec_from_json(const std::string& text) {
  return task_from_j(parse(text, "task"));
}

std::string guidance_spec_to_json(const GuidanceSpec& spec) {
  return guidance_to_j(spec).dump(2);
}

GuidanceSpec guidance_spec_from_json(const std::string& text) {
  return guidance_from_j(parse(text, "guidance"));
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j{{"format_version", cfg.format_version},
         {"task", task_to_j(cfg.task)},
         {"model", model_to_j(cfg.model)},
         {"grid", grid_to_j(cfg.grid)},
         {"method", to_string(cfg.method)},
         {"lambdas", cfg.lambdas},
         {"seeds", cfg.seeds},
         {"samples_per_cell", cfg.samples_per_cell},
         {"jobs", cfg.jobs}};
  json gs = json::array();
  for (const auto& g : cfg.guidance) gs.push_back(guidance_to_j(g));
  j["guidance"] = gs;
  if (!cfg.conditions.empty()) {
    json cs = json::array();
    for (const auto& c : cfg.conditions) cs.push_back(json::array({c.a, c.b}));
    j["conditions"] = cs;
  } else {
    j["conditions"] = "all";
  }
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = parse(text, "experiment config");
  check_keys(j,
             {"format_version", "task", "model", "grid", "method", "guidance",
              "lambdas", "seeds", "samples_per_cell", "conditions", "jobs", "out"},
             "experiment config");
  check_format_version(j, "experiment config");
  ExperimentConfig cfg;
  if (j.contains("task")) cfg.task = task_from_j(j.at("task"));
  if (j.contains("model")) cfg.model = model_from_j(j.at("model"));
  if (j.contains("grid")) cfg.grid = grid_from_j(j.at("grid"));
  cfg.method = ode_method_from_string(j.value("method", "euler"));
  if (j.contains("guidance")) {
    for (const auto& g : j.at("guidance")) cfg.guidance.push_back(guidance_from_j(g));
  }
  cfg.lambdas = j.value("lambdas", cfg.lambdas);
  cfg.seeds = j.value("seeds", cfg.seeds);
  cfg.samples_per_cell = j.value("samples_per_cell", cfg.samples_per_cell);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.out = j.value("out", cfg.out);
  if (j.contains("conditions") && j.at("conditions").is_array()) {
    for (const auto& c : j.at("conditions")) {
      if (!c.is_array() || c.size() != 2) {
        throw ConfigError("experiment config: conditions entries must be [a, b]");
      }
      cfg.conditions.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_file(path));
}

TrainRunConfig train_run_config_from_json(const std::string& text) {
  const json j = parse(text, "train config");
  check_keys(j, {"format_version", "task", "train"}, "train config");
  check_format_version(j, "train config");
  TrainRunConfig cfg;
  if (j.contains("task")) cfg.task = task_from_j(j.at("task"));
  if (j.contains("train")) cfg.train = train_from_j(j.at("train"));
  return cfg;
}

TrainRunConfig load_train_run_config(const std::string& path) {
  return train_run_config_from_json(read_file(path));
}

SampleRunConfig sample_run_config_from_json(const std::string& text) {
  const json j = parse(text, "sample config");
  check_keys(j,
             {"format_version", "task", "model", "grid", "method", "guidance",
              "condition", "n_samples"},
             "sample config");
  check_format_version(j, "sample config");
  SampleRunConfig cfg;
  if (j.contains("task")) cfg.task = task_from_j(j.at("task"));
  if (j.contains("model")) cfg.model = model_from_j(j.at("model"));
  if (j.contains("grid")) cfg.grid = grid_from_j(j.at("grid"));
  cfg.method = ode_method_from_string(j.value("method", "euler"));
  if (j.contains("guidance")) cfg.guidance = guidance_from_j(j.at("guidance"));
  if (j.contains("condition")) {
    const auto& c = j.at("condition");
    if (!c.is_array() || c.size() != 2) {
      throw ConfigError("sample config: condition must be [a, b]");
    }
    cfg.condition = {c.at(0).get<int>(), c.at(1).get<int>()};
  }
  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  if (cfg.n_samples < 1) throw ConfigError("sample config: n_samples must be >= 1");
  return cfg;
}

SampleRunConfig load_sample_run_config(const std::string& path) {
  return sample_run_config_from_json(read_file(path));
}

std::string checkpoint_to_json(const MlpModel& model, std::uint64_t seed,
                               int steps) {
  json j{{"format_version", 1},
         {"kind", "cfglab_checkpoint"},
         {"task", task_to_j(model.task())},
         {"arch",
          {{"dim", model.dim()},
           {"input_dim", model.input_dim()},
           {"hidden", kHiddenUnits},
           {"embed_dim", kEmbedDim},
           {"time_features", kTimeFeatureCount},
           {"classes_a", model.task().num_classes_a()},
           {"classes_b", model.task().num_classes_b()}}},
         {"seed", seed},
         {"steps", steps}};
  json tensors = json::array();
  for (const auto& t : model.tensors()) {
    std::vector<unsigned char> bytes;
    bytes.reserve(t.size() * 4);
    const double* p = model.params().data() + t.offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(p[i]));
      bytes.push_back(static_cast<unsigned char>(u & 0xFF));
      bytes.push_back(static_cast<unsigned char>((u >> 8) & 0xFF));
      bytes.push_back(static_cast<unsigned char>((u >> 16) & 0xFF));
      bytes.push_back(static_cast<unsigned char>((u >> 24) & 0xFF));
    }
    tensors.push_back(json{{"name", t.name},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"data", base64_encode(bytes)}});
  }
  j["tensors"] = tensors;
  return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = parse(text, "checkpoint");
  check_format_version(j, "checkpoint");
  if (j.value("kind", "") != "cfglab_checkpoint") {
    throw ConfigError("checkpoint: missing or wrong kind marker");
  }
  const TaskSpec task = task_from_j(j.at("task"));
  Checkpoint ckpt{MlpModel(task, 0), j.value("seed", std::uint64_t{0}),
                  j.value("steps", 0)};

  const json& arch = j.at("arch");
  if (arch.value("dim", -1) != ckpt.model.dim() ||
      arch.value("input_dim", -1) != ckpt.model.input_dim() ||
      arch.value("hidden", -1) != kHiddenUnits ||
      arch.value("embed_dim", -1) != kEmbedDim ||
      arch.value("time_features", -1) != kTimeFeatureCount ||
      arch.value("classes_a", -1) != task.num_classes_a() ||
      arch.value("classes_b", -1) != task.num_classes_b()) {
    throw ConfigError("checkpoint: architecture does not match the task spec");
  }

  const json& tensors = j.at("tensors");
  if (tensors.size() != ckpt.model.tensors().size()) {
    throw ConfigError("checkpoint: wrong tensor count");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const json& tj = tensors.at(i);
    const TensorInfo& info = ckpt.model.tensors()[i];
    if (tj.value("name", "") != info.name || tj.value("rows", -1) != info.rows ||
        tj.value("cols", -1) != info.cols) {
      throw ConfigError("checkpoint: tensor '" + info.name +
                        "' does not match the declared architecture");
    }
    const auto bytes = base64_decode(tj.at("data").get<std::string>());
    if (bytes.size() != info.size() * 4) {
      throw ConfigError("checkpoint: tensor '" + info.name + "' has wrong size");
    }
    double* p = ckpt.model.params().data() + info.offset;
    for (std::size_t k = 0; k < info.size(); ++k) {
      const std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * k]) |
                              (static_cast<std::uint32_t>(bytes[4 * k + 1]) << 8) |
                              (static_cast<std::uint32_t>(bytes[4 * k + 2]) << 16) |
                              (static_cast<std::uint32_t>(bytes[4 * k + 3]) << 24);
      p[k] = static_cast<double>(std::bit_cast<float>(u));
    }
  }
  return ckpt;
}

void save_checkpoint(const MlpModel& model, std::uint64_t seed, int steps,
                     const std::string& path) {
  write_file(path, checkpoint_to_json(model, seed, steps));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace cfglab
