#include "cfglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "format.hpp"

namespace cfglab {

double adherence(const std::vector<Vec>& samples, const TaskSpec& spec,
                 const ConditionPair& cond, Factor factor) {
  if (samples.empty()) throw std::invalid_argument("adherence: empty sample set");
  const int want = factor == Factor::A ? cond.a : cond.b;
  if (want == kAbsent) {
    throw std::invalid_argument("adherence: condition factor must be present");
  }
  long hits = 0;
  for (const auto& x : samples) {
    if (bayes_argmax(spec, x, factor) == want) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

namespace {

double pair_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double mean_within(const std::vector<Vec>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += pair_distance(v[i], v[j]);
  }
  return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

double energy_distance(const std::vector<Vec>& samples_x,
                       const std::vector<Vec>& samples_y) {
  if (samples_x.empty() || samples_y.empty()) {
    throw std::invalid_argument("energy_distance: empty sample set");
  }
  if (samples_x.front().size() != samples_y.front().size()) {
    throw std::invalid_argument("energy_distance: dimension mismatch");
  }
  // Canonical argument order keeps the summation order, and hence the
  // result, exactly symmetric in the arguments.
  const auto* a = &samples_x;
  const auto* b = &samples_y;
  if (std::lexicographical_compare(samples_y.begin(), samples_y.end(),
                                   samples_x.begin(), samples_x.end())) {
    std::swap(a, b);
  }
  double cross = 0.0;
  for (const auto& x : *a) {
    for (const auto& y : *b) cross += pair_distance(x, y);
  }
  cross /= static_cast<double>(a->size()) * static_cast<double>(b->size());
  return 2.0 * cross - mean_within(*a) - mean_within(*b);
}

namespace {

std::string record_key_value(const MetricsRecord& r, const std::string& key) {
  if (key == "strategy") return r.strategy;
  if (key == "lambda") return format_double(r.lambda);
  if (key == "lambda_text") return format_double(r.lambda_text);
  if (key == "lambda_spk") return format_double(r.lambda_spk);
  if (key == "t_threshold") return format_double(r.t_threshold);
  if (key == "tz") return format_double(r.tz);
  if (key == "n_steps") return std::to_string(r.n_steps);
  if (key == "seed") return std::to_string(r.seed);
  if (key == "cond_a") return std::to_string(r.cond_a);
  if (key == "cond_b") return std::to_string(r.cond_b);
  throw std::invalid_argument("sweep_summary: unknown group key " + key);
}

bool numeric_less(const std::string& a, const std::string& b) {
  char* enda = nullptr;
  char* endb = nullptr;
  const double da = std::strtod(a.c_str(), &enda);
  const double db = std::strtod(b.c_str(), &endb);
  const bool na = enda != a.c_str() && *enda == '\0';
  const bool nb = endb != b.c_str() && *endb == '\0';
  if (na && nb) return da < db;
  return a < b;
}

struct Accum {
  std::vector<double> aa, ab, ed;
};

}  // namespace

std::vector<SummaryRow> sweep_summary(const std::vector<MetricsRecord>& records,
                                      const std::vector<std::string>& group_keys) {
  if (group_keys.empty()) {
    throw std::invalid_argument("sweep_summary: group keys must be nonempty");
  }
  std::map<std::vector<std::string>, Accum> groups;
  for (const auto& r : records) {
    if (r.failed) continue;
    std::vector<std::string> key;
    key.reserve(group_keys.size());
    for (const auto& k : group_keys) key.push_back(record_key_value(r, k));
    auto& acc = groups[key];
    acc.aa.push_back(r.adherence_a);
    acc.ab.push_back(r.adherence_b);
    acc.ed.push_back(r.energy_distance);
  }

  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return std::pair<double, double>{m, 0.0};
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair<double, double>{m, std::sqrt(s2 / static_cast<double>(v.size() - 1))};
  };

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    SummaryRow row;
    row.group = key;
    std::tie(row.mean_adherence_a, row.sd_adherence_a) = mean_sd(acc.aa);
    std::tie(row.mean_adherence_b, row.sd_adherence_b) = mean_sd(acc.ab);
    std::tie(row.mean_energy_distance, row.sd_energy_distance) = mean_sd(acc.ed);
    row.count = static_cast<int>(acc.aa.size());
    rows.push_back(std::move(row));
  }

  // Order by lambda first when grouped on it, then the remaining keys.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < group_keys.size(); ++i) {
    if (group_keys[i] == "lambda") order.push_back(i);
  }
  for (std::size_t i = 0; i < group_keys.size(); ++i) {
    if (group_keys[i] != "lambda") order.push_back(i);
  }
  std::sort(rows.begin(), rows.end(), [&](const SummaryRow& a, const SummaryRow& b) {
    for (std::size_t i : order) {
      if (a.group[i] != b.group[i]) return numeric_less(a.group[i], b.group[i]);
    }
    return false;
  });
  return rows;
}

std::string metrics_csv_header() {
  return "strategy,lambda,lambda_text,lambda_spk,t_threshold,n_steps,seed,"
         "adherence_a,adherence_b,energy_distance,n_samples,eval_count,"
         "cond_a,cond_b,tz,status";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.strategy << ',' << format_double(r.lambda) << ','
     << format_double(r.lambda_text) << ',' << format_double(r.lambda_spk) << ','
     << format_double(r.t_threshold) << ',' << r.n_steps << ',' << r.seed << ','
     << format_double(r.adherence_a) << ',' << format_double(r.adherence_b) << ','
     << format_double(r.energy_distance) << ',' << r.n_samples << ','
     << r.eval_count << ',' << r.cond_a << ',' << r.cond_b << ','
     << format_double(r.tz) << ',' << (r.failed ? "failed" : "ok");
  return os.str();
}

MetricsRecord metrics_csv_parse_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  if (fields.size() != 16) {
    throw std::invalid_argument("metrics_csv_parse_row: expected 16 fields, got " +
                                std::to_string(fields.size()));
  }
  MetricsRecord r;
  r.strategy = fields[0];
  r.lambda = std::stod(fields[1]);
  r.lambda_text = std::stod(fields[2]);
  r.lambda_spk = std::stod(fields[3]);
  r.t_threshold = std::stod(fields[4]);
  r.n_steps = std::stoi(fields[5]);
  r.seed = std::stoull(fields[6]);
  r.adherence_a = std::stod(fields[7]);
  r.adherence_b = std::stod(fields[8]);
  r.energy_distance = std::stod(fields[9]);
  r.n_samples = std::stol(fields[10]);
  r.eval_count = std::stol(fields[11]);
  r.cond_a = std::stoi(fields[12]);
  r.cond_b = std::stoi(fields[13]);
  r.tz = std::stod(fields[14]);
  r.failed = fields[15] == "failed";
  return r;
}

}  // namespace cfglab
