#include "cfglab/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace cfglab {

namespace {

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_grad(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

}  // namespace

Vec time_features(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("time_features: t must lie in [0, 1]");
  }
  Vec f(kTimeFeatureCount);
  f[0] = t;
  for (int k = 1; k <= 4; ++k) {
    f[static_cast<std::size_t>(2 * k - 1)] = std::sin(2.0 * M_PI * k * t);
    f[static_cast<std::size_t>(2 * k)] = std::cos(2.0 * M_PI * k * t);
  }
  return f;
}

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) {
    throw std::invalid_argument("TrainConfig: learning rate must lie in (0, 1)");
  }
  for (double b : {beta1, beta2}) {
    if (!(b >= 0.0 && b < 1.0)) {
      throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    }
  }
}

MlpModel::MlpModel(TaskSpec spec, std::uint64_t init_seed)
    : spec_(std::move(spec)) {
  spec_.validate();
  const int d = spec_.dim;
  in_dim_ = d + kTimeFeatureCount + 2 * kEmbedDim;
  const int ka = spec_.num_classes_a();
  const int kb = spec_.num_classes_b();

  std::size_t offset = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    tensors_.push_back({name, rows, cols, offset});
    offset += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  };
  add("emb_a", ka + 1, kEmbedDim);  // last row is the null (ABSENT) row
  add("emb_b", kb + 1, kEmbedDim);
  add("w1", kHiddenUnits, in_dim_);
  add("b1", kHiddenUnits, 1);
  add("w2", kHiddenUnits, kHiddenUnits);
  add("b2", kHiddenUnits, 1);
  add("w3", d, kHiddenUnits);
  add("b3", d, 1);
  params_.assign(offset, 0.0);

  Rng rng(init_seed);
  for (const auto& info : tensors_) {
    double scale = 0.0;
    if (info.name == "emb_a" || info.name == "emb_b") {
      scale = 1.0;
    } else if (info.name == "w1") {
      scale = std::sqrt(2.0 / in_dim_);
    } else if (info.name == "w2") {
      scale = std::sqrt(2.0 / kHiddenUnits);
    } else if (info.name == "w3") {
      scale = std::sqrt(1.0 / kHiddenUnits);
    }
    double* p = params_.data() + info.offset;
    for (std::size_t i = 0; i < info.size(); ++i) {
      p[i] = scale == 0.0 ? 0.0 : scale * rng.next_gaussian();
    }
  }
}

const TensorInfo& MlpModel::info(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("MlpModel: unknown tensor " + name);
}

std::span<double> MlpModel::tensor_span(const std::string& name) {
  const auto& t = info(name);
  return {params_.data() + t.offset, t.size()};
}

void MlpModel::forward(const Vec& x, double t, const ConditionPair& cond,
                       std::vector<double>& input, std::vector<double>& pre1,
                       std::vector<double>& h1, std::vector<double>& pre2,
                       std::vector<double>& h2, std::vector<double>& out) const {
  const int d = spec_.dim;
  const int ka = spec_.num_classes_a();
  const int kb = spec_.num_classes_b();
  if ((cond.has_a() && (cond.a < 0 || cond.a >= ka)) ||
      (cond.has_b() && (cond.b < 0 || cond.b >= kb))) {
    throw std::invalid_argument("MlpModel: class index out of range");
  }
  const int row_a = cond.has_a() ? cond.a : ka;  // last row = null row
  const int row_b = cond.has_b() ? cond.b : kb;

  input.resize(static_cast<std::size_t>(in_dim_));
  for (int i = 0; i < d; ++i) input[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
  const Vec tf = time_features(t);
  for (int i = 0; i < kTimeFeatureCount; ++i) {
    input[static_cast<std::size_t>(d + i)] = tf[static_cast<std::size_t>(i)];
  }
  const double* ea = params_.data() + tensors_[0].offset +
                     static_cast<std::size_t>(row_a) * kEmbedDim;
  const double* eb = params_.data() + tensors_[1].offset +
                     static_cast<std::size_t>(row_b) * kEmbedDim;
  for (int i = 0; i < kEmbedDim; ++i) {
    input[static_cast<std::size_t>(d + kTimeFeatureCount + i)] = ea[i];
    input[static_cast<std::size_t>(d + kTimeFeatureCount + kEmbedDim + i)] = eb[i];
  }

  // fixed registry order: emb_a, emb_b, w1, b1, w2, b2, w3, b3
  const double* w1 = params_.data() + tensors_[2].offset;
  const double* b1 = params_.data() + tensors_[3].offset;
  const double* w2 = params_.data() + tensors_[4].offset;
  const double* b2 = params_.data() + tensors_[5].offset;
  const double* w3 = params_.data() + tensors_[6].offset;
  const double* b3 = params_.data() + tensors_[7].offset;

  pre1.resize(kHiddenUnits);
  h1.resize(kHiddenUnits);
  for (int j = 0; j < kHiddenUnits; ++j) {
    double s = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * in_dim_;
    for (int i = 0; i < in_dim_; ++i) s += row[i] * input[static_cast<std::size_t>(i)];
    pre1[static_cast<std::size_t>(j)] = s;
    h1[static_cast<std::size_t>(j)] = silu(s);
  }
  pre2.resize(kHiddenUnits);
  h2.resize(kHiddenUnits);
  for (int j = 0; j < kHiddenUnits; ++j) {
    double s = b2[j];
    const double* row = w2 + static_cast<std::size_t>(j) * kHiddenUnits;
    for (int i = 0; i < kHiddenUnits; ++i) s += row[i] * h1[static_cast<std::size_t>(i)];
    pre2[static_cast<std::size_t>(j)] = s;
    h2[static_cast<std::size_t>(j)] = silu(s);
  }
  out.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    double s = b3[k];
    const double* row = w3 + static_cast<std::size_t>(k) * kHiddenUnits;
    for (int j = 0; j < kHiddenUnits; ++j) s += row[j] * h2[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(k)] = s;
  }
}

Vec MlpModel::velocity(const Vec& x, double t, const ConditionPair& cond) const {
  if (static_cast<int>(x.size()) != spec_.dim) {
    throw std::invalid_argument("MlpModel: x has wrong dimension");
  }
  if (!all_finite(x)) {
    throw std::invalid_argument("MlpModel: x must be finite");
  }
  thread_local std::vector<double> input, pre1, h1, pre2, h2, out;
  forward(x, t, cond, input, pre1, h1, pre2, h2, out);
  return Vec(out.begin(), out.end());
}

double fm_loss(const MlpModel& model, const std::vector<Vec>& x1,
               const std::vector<ConditionPair>& cond, Rng& rng,
               std::vector<double>* grad) {
  if (x1.empty()) throw std::invalid_argument("fm_loss: empty batch");
  if (x1.size() != cond.size()) {
    throw std::invalid_argument("fm_loss: batch size mismatch");
  }
  const TaskSpec& spec = model.task();
  const int d = spec.dim;
  const int in_dim = model.input_dim();
  const std::size_t batch = x1.size();

  if (grad != nullptr) grad->assign(model.params().size(), 0.0);

  const auto& tensors = model.tensors();
  const double* w1 = model.params().data() + tensors[2].offset;
  const double* w2 = model.params().data() + tensors[4].offset;
  const double* w3 = model.params().data() + tensors[6].offset;

  thread_local std::vector<double> input, pre1, h1, pre2, h2, out;
  thread_local std::vector<double> dout, dh2, da2, dh1, da1;

  double loss = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    if (!cond[n].has_a() || !cond[n].has_b()) {
      throw std::invalid_argument("fm_loss: conditions must be fully present");
    }
    const double t = rng.next_double();
    Vec x0 = gaussian_sample(rng, d);
    const ConditionPair masked = mask_dropout(cond[n], spec, rng);

    Vec xt(static_cast<std::size_t>(d));
    Vec target(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      target[ii] = x1[n][ii] - x0[ii];
      xt[ii] = x0[ii] + t * target[ii];
    }

    model.forward(xt, t, masked, input, pre1, h1, pre2, h2, out);

    dout.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const std::size_t kk = static_cast<std::size_t>(k);
      const double err = out[kk] - target[kk];
      loss += err * err;
      dout[kk] = 2.0 * err / static_cast<double>(batch);
    }
    if (grad == nullptr) continue;

    double* g_emb_a = grad->data() + tensors[0].offset;
    double* g_emb_b = grad->data() + tensors[1].offset;
    double* g_w1 = grad->data() + tensors[2].offset;
    double* g_b1 = grad->data() + tensors[3].offset;
    double* g_w2 = grad->data() + tensors[4].offset;
    double* g_b2 = grad->data() + tensors[5].offset;
    double* g_w3 = grad->data() + tensors[6].offset;
    double* g_b3 = grad->data() + tensors[7].offset;

    // output layer
    dh2.assign(kHiddenUnits, 0.0);
    for (int k = 0; k < d; ++k) {
      const double dk = dout[static_cast<std::size_t>(k)];
      const double* row = w3 + static_cast<std::size_t>(k) * kHiddenUnits;
      double* grow = g_w3 + static_cast<std::size_t>(k) * kHiddenUnits;
      for (int j = 0; j < kHiddenUnits; ++j) {
        grow[j] += dk * h2[static_cast<std::size_t>(j)];
        dh2[static_cast<std::size_t>(j)] += row[j] * dk;
      }
      g_b3[k] += dk;
    }
    // second hidden layer
    da2.resize(kHiddenUnits);
    for (int j = 0; j < kHiddenUnits; ++j) {
      da2[static_cast<std::size_t>(j)] =
          dh2[static_cast<std::size_t>(j)] * silu_grad(pre2[static_cast<std::size_t>(j)]);
    }
    dh1.assign(kHiddenUnits, 0.0);
    for (int j = 0; j < kHiddenUnits; ++j) {
      const double dj = da2[static_cast<std::size_t>(j)];
      const double* row = w2 + static_cast<std::size_t>(j) * kHiddenUnits;
      double* grow = g_w2 + static_cast<std::size_t>(j) * kHiddenUnits;
      for (int i = 0; i < kHiddenUnits; ++i) {
        grow[i] += dj * h1[static_cast<std::size_t>(i)];
        dh1[static_cast<std::size_t>(i)] += row[i] * dj;
      }
      g_b2[j] += dj;
    }
    // first hidden layer
    da1.resize(kHiddenUnits);
    for (int j = 0; j < kHiddenUnits; ++j) {
      da1[static_cast<std::size_t>(j)] =
          dh1[static_cast<std::size_t>(j)] * silu_grad(pre1[static_cast<std::size_t>(j)]);
    }
    const int emb_off = d + kTimeFeatureCount;
    const int row_a = masked.has_a() ? masked.a : spec.num_classes_a();
    const int row_b = masked.has_b() ? masked.b : spec.num_classes_b();
    double* ga = g_emb_a + static_cast<std::size_t>(row_a) * kEmbedDim;
    double* gb = g_emb_b + static_cast<std::size_t>(row_b) * kEmbedDim;
    for (int j = 0; j < kHiddenUnits; ++j) {
      const double dj = da1[static_cast<std::size_t>(j)];
      const double* row = w1 + static_cast<std::size_t>(j) * in_dim;
      double* grow = g_w1 + static_cast<std::size_t>(j) * in_dim;
      for (int i = 0; i < in_dim; ++i) grow[i] += dj * input[static_cast<std::size_t>(i)];
      g_b1[j] += dj;
      // input gradient, needed only for the embedding slices
      for (int e = 0; e < kEmbedDim; ++e) {
        ga[e] += row[emb_off + e] * dj;
        gb[e] += row[emb_off + kEmbedDim + e] * dj;
      }
    }
  }
  return loss / static_cast<double>(batch);
}

double fm_loss_value(const VelocityModel& model, const TaskSpec& spec,
                     const std::vector<Vec>& x1,
                     const std::vector<ConditionPair>& cond, Rng& rng) {
  if (x1.empty()) throw std::invalid_argument("fm_loss_value: empty batch");
  if (x1.size() != cond.size()) {
    throw std::invalid_argument("fm_loss_value: batch size mismatch");
  }
  const int d = model.dim();
  double loss = 0.0;
  for (std::size_t n = 0; n < x1.size(); ++n) {
    const double t = rng.next_double();
    const Vec x0 = gaussian_sample(rng, d);
    const ConditionPair masked = mask_dropout(cond[n], spec, rng);
    Vec xt(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      xt[static_cast<std::size_t>(i)] =
          x0[static_cast<std::size_t>(i)] +
          t * (x1[n][static_cast<std::size_t>(i)] - x0[static_cast<std::size_t>(i)]);
    }
    const Vec out = model.velocity(xt, t, masked);
    for (int i = 0; i < d; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const double err = out[ii] - (x1[n][ii] - x0[ii]);
      loss += err * err;
    }
  }
  return loss / static_cast<double>(x1.size());
}

TrainResult train(const TaskSpec& spec, const TrainConfig& cfg,
                  std::span<const int> snapshot_steps) {
  spec.validate();
  cfg.validate();

  const Rng root(cfg.seed);
  MlpModel model(spec, root.split(0).seed());
  Rng data_rng = root.split(1);

  TrainResult result{std::move(model), {}, {}};
  if (cfg.steps == 0) return result;

  MlpModel& m = result.model;
  const std::size_t np = m.params().size();
  std::vector<double> grad(np), adam_m(np, 0.0), adam_v(np, 0.0);
  constexpr double kAdamEps = 1e-8;

  const int ka = spec.num_classes_a();
  const int kb = spec.num_classes_b();
  std::vector<Vec> x1(static_cast<std::size_t>(cfg.batch));
  std::vector<ConditionPair> cond(static_cast<std::size_t>(cfg.batch));

  result.curve.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 1; step <= cfg.steps; ++step) {
    for (int i = 0; i < cfg.batch; ++i) {
      const int a = std::min(ka - 1, static_cast<int>(data_rng.next_double() * ka));
      const int b = std::min(kb - 1, static_cast<int>(data_rng.next_double() * kb));
      cond[static_cast<std::size_t>(i)] = {a, b};
      x1[static_cast<std::size_t>(i)] =
          sample_target(spec, cond[static_cast<std::size_t>(i)], data_rng);
    }
    const double loss = fm_loss(m, x1, cond, data_rng, &grad);
    if (!std::isfinite(loss)) {
      throw TrainingFailure(step - 1, "train: loss diverged at step " +
                                          std::to_string(step));
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    double* p = m.params().data();
    for (std::size_t i = 0; i < np; ++i) {
      adam_m[i] = cfg.beta1 * adam_m[i] + (1.0 - cfg.beta1) * grad[i];
      adam_v[i] = cfg.beta2 * adam_v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = adam_m[i] / bc1;
      const double vhat = adam_v[i] / bc2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
    }
    result.curve.emplace_back(step, loss);
    for (int snap : snapshot_steps) {
      if (snap == step) result.snapshots.emplace_back(step, m);
    }
  }
  return result;
}

}  // namespace cfglab
