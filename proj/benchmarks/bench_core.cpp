#include <benchmark/benchmark.h>

#include "cfglab/guidance.hpp"
#include "cfglab/mlp.hpp"
#include "cfglab/oracle.hpp"
#include "cfglab/sampler.hpp"

using namespace cfglab;

static void bm_oracle_velocity(benchmark::State& state) {
  const OracleModel oracle{TaskSpec{}};
  const ConditionPair cond =
      state.range(0) == 0 ? ConditionPair{1, 2} : ConditionPair{kAbsent, kAbsent};
  const Vec x{0.3, -0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle.velocity(x, 0.5, cond));
  }
}
BENCHMARK(bm_oracle_velocity)->Arg(0)->Arg(1);

static void bm_mlp_velocity(benchmark::State& state) {
  const MlpModel model{TaskSpec{}, 0};
  const Vec x{0.3, -0.7};
  const ConditionPair cond{1, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.velocity(x, 0.5, cond));
  }
}
BENCHMARK(bm_mlp_velocity);

static void bm_guided_velocity(benchmark::State& state) {
  const OracleModel oracle{TaskSpec{}};
  GuidanceSpec spec;
  spec.strategy = static_cast<Strategy>(state.range(0));
  spec.lambda = 2.0;
  spec.lambda_text = 1.0;
  spec.lambda_spk = 2.0;
  const Vec x{0.3, -0.7};
  const ConditionPair cond{1, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(guided_velocity(oracle, x, 0.5, cond, spec));
  }
}
BENCHMARK(bm_guided_velocity)
    ->Arg(static_cast<int>(Strategy::standard))
    ->Arg(static_cast<int>(Strategy::dual_separated))
    ->Arg(static_cast<int>(Strategy::input_text));

static void bm_sample_trajectory(benchmark::State& state) {
  const OracleModel oracle{TaskSpec{}};
  GuidanceSpec spec;
  spec.strategy = Strategy::standard;
  spec.lambda = 2.0;
  const TimeGrid grid = make_grid(GridKind::cosine, static_cast<int>(state.range(0)));
  const ConditionPair cond{0, 0};
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample(oracle, cond, grid, spec, rng));
  }
}
BENCHMARK(bm_sample_trajectory)->Arg(8)->Arg(32);

static void bm_train_step(benchmark::State& state) {
  const TaskSpec spec;
  MlpModel model{spec, 0};
  Rng rng(3);
  std::vector<Vec> x1;
  std::vector<ConditionPair> cond;
  for (int i = 0; i < 256; ++i) {
    cond.push_back({i % 4, (i / 4) % 4});
    x1.push_back(sample_target(spec, cond.back(), rng));
  }
  std::vector<double> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fm_loss(model, x1, cond, rng, &grad));
  }
}
BENCHMARK(bm_train_step);

BENCHMARK_MAIN();
