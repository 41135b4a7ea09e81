// Serial reference vs OpenMP execution of the hot loops.

#include <benchmark/benchmark.h>

#include <memory>

#include "orbitgrad/estimator.hpp"
#include "orbitgrad/sampler.hpp"
#include "orbitgrad/train.hpp"

using namespace orbitgrad;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_BatchSnis(benchmark::State& state) {
  const ForwardKernel kernel(KernelKind::WrappedNormal,
                             std::make_shared<const NoiseSchedule>(make_geometric_schedule(1000, 0.005, 0.5)));
  const auto sampler = GroupSampler::uniform(GroupKind::TorusTranslation, 1, true);
  std::vector<TargetQuery> queries;
  Rng rng(1);
  for (int i = 0; i < 512; ++i) {
    Point x0({rng.uniform(), rng.uniform(), rng.uniform()}, Space::Torus);
    Point xt = sample_forward(kernel, x0, 300, rng);
    queries.push_back({x0, xt, 300, static_cast<std::uint64_t>(i)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(batch_snis_targets(queries, kernel, sampler, 64, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(queries.size()));
}
BENCHMARK(BM_BatchSnis)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_AncestralSample(benchmark::State& state) {
  Rng rng(2);
  const Denoiser net(Architecture::EquiReflect, MlpParams::init(1, 64, rng));
  const auto schedule = make_vp_schedule(1000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ancestral_sample(as_batch_denoiser(net), 1, schedule, 2048, 3, {}, mode(state)));
  }
}
BENCHMARK(BM_AncestralSample)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_VarianceSweep(benchmark::State& state) {
  Rng rng(4);
  const Denoiser net(Architecture::EquiReflect, MlpParams::init(1, 64, rng));
  const Problem problem{Dataset({Point{1.0}}),
                        ForwardKernel(KernelKind::Gaussian, std::make_shared<const NoiseSchedule>(make_vp_schedule(1000))),
                        GroupSampler::uniform(GroupKind::Reflection), reflection_group()};
  const std::vector<int> ts{100, 500, 900};
  std::vector<TargetEstimator> est(2);
  est[0].name = "baseline";
  est[0].variant = Variant::Baseline;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradient_variance_sweep(net, problem, ts, 200, est, 5, mode(state)));
  }
}
BENCHMARK(BM_VarianceSweep)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
