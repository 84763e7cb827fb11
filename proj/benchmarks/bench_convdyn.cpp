#include <benchmark/benchmark.h>

#include "convdyn/analytic.hpp"
#include "convdyn/dynamics.hpp"
#include "convdyn/experiments.hpp"
#include "convdyn/montecarlo.hpp"

using namespace convdyn;

namespace {

struct Setup {
  TeacherParams t;
  StudentParams s;
};

Setup make_setup(int p, int k) {
  ExperimentConfig cfg;
  cfg.p = p;
  const TeacherParams t = make_teacher(cfg, k, 1.0);
  Rng rng = make_rng({7});
  std::normal_distribution<double> normal;
  Vector v(p), a(k);
  for (auto& x : v) x = normal(rng);
  for (auto& x : a) x = normal(rng);
  return {t, StudentParams(v, a)};
}

void BM_PopulationLoss(benchmark::State& state) {
  const Setup x = make_setup(25, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(population_loss(x.s, x.t));
}
BENCHMARK(BM_PopulationLoss)->Arg(20)->Arg(100)->Arg(1000);

void BM_PopulationLossGram(benchmark::State& state) {
  const Setup x = make_setup(25, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(population_loss_gram(x.s, x.t));
}
BENCHMARK(BM_PopulationLossGram)->Arg(20)->Arg(100);

void BM_GradientsInto(benchmark::State& state) {
  const Setup x = make_setup(25, static_cast<int>(state.range(0)));
  Vector gv(25), ga(x.s.k());
  for (auto _ : state) {
    benchmark::DoNotOptimize(population_gradients_into(x.s.v(), x.s.a(), x.t, gv, ga));
  }
}
BENCHMARK(BM_GradientsInto)->Arg(20)->Arg(100)->Arg(1000);

void BM_GdStep(benchmark::State& state) {
  const Setup x = make_setup(25, static_cast<int>(state.range(0)));
  StudentParams s = x.s;
  for (auto _ : state) {
    s = gd_step(s, x.t, 1e-3);
    benchmark::DoNotOptimize(s.a().data());
  }
}
BENCHMARK(BM_GdStep)->Arg(20)->Arg(100);

void BM_EmpiricalGrad(benchmark::State& state) {
  const Setup x = make_setup(8, 10);
  const PatchBatch batch = sample_patches(state.range(0), 10, 8, 1);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_grad(batch, x.s, x.t).a.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmpiricalGrad)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_GridCell(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.p = 6;
  cfg.trials = 20;
  cfg.stride = 100;
  cfg.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(success_grid(cfg, {25}, {4.0}).rows.front().successes);
  }
  state.SetItemsProcessed(state.iterations() * cfg.trials);
}
BENCHMARK(BM_GridCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
