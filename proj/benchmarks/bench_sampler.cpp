// Microbenchmarks for the hot paths: the Polya-Gamma sampler (called once
// per individual and once per at-risk indicator every sweep) and the full
// Gibbs sweep at a few dataset sizes.
#include <benchmark/benchmark.h>

#include <missmult/gibbs.hpp>
#include <missmult/polya_gamma.hpp>
#include <missmult/rng.hpp>
#include <missmult/simulate.hpp>
#include <missmult/state.hpp>

using namespace missmult;

namespace {

void bm_polya_gamma(benchmark::State& state) {
  Rng rng(42, 1);
  const double c = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(draw_polya_gamma(rng, c));
  }
}
BENCHMARK(bm_polya_gamma)->Arg(0)->Arg(5)->Arg(20)->Arg(80);

void bm_gamma_draw(benchmark::State& state) {
  Rng rng(42, 2);
  const double shape = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.gamma(shape, 1.0));
  }
}
BENCHMARK(bm_gamma_draw)->Arg(5)->Arg(10)->Arg(150);

// One full sweep over a scenario-1-shaped dataset; range(0) = sites,
// range(1) = individuals per visit.
void bm_gibbs_sweep(benchmark::State& state) {
  Scenario1Config cfg;
  cfg.n_sites = static_cast<int>(state.range(0));
  cfg.individuals_per_visit = static_cast<int>(state.range(1));
  cfg.n_categories = 4;
  cfg.at_risk_prob = 0.5;
  cfg.misclass_prob = 0.25;
  cfg.validation_fraction = 0.25;
  SimulatedData sim = gen_scenario1(cfg, 11, 0);

  Hyperparameters hyper = scenario1_prior(cfg);
  RunConfig run;
  run.variant = Variant::MissZIDM;
  const GibbsSampler sampler(sim.data, hyper, run);
  Rng rng(3, 4);
  LatentState s = initial_state(sim.data, sampler.hyper(), run, rng);
  for (auto _ : state) {
    sampler.sweep(s, rng);
  }
  state.SetItemsProcessed(state.iterations() *
                          sim.data.dims.total_individuals());
}
BENCHMARK(bm_gibbs_sweep)->Args({10, 20})->Args({25, 50})->Args({50, 100});

}  // namespace

BENCHMARK_MAIN();
