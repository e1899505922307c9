#include <benchmark/benchmark.h>

#include "lmmsel/diagnostics.hpp"
#include "lmmsel/sampler.hpp"
#include "lmmsel/simulate.hpp"

using namespace lmmsel;

// Results are consumed through volatile sinks rather than
// benchmark::DoNotOptimize: the "+m,r" asm constraint in the packaged
// benchmark headers miscompiles under gcc for mutable lvalues and writes a
// stale register back through the operand (observed corrupting the chain
// state). A volatile store is immune and cannot be elided either.
namespace {

volatile double g_sink;
volatile long g_sink_l;

struct PaperFixture {
  Dataset data;
  DesignConfig config;
  DesignSet designs;
  HyperParams hp;
  ChainState state;

  PaperFixture() {
    const auto spec = paper_sim_spec(17);
    data = simulate_dataset(spec);
    config = spec.design;
    designs = build_designs(data, config);
    hp = default_hyperparams(designs);
    state = initial_state(designs, hp);
    Rng rng(1);
    for (int t = 0; t < 20; ++t) gibbs_step(state, designs, hp, rng);  // warm state
  }
};

PaperFixture& fixture() {
  static PaperFixture f;
  return f;
}

void BM_gibbs_step(benchmark::State& bm) {
  auto& f = fixture();
  ChainState st = f.state;
  Rng rng(7);
  for (auto _ : bm) {
    gibbs_step(st, f.designs, f.hp, rng);
    g_sink = st.sigma2;
  }
}
BENCHMARK(BM_gibbs_step)->Unit(benchmark::kMillisecond);

void BM_gamma_site(benchmark::State& bm) {
  auto& f = fixture();
  for (auto _ : bm) {
    g_sink = gamma_site_log_odds(0, 0, f.state, f.designs, f.hp);
  }
}
BENCHMARK(BM_gamma_site)->Unit(benchmark::kMicrosecond);

void BM_b_subject_conditional(benchmark::State& bm) {
  auto& f = fixture();
  for (auto _ : bm) {
    g_sink = b_conditional(0, f.state, f.designs).mean(0);
  }
}
BENCHMARK(BM_b_subject_conditional)->Unit(benchmark::kMicrosecond);

void BM_joint_log_density(benchmark::State& bm) {
  auto& f = fixture();
  for (auto _ : bm) {
    g_sink = joint_log_density(f.state, f.designs, f.hp);
  }
}
BENCHMARK(BM_joint_log_density)->Unit(benchmark::kMillisecond);

void BM_build_designs(benchmark::State& bm) {
  auto& f = fixture();
  for (auto _ : bm) {
    g_sink_l = build_designs(f.data, f.config).n_obs;
  }
}
BENCHMARK(BM_build_designs)->Unit(benchmark::kMillisecond);

void BM_simulate_paper(benchmark::State& bm) {
  for (auto _ : bm) {
    g_sink_l = simulate_dataset(paper_sim_spec(3)).n_subjects();
  }
}
BENCHMARK(BM_simulate_paper)->Unit(benchmark::kMillisecond);

void BM_ess_100k(benchmark::State& bm) {
  Rng rng(5);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  for (auto _ : bm) {
    g_sink = ess(x);
  }
}
BENCHMARK(BM_ess_100k)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
