#include <benchmark/benchmark.h>

#include "roomloc/crf.hpp"
#include "roomloc/rng.hpp"

using namespace roomloc;

namespace {

struct Chain {
  Eigen::MatrixXd em, log_t;
  std::vector<double> alpha;
};

Chain make_chain(int T, int c) {
  Rng rng(1);
  Chain ch;
  ch.em.resize(T, c);
  ch.log_t.resize(c, c);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < c; ++j) ch.em(t, j) = rng.normal(0.0, 1.0);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) ch.log_t(i, j) = rng.normal(0.0, 1.0);
  for (int t = 0; t < T; ++t) ch.alpha.push_back(rng.uniform());
  return ch;
}

void bm_log_partition(benchmark::State& state) {
  const auto ch = make_chain(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(crf::log_partition({ch.em, ch.log_t, ch.alpha, 0.1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_viterbi(benchmark::State& state) {
  const auto ch = make_chain(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(crf::viterbi(crf::ChainInput{ch.em, ch.log_t, ch.alpha, 0.1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_nll_gradient(benchmark::State& state) {
  const auto ch = make_chain(static_cast<int>(state.range(0)), 5);
  const std::vector<int> y(static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(crf::sequence_nll_gradient({ch.em, ch.log_t, ch.alpha, 0.1}, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// One simulated day is 34559 windows.
BENCHMARK(bm_log_partition)->Arg(720)->Arg(34559);
BENCHMARK(bm_viterbi)->Arg(720)->Arg(34559);
BENCHMARK(bm_nll_gradient)->Arg(720)->Arg(34559);
BENCHMARK_MAIN();
