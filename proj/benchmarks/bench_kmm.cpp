#include <benchmark/benchmark.h>

#include "roomloc/kmm.hpp"
#include "roomloc/rng.hpp"

using namespace roomloc;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, double mean, Rng& rng) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal(mean, 1.0);
  return x;
}

void bm_project(benchmark::State& state) {
  Rng rng(1);
  const auto n = state.range(0);
  Eigen::VectorXd v = gaussian(n, 1, 1.0, rng).col(0) * 3.0;
  const double nd = static_cast<double>(n);
  for (auto _ : state) benchmark::DoNotOptimize(kmm::project_feasible(v, 1000.0, 0.9 * nd, 1.1 * nd));
}

void bm_estimate(benchmark::State& state) {
  Rng rng(2);
  const auto tr = gaussian(state.range(0), 36, 0.0, rng);
  const auto te = gaussian(2000, 36, 0.3, rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmm::estimate_weights(tr, te));
}

}  // namespace

BENCHMARK(bm_project)->Arg(1000)->Arg(10000);
// A 40 minute walkthrough gives about 960 windows.
BENCHMARK(bm_estimate)->Arg(250)->Arg(960)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
