#include <benchmark/benchmark.h>

#include <numeric>

#include "scim/clustering.hpp"
#include "scim/descriptors.hpp"
#include "scim/evaluation.hpp"
#include "scim/graph.hpp"
#include "scim/rng.hpp"
#include "scim/synthgen.hpp"

namespace {

scim::DescriptorMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  scim::Rng rng(seed);
  scim::DescriptorMatrix m(n, d);
  for (auto& x : m.values) x = static_cast<float>(rng.normal());
  return m;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void BM_PairwiseDistances(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = random_rows(n, 32, 1);
  const auto idx = iota(n);
  for (auto _ : state) benchmark::DoNotOptimize(scim::pairwise_distances(m, idx));
}
BENCHMARK(BM_PairwiseDistances)->Arg(250)->Arg(500)->Arg(1000);

void BM_Hdbscan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dist = scim::pairwise_distances(random_rows(n, 8, 2), iota(n));
  for (auto _ : state) benchmark::DoNotOptimize(scim::hdbscan(dist, {10, 5}));
}
BENCHMARK(BM_Hdbscan)->Arg(250)->Arg(500)->Arg(1000);

void BM_Mcl(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dist = scim::pairwise_distances(random_rows(n, 8, 3), iota(n));
  for (auto _ : state) benchmark::DoNotOptimize(scim::mcl(dist, {}));
}
BENCHMARK(BM_Mcl)->Arg(250)->Arg(500);

void BM_ConstrainedHungarian(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  scim::Rng rng(4);
  std::vector<std::int32_t> labels(20000), clusters(20000);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<std::int32_t>(rng.below(k));
    clusters[i] = static_cast<std::int32_t>(rng.below(k + 3));
  }
  auto table = scim::contingency(labels, clusters);
  for (std::size_t c = 0; c < table.cols() && c < k / 2; ++c) table.supervised[c] = static_cast<std::int32_t>(c);
  for (auto _ : state) benchmark::DoNotOptimize(scim::constrained_hungarian(table));
}
BENCHMARK(BM_ConstrainedHungarian)->Arg(8)->Arg(32)->Arg(64);

void BM_FusedGraph(benchmark::State& state) {
  scim::SynthConfig cfg;
  cfg.frames = 4;
  const auto bundle = scim::generate(cfg);
  std::vector<std::string> mods{"segm", "geom", "imgn"};
  scim::HarmonizationFactors alphas;
  for (const auto& m : mods) alphas.scales.push_back({m, 1.0, 1.0, false});
  const auto weights = scim::EdgeWeights::uniform(mods);
  const auto idx = iota(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scim::build_fused(bundle, idx, weights, alphas));
}
BENCHMARK(BM_FusedGraph)->Arg(500)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
