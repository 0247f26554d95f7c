// Serial references against the OpenMP kernels on the same inputs.

#include <map>

#include <benchmark/benchmark.h>

#include "isoquot/family.hpp"
#include "isoquot/spectral.hpp"

using namespace isoquot;

namespace {

const PointCloud& cloud(int n) {
  static std::map<int, PointCloud> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, sample_uniform(Manifold::sphere(3), n, 1)).first;
  return it->second;
}

const JMap& jmap() {
  static const JMap j = generate_family(3, {0.1}, 42).members.front().j;
  return j;
}

template <bool Parallel>
void BM_RoundCandidates(benchmark::State& state) {
  const PointCloud& c = cloud(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto cand = Parallel ? round_candidates(c, 1.0) : serial::round_candidates(c, 1.0);
    benchmark::DoNotOptimize(cand.data());
  }
}

template <bool Parallel>
void BM_GraphAssembly(benchmark::State& state) {
  const PointCloud& c = cloud(static_cast<int>(state.range(0)));
  const SphereDistanceKernel kernel(jmap());
  const auto cand = round_candidates(c, 1.0 * (1.0 + kernel.bound()));
  const DistanceFn d = [&](int i, int j) { return kernel.quotient(c.points[i].data(), c.points[j].data()); };
  for (auto _ : state) {
    const auto g = Parallel ? graph_from_distances(c.size(), 1.0, 8, 5.0, d, &cand)
                            : serial::graph_from_distances(c.size(), 1.0, 8, 5.0, d, &cand);
    benchmark::DoNotOptimize(g.edges.data());
  }
  state.counters["candidates"] = static_cast<double>(cand.size());
}

template <bool Parallel>
void BM_Admissibility(benchmark::State& state) {
  const FormSpec form = FormSpec::sphere(jmap());
  for (auto _ : state) {
    const auto rep = Parallel ? check_admissible(form, static_cast<int>(state.range(0)), 3)
                              : serial::check_admissible(form, static_cast<int>(state.range(0)), 3);
    benchmark::DoNotOptimize(rep.t_invariant);
  }
}

}  // namespace

BENCHMARK(BM_RoundCandidates<false>)->Name("round_candidates/serial")->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RoundCandidates<true>)->Name("round_candidates/openmp")->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GraphAssembly<false>)->Name("graph_assembly/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GraphAssembly<true>)->Name("graph_assembly/openmp")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Admissibility<false>)->Name("admissibility/serial")->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Admissibility<true>)->Name("admissibility/openmp")->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
