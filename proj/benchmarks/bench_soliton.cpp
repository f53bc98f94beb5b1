#include <benchmark/benchmark.h>

#include "csol/csol.hpp"

namespace {

void BM_SolitonBl1CP2(benchmark::State& state) {
  auto v = [](double a, double b) { return csol::Vec{{a, b}}; };
  csol::Polytope bl = csol::canonical_polytope({v(1, 0), v(0, 1), v(-1, -1), v(1, 1)});
  csol::Decomposition d{bl, {bl}};
  for (auto _ : state) benchmark::DoNotOptimize(csol::soliton_field(d));
}
BENCHMARK(BM_SolitonBl1CP2)->Unit(benchmark::kMicrosecond);

}  // namespace
