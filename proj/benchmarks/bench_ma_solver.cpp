#include <benchmark/benchmark.h>

#include "csol/csol.hpp"

namespace {

void BM_ContinuitySolve1D(benchmark::State& state) {
  csol::Polytope p = csol::canonical_polytope({csol::Vec::Constant(1, 1.0), csol::Vec::Constant(1, -1.0)});
  csol::Decomposition d{p, {p}};
  csol::GridSpec spec{1, static_cast<int>(state.range(0)), 12.0};
  for (auto _ : state) benchmark::DoNotOptimize(csol::continuity_solve(d, {csol::Vec::Zero(1)}, spec));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ContinuitySolve1D)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FirstEigenvalue(benchmark::State& state) {
  csol::Polytope p = csol::canonical_polytope({csol::Vec::Constant(1, 1.0), csol::Vec::Constant(1, -1.0)});
  csol::PathState ps = csol::continuity_solve({p, {p}}, {csol::Vec::Zero(1)}, {1, 2048, 12.0});
  csol::SturmLiouvilleProblem sl = csol::make_sturm_liouville(ps.state, 0);
  for (auto _ : state) benchmark::DoNotOptimize(csol::first_eigenvalue(sl));
}
BENCHMARK(BM_FirstEigenvalue)->Unit(benchmark::kMillisecond);

}  // namespace
