#include <benchmark/benchmark.h>

#include <array>

#include "csol/csol.hpp"

namespace {

csol::Vec vec(std::initializer_list<double> v) {
  csol::Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

void BM_DividedDiffExp(benchmark::State& state) {
  std::array<double, 4> nodes = {-3.1, 0.2, 0.2001, 5.7};
  for (auto _ : state) benchmark::DoNotOptimize(csol::divided_diff_exp(nodes));
}
BENCHMARK(BM_DividedDiffExp);

void BM_PolytopeMomentsCP2(benchmark::State& state) {
  csol::Polytope p = csol::canonical_polytope({vec({1, 0}), vec({0, 1}), vec({-1, -1})});
  csol::Vec w = vec({0.3, -0.2});
  for (auto _ : state) benchmark::DoNotOptimize(csol::polytope_exp_moments(p, w));
}
BENCHMARK(BM_PolytopeMomentsCP2);

void BM_PolytopeMomentsCube(benchmark::State& state) {
  csol::Polytope p = csol::canonical_polytope(
      {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1}), vec({-1, 0, 0}), vec({0, -1, 0}), vec({0, 0, -1})});
  csol::Vec w = vec({0.3, -0.2, 0.7});
  for (auto _ : state) benchmark::DoNotOptimize(csol::polytope_exp_moments(p, w));
}
BENCHMARK(BM_PolytopeMomentsCube);

}  // namespace
