// Serial reference vs OpenMP kernel for each parallel hot path. Set
// KOOPMAN_THREADS (or OMP_NUM_THREADS) to choose the team size.

#include <benchmark/benchmark.h>

#include "koopman/conditions.hpp"
#include "koopman/flow.hpp"
#include "koopman/linearize.hpp"
#include "koopman/parallel.hpp"
#include "koopman/sampling.hpp"
#include "koopman/spectral.hpp"
#include "worked_example.hpp"

using namespace koopman;

namespace {

const auto kSystem = cli::coupled_quadratic_system(2.0);

std::vector<Vec> scan_grid() { return make_grid(Vec::Constant(1, -2.2), Vec::Constant(1, 0.95), Vec::Constant(1, 0.01)); }

Mat test_matrix(int n) {
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = -1.0 - 0.37 * i;
    if (i + 1 < n) a(i, i + 1) = 0.5;
  }
  return a;
}

template <bool Parallel>
void BM_ResonanceScan(benchmark::State& state) {
  const auto grid = scan_grid();
  ScanOptions so;
  so.cell_half_width = Vec::Constant(1, 0.005);
  for (auto _ : state) {
    auto r = Parallel ? scan_parameter_resonances(kSystem, grid, 5, 1e-6, so)
                      : scan_parameter_resonances_serial(kSystem, grid, 5, 1e-6, so);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_Contour(benchmark::State& state) {
  const Mat a = test_matrix(static_cast<int>(state.range(0)));
  const auto c = ContourSpec::around(sorted_eigenvalues(a), 0, 64);
  for (auto _ : state) {
    auto p = Parallel ? eigenprojection_contour(a, c) : eigenprojection_contour_serial(a, c);
    benchmark::DoNotOptimize(p);
  }
}

template <bool Parallel>
void BM_Invariance(benchmark::State& state) {
  const auto f = materialize(kSystem, Vec::Constant(1, -0.5));
  for (auto _ : state) {
    auto r = Parallel ? check_invariance(f, kSystem.domain, 64, 5.0) : check_invariance_serial(f, kSystem.domain, 64, 5.0);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_Verify(benchmark::State& state) {
  const auto psi = linearize_parameterized(kSystem, Vec::Constant(1, 0.3), 5);
  const auto points = low_discrepancy_points(kSystem.domain, 32);
  VerifyOptions vo;
  vo.horizon = 2.0;
  vo.logged_times = 10;
  for (auto _ : state) {
    auto d = Parallel ? verify_conjugacy(psi, points, vo) : verify_conjugacy_serial(psi, points, vo);
    benchmark::DoNotOptimize(d);
  }
}

}  // namespace

BENCHMARK(BM_ResonanceScan<false>)->Name("resonance_scan/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResonanceScan<true>)->Name("resonance_scan/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Contour<false>)->Name("contour/serial")->Arg(6)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Contour<true>)->Name("contour/parallel")->Arg(6)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Invariance<false>)->Name("invariance/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Invariance<true>)->Name("invariance/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Verify<false>)->Name("verify/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Verify<true>)->Name("verify/parallel")->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
