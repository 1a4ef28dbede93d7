// Serial reference vs OpenMP kernels on the kd x kd inverse.  Thread count
// follows OMP_NUM_THREADS (or SOBA_NUM_THREADS via the CLI).

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "soba/kernels.hpp"

namespace {

using namespace soba;

struct Fixture {
  std::size_t n;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> out;
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  kernels::KronBlocks z;

  Fixture(std::size_t k, std::size_t d) : n(k * d), m(n * n), v(n), out(n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) m[i * n + j] = m[j * n + i] = (i == j ? 10.0 : 0.01 * g(rng));
      v[i] = g(rng);
    }
    for (std::uint32_t j = 0; j < d; ++j) {
      index.push_back(j);
      value.push_back(g(rng));
    }
    z = {0, d, 0.9, FeatureView{index, value}};
  }
};

template <bool Parallel>
void quad_form(benchmark::State& state) {
  Fixture f(9, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const double q = Parallel ? kernels::parallel::quad_form(f.m, f.n, f.z) : kernels::serial::quad_form(f.m, f.n, f.z);
    benchmark::DoNotOptimize(q);
  }
}

template <bool Parallel>
void matvec(benchmark::State& state) {
  Fixture f(9, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::matvec(f.m, f.n, f.v, f.out);
    } else {
      kernels::serial::matvec(f.m, f.n, f.v, f.out);
    }
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n * f.n));
}

template <bool Parallel>
void downdate(benchmark::State& state) {
  Fixture f(9, static_cast<std::size_t>(state.range(0)));
  std::vector<double> u(f.n, 1e-3);
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::symmetric_downdate(f.m, f.n, u, 1e6);
    } else {
      kernels::serial::symmetric_downdate(f.m, f.n, u, 1e6);
    }
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n * f.n / 2));
}

}  // namespace

BENCHMARK(quad_form<false>)->Name("quad_form/serial")->Arg(40)->Arg(400);
BENCHMARK(quad_form<true>)->Name("quad_form/omp")->Arg(40)->Arg(400);
BENCHMARK(matvec<false>)->Name("matvec/serial")->Arg(40)->Arg(400);
BENCHMARK(matvec<true>)->Name("matvec/omp")->Arg(40)->Arg(400);
BENCHMARK(downdate<false>)->Name("downdate/serial")->Arg(40)->Arg(400);
BENCHMARK(downdate<true>)->Name("downdate/omp")->Arg(40)->Arg(400);

BENCHMARK_MAIN();
