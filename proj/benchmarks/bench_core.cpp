// Microbenchmarks for the kernels that dominate solve time: sparse
// matrix-vector products, additive Vanka sweeps, and hierarchy setup.

#include <benchmark/benchmark.h>

#include <cmath>

#include "stokesamg/amg.hpp"
#include "stokesamg/fem.hpp"
#include "stokesamg/vanka.hpp"

using namespace stokesamg;

namespace {

BoundaryTag right_neumann(double x, double) {
  return x > 1 - 1e-12 ? BoundaryTag::Neumann : BoundaryTag::DirichletZero;
}

SaddleSystem make_th_system(int n) {
  auto m = structured_tri_mesh(n, n, RectDomain{0, 0, 1, 1}, right_neumann);
  return assemble_taylor_hood(m, zero_problem());
}

std::vector<double> smooth_vector(int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(0.13 * i);
  return v;
}

}  // namespace

static void BM_Spmv(benchmark::State& state) {
  auto sys = make_th_system(static_cast<int>(state.range(0)));
  auto k = assemble_saddle_matrix(sys);
  auto x = smooth_vector(k.ncols);
  for (auto _ : state) {
    auto y = spmv(k, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["nnz"] = static_cast<double>(k.nnz());
  state.SetItemsProcessed(state.iterations() * k.nnz());
}
BENCHMARK(BM_Spmv)->Arg(16)->Arg(32)->Arg(64);

static void BM_VankaApply(benchmark::State& state) {
  auto sys = make_th_system(static_cast<int>(state.range(0)));
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  auto f = factor_patches(k, patches, sys.n_u());
  auto r = smooth_vector(k.nrows);
  for (auto _ : state) {
    auto d = apply_vanka(f, r);
    benchmark::DoNotOptimize(d.data());
  }
  state.counters["patches"] = static_cast<double>(f.patches.size());
}
BENCHMARK(BM_VankaApply)->Arg(16)->Arg(32)->Arg(64);

static void BM_VankaFactor(benchmark::State& state) {
  auto sys = make_th_system(static_cast<int>(state.range(0)));
  auto k = assemble_saddle_matrix(sys);
  auto patches = build_patches(k, sys.n_x, sys.n_y, sys.n_p);
  for (auto _ : state) {
    auto f = factor_patches(k, patches, sys.n_u());
    benchmark::DoNotOptimize(f.patches.data());
  }
}
BENCHMARK(BM_VankaFactor)->Arg(16)->Arg(32);

static void BM_HierarchySetup(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto m = structured_tri_mesh(n, n, RectDomain{0, 0, 1, 1}, right_neumann);
  auto [mf, map] = quadrisect(m);
  auto iso = assemble_iso(m, mf, map, zero_problem());
  AmgConfig cfg;
  for (auto _ : state) {
    auto h = build_monolithic_hierarchy(iso, cfg);
    benchmark::DoNotOptimize(h.levels.data());
  }
}
BENCHMARK(BM_HierarchySetup)->Arg(16)->Arg(32)->Arg(64);

static void BM_ScalarVcycle(benchmark::State& state) {
  auto sys = make_th_system(static_cast<int>(state.range(0)));
  auto a = extract_block(sys.A, 0, sys.n_x, 0, sys.n_x);
  AmgConfig cfg;
  auto h = build_scalar_hierarchy(a, cfg);
  auto b = smooth_vector(a.nrows);
  std::vector<double> x(a.nrows);
  for (auto _ : state) {
    std::fill(x.begin(), x.end(), 0.0);
    scalar_vcycle(h, b, x);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_ScalarVcycle)->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
