#include "eigentop/eig.hpp"
#include "eigentop/fem.hpp"
#include "eigentop/geometry.hpp"
#include "eigentop/parallel.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace eigentop;
using fem::ElementField;
using fem::Mesh;

namespace {

const Mesh& disk_mesh(int level)
{
  static std::map<int, Mesh> cache;
  auto it = cache.find(level);
  if (it == cache.end())
    it = cache.emplace(level, geometry::build_mesh(geometry::DomainSpec::disk(), 0.04 / level)).first;
  return it->second;
}

ElementField two_phase(const Mesh& m)
{
  std::mt19937 rng(1);
  ElementField f = ElementField::constant(m, 1.0);
  for (double& v : f.values)
    v = rng() % 2 ? 1.1 : 1.0;
  return f;
}

void set_threads(const benchmark::State& state)
{
  parallel::set_thread_count(static_cast<int>(state.range(1)));
}

void BM_StiffnessSerial(benchmark::State& state)
{
  const Mesh& m = disk_mesh(static_cast<int>(state.range(0)));
  const auto rho = two_phase(m);
  for (auto _ : state)
    benchmark::DoNotOptimize(fem::reference::assemble_stiffness(m, rho));
  state.counters["triangles"] = static_cast<double>(m.num_triangles());
}

void BM_StiffnessParallel(benchmark::State& state)
{
  set_threads(state);
  const Mesh& m = disk_mesh(static_cast<int>(state.range(0)));
  const auto rho = two_phase(m);
  const fem::Assembler a(m);
  for (auto _ : state)
    benchmark::DoNotOptimize(a.stiffness(rho));
  state.counters["triangles"] = static_cast<double>(m.num_triangles());
}

void BM_MatvecSerial(benchmark::State& state)
{
  const Mesh& m = disk_mesh(static_cast<int>(state.range(0)));
  const auto K = fem::assemble_stiffness(m, two_phase(m));
  std::vector<double> x(m.num_vertices(), 1.0), y(x.size());
  for (auto _ : state) {
    fem::reference::multiply(K, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * static_cast<int64_t>(K.nonzeros()));
}

void BM_MatvecParallel(benchmark::State& state)
{
  set_threads(state);
  const Mesh& m = disk_mesh(static_cast<int>(state.range(0)));
  const auto K = fem::assemble_stiffness(m, two_phase(m));
  std::vector<double> x(m.num_vertices(), 1.0), y(x.size());
  for (auto _ : state) {
    K.multiply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * static_cast<int64_t>(K.nonzeros()));
}

void BM_Eigensolve(benchmark::State& state)
{
  set_threads(state);
  const Mesh& m = disk_mesh(static_cast<int>(state.range(0)));
  const fem::Assembler a(m);
  const auto sys = fem::apply_dirichlet(a.stiffness(two_phase(m)), a.mass(), m,
                                        fem::BoundaryCondition::uniform(m, fem::BcKind::Dirichlet));
  for (auto _ : state)
    benchmark::DoNotOptimize(eig::solve_smallest(sys.K, sys.M, 3, false));
}

} // namespace

BENCHMARK(BM_StiffnessSerial)->Args({1, 1})->Args({2, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StiffnessParallel)->ArgsProduct({{1, 2}, {1, 2, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatvecSerial)->Args({1, 1})->Args({2, 1})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatvecParallel)->ArgsProduct({{1, 2}, {1, 2, 4}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Eigensolve)->ArgsProduct({{1}, {1, 2}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
