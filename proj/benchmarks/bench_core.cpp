#include <benchmark/benchmark.h>

#include <random>

#include "symmcomp/bench.hpp"
#include "symmcomp/rearrange.hpp"
#include "symmcomp/solver.hpp"

using namespace symmcomp;

namespace {

rearrange::WeightedSample random_sample(std::size_t n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<rearrange::Cell> cells(n);
    double total = 0.0;
    for (auto& c : cells) {
        c = {U(rng) - 0.3, 0.01 + U(rng)};
        total += c.measure;
    }
    return rearrange::WeightedSample(cells, total);
}

radial::ProblemParams params(double p, double m) {
    radial::ProblemParams P;
    P.kind = radial::Kind::Convection;
    P.N = 4;
    P.p = p;
    P.m = m;
    P.finalize();
    P.B = 0.5 * radial::convection_threshold(P);
    return P;
}

void BM_DecreasingRearrangement(benchmark::State& state) {
    auto v = random_sample(std::size_t(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(rearrange::decreasing_rearrangement(v));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DecreasingRearrangement)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();

void BM_RadialConvection(benchmark::State& state) {
    auto P = params(2.0, 1.2);
    auto mesh = solver::RadialMesh::for_measure(4, 1.0, std::size_t(state.range(0)), 3.0);
    auto F = solver::FieldSpec::from_params(P);
    auto f = solver::RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2));
    for (auto _ : state) benchmark::DoNotOptimize(solver::solve_radial_convection(P, mesh, F, f));
}
BENCHMARK(BM_RadialConvection)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_RadialConvectionPicard(benchmark::State& state) {
    auto P = params(3.0, 1.2);
    auto mesh = solver::RadialMesh::for_measure(4, 1.0, std::size_t(state.range(0)), 1.0);
    auto F = solver::FieldSpec::from_params(P);
    auto f = solver::RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2));
    for (auto _ : state) benchmark::DoNotOptimize(solver::solve_radial_convection(P, mesh, F, f));
}
BENCHMARK(BM_RadialConvectionPicard)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_BoxConvection(benchmark::State& state) {
    solver::BoxProblem bp;
    bp.A = [](double, double, double) { return std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1}; };
    bp.E = [](double x, double y, double z) { return std::array<double, 3>{x - 0.5, y - 0.5, z - 0.5}; };
    bp.f = [](double, double, double) { return 1.0; };
    for (auto _ : state) benchmark::DoNotOptimize(solver::solve_box_convection_3d(bp, int(state.range(0))));
}
BENCHMARK(BM_BoxConvection)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PropertySuites(benchmark::State& state) {
    bench::PropertyOptions o;
    o.cases = std::size_t(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(bench::run_properties(o));
}
BENCHMARK(BM_PropertySuites)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
