#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "symmcomp/errors.hpp"
#include "symmcomp/lorentz.hpp"
#include "symmcomp/rearrange.hpp"
#include "symmcomp/solver.hpp"

using namespace symmcomp;
using namespace symmcomp::solver;
using radial::Kind;

namespace {

ProblemParams params(Kind kind, int N, double p, double m, double measure = 1.0) {
    ProblemParams P;
    P.kind = kind;
    P.N = N;
    P.p = p;
    P.m = m;
    P.domain_measure = measure;
    P.finalize();
    return P;
}

double threshold(const ProblemParams& P) {
    return P.kind == Kind::Convection ? radial::convection_threshold(P) : radial::drift_threshold(P);
}

double max_error(const SolveResult& s, const std::function<double(double)>& exact) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) e = std::max(e, std::fabs(s.u[i] - exact(s.r[i])));
    return e;
}

double fit_u(const SolveResult& s, double lo, double hi) {
    auto prof = rearrange::decreasing_rearrangement(s.solution_sample());
    std::vector<double> b, v;
    for (double e = std::log10(lo); e <= std::log10(hi) + 1e-9; e += 0.1) {
        b.push_back(std::pow(10.0, e));
        v.push_back(prof(b.back()));
    }
    return lorentz::fit_exponent(rearrange::StepProfile(b, v, prof.total_measure()), lo, hi).slope;
}

double fit_grad_avg(const SolveResult& s, double lo, double hi) {
    auto prof = rearrange::decreasing_rearrangement(s.gradient_sample());
    std::vector<double> b, v;
    for (double e = std::log10(lo); e <= std::log10(hi) + 1e-9; e += 0.1) {
        b.push_back(std::pow(10.0, e));
        v.push_back(prof.average(b.back()));
    }
    return lorentz::fit_exponent(rearrange::StepProfile(b, v, prof.total_measure()), lo, hi).slope;
}

BoxProblem box(std::function<std::array<double, 3>(double, double, double)> E,
               std::function<double(double, double, double)> f) {
    BoxProblem bp;
    bp.A = [](double, double, double) { return std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1}; };
    bp.E = std::move(E);
    bp.f = std::move(f);
    return bp;
}

}  // namespace

TEST_CASE("radial mesh invariants") {
    for (double g : {1.0, 2.0, 3.0}) {
        RadialMesh M(4, 1.3, 1000, g);
        CHECK(M.nodes().front() > 0.0);
        CHECK(M.nodes().back() == 1.3);
        for (std::size_t i = 1; i < M.size(); ++i) CHECK(M.nodes()[i] > M.nodes()[i - 1]);
        double sum = 0.0;
        for (double m : M.measures()) sum += m;
        CHECK(sum == doctest::Approx(M.total_measure()).epsilon(1e-12));
    }
    auto M = RadialMesh::for_measure(6, 2.5, 64, 2.0);
    CHECK(M.total_measure() == doctest::Approx(2.5).epsilon(1e-13));
    CHECK_THROWS_AS(RadialMesh(3, 1.0, 15, 1.0), DomainError);
    CHECK_THROWS_AS(RadialMesh(3, 1.0, 64, 0.5), DomainError);
    CHECK_THROWS_AS(RadialMesh(3, -1.0, 64, 1.0), DomainError);
}

TEST_CASE("singular field saturates the Marcinkiewicz constant") {
    for (Kind kind : {Kind::Convection, Kind::Drift}) {
        auto P = params(kind, 4, 2.0, kind == Kind::Convection ? 1.2 : 1.5);
        P.B = 0.7;
        auto F = FieldSpec::from_params(P);
        RadialMesh M(4, 1.0, 200, 3.0);
        for (double r : M.nodes())
            CHECK(std::fabs(F.singular(r, 4, M.omega())) * std::pow(M.omega() * std::pow(r, 4), F.exponent / 4.0) ==
                  doctest::Approx(0.7).epsilon(1e-13));
        CHECK(F.singular(0.5, 4, M.omega()) < 0.0);
    }
}

TEST_CASE("radial Poisson solutions") {
    for (Kind kind : {Kind::Convection, Kind::Drift}) {
        auto P = params(kind, 3, 2.0, 1.2, rearrange::unit_ball_volume(3));
        auto F = FieldSpec::from_params(P);
        auto f = RadialSource::from_datum(radial::Datum::constant(P.domain_measure, 1.0));
        auto exact = [](double r) { return (1.0 - r * r) / 6.0; };
        std::vector<double> errs;
        for (int n : {64, 128}) {
            RadialMesh M(3, 1.0, n, 1.0);
            auto s = kind == Kind::Convection ? solve_radial_convection(P, M, F, f) : solve_radial_drift(P, M, F, f);
            CHECK(s.u.back() == 0.0);
            CHECK(s.iterations == 1);
            errs.push_back(max_error(s, exact));
            CHECK(weak_residual(s, P, F, f).max_abs <= 1e-10);
        }
        CHECK(errs[0] < 2e-5);
        CHECK(errs[0] / errs[1] >= 3.5);
    }
}

TEST_CASE("manufactured convection solution, p = 2") {
    const int N = 4;
    auto P = params(Kind::Convection, N, 2.0, 1.2);
    P.B = 0.5 * threshold(P);
    auto F = FieldSpec::from_params(P);
    const double c = P.B * std::pow(P.omega_N, -1.0 / N);
    // u* = 1 - r^2 and E_r = -c/r
    auto fn = [=](double r) { return 2.0 * N + c * N - c * (N - 2) / (r * r); };
    auto prim = [=](double r) { return (2.0 * N + c * N) * std::pow(r, N) / N - c * std::pow(r, N - 2); };
    auto f = RadialSource::from_function(fn, prim);
    std::vector<double> errs;
    for (int n : {64, 128, 256}) {
        RadialMesh M(N, 1.0, n, 1.0);
        auto s = solve_radial_convection(P, M, F, f);
        errs.push_back(max_error(s, [](double r) { return 1.0 - r * r; }));
        CHECK(s.weak_residual <= 1e-8);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
}

TEST_CASE("manufactured drift solution, p = 2") {
    const int N = 6;
    auto P = params(Kind::Drift, N, 2.0, 2.0);
    P.B = 0.5 * threshold(P);
    auto F = FieldSpec::from_params(P);
    const double c = P.B * std::pow(P.omega_N, -1.0 / N);
    // w* = (1 - r^2)^2 and E_r = -c/r
    auto fn = [=](double r) { return 4.0 * N - (4.0 * N + 8.0) * r * r - 4.0 * c * (1.0 - r * r); };
    auto prim = [=](double r) {
        return 4.0 * std::pow(r, N) - (4.0 * N + 8.0) * std::pow(r, N + 2) / (N + 2) -
               4.0 * c * (std::pow(r, N) / N - std::pow(r, N + 2) / (N + 2));
    };
    auto f = RadialSource::from_function(fn, prim);
    std::vector<double> errs;
    for (int n : {64, 128, 256}) {
        RadialMesh M(N, 1.0, n, 1.0);
        auto s = solve_radial_drift(P, M, F, f);
        errs.push_back(max_error(s, [](double r) { return (1.0 - r * r) * (1.0 - r * r); }));
        CHECK(s.weak_residual <= 1e-8);
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
}

TEST_CASE("manufactured convection solution, p = 3, bounded field") {
    // With E ~ r^{-2} and a smooth u* the p = 3 diffusion degenerates at the
    // origin and convection dominates the first cells; smooth instances use a
    // bounded field instead.
    const int N = 4;
    auto P = params(Kind::Convection, N, 3.0, 1.2);
    P.Fbound = 0.5;
    auto F = FieldSpec::from_params(P, Orientation::Inward, [](double r) { return -0.5 * r; });
    auto prim = [=](double r) {
        const double w = 1.0 - r * r;
        return 4.0 * std::pow(r, N + 1) - 0.5 * std::pow(r, N) * w * w;
    };
    auto fn = [=](double r) {
        const double w = 1.0 - r * r;
        return 4.0 * (N + 1) * r - 0.5 * (N * w * w - 4.0 * r * r * w);
    };
    auto f = RadialSource::from_function(fn, prim);
    std::vector<double> errs;
    for (int n : {64, 128, 256}) {
        RadialMesh M(N, 1.0, n, 1.0);
        auto s = solve_radial_convection(P, M, F, f);
        CHECK(s.iterations > 1);
        CHECK(s.final_update <= 1e-10);
        CHECK(s.weak_residual <= 1e-8);
        errs.push_back(max_error(s, [](double r) { return 1.0 - r * r; }));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
}

TEST_CASE("manufactured drift solution, p = 3") {
    const int N = 4;
    auto P = params(Kind::Drift, N, 3.0, 1.5);
    P.B = 0.5 * threshold(P);
    auto F = FieldSpec::from_params(P);
    const double c = P.B * std::pow(P.omega_N, -1.0 / N);
    // w* = (1 - r^2)^2, |w'| w' = -16 r^2 (1 - r^2)^2
    auto prim = [=](double r) {
        const double w = 1.0 - r * r;
        return 16.0 * std::pow(r, N + 1) * w * w -
               16.0 * c * (std::pow(r, N + 1) / (N + 1) - 2.0 * std::pow(r, N + 3) / (N + 3) + std::pow(r, N + 5) / (N + 5));
    };
    auto fn = [=](double r) {
        const double w = 1.0 - r * r;
        return 16.0 * ((N + 1) * r * w * w - 4.0 * r * r * r * w) - 16.0 * c * r * w * w;
    };
    auto f = RadialSource::from_function(fn, prim);
    std::vector<double> errs;
    for (int n : {64, 128, 256}) {
        RadialMesh M(N, 1.0, n, 1.0);
        auto s = solve_radial_drift(P, M, F, f);
        CHECK(s.weak_residual <= 1e-8);
        errs.push_back(max_error(s, [](double r) { return (1.0 - r * r) * (1.0 - r * r); }));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
    CHECK(std::log2(errs[1] / errs[2]) >= 1.8);
}

TEST_CASE("threshold and iteration errors") {
    auto P = params(Kind::Convection, 4, 2.0, 1.2);
    auto f = RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2));
    auto M = RadialMesh::for_measure(4, 1.0, 256, 2.0);
    P.B = 1.2 * threshold(P);
    auto F = FieldSpec::from_params(P);
    CHECK_THROWS_AS(solve_radial_convection(P, M, F, f), ThresholdError);
    SolverOptions sharp;
    sharp.sharpness_mode = true;
    CHECK_NOTHROW(solve_radial_convection(P, M, F, f, sharp));

    auto P3 = params(Kind::Convection, 4, 3.0, 1.2);
    P3.B = 1.2 * threshold(P3);
    CHECK_THROWS_AS(solve_radial_convection(P3, M, FieldSpec::from_params(P3), f, sharp), ThresholdError);

    P3.B = 0.2 * threshold(P3);
    SolverOptions once;
    once.max_iter = 2;
    try {
        solve_radial_convection(P3, M, FieldSpec::from_params(P3), f, once);
        FAIL("expected non-convergence");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.last_update() > 1e-10);
    }

    auto Pd = params(Kind::Drift, 4, 2.0, 1.5);
    CHECK_THROWS_AS(solve_radial_convection(Pd, M, FieldSpec::from_params(Pd), f), DomainError);
}

TEST_CASE("bounded field part is checked against Fbound") {
    auto P = params(Kind::Convection, 3, 2.0, 1.2, rearrange::unit_ball_volume(3));
    P.Fbound = 0.5;
    auto f = RadialSource::from_datum(radial::Datum::constant(P.domain_measure, 1.0));
    RadialMesh M(3, 1.0, 64, 1.0);
    auto ok = FieldSpec::from_params(P, Orientation::Inward, [](double r) { return 0.5 * std::cos(r); });
    CHECK_NOTHROW(solve_radial_convection(P, M, ok, f));
    auto bad = FieldSpec::from_params(P, Orientation::Inward, [](double r) { return 0.6 + r; });
    CHECK_THROWS_AS(solve_radial_convection(P, M, bad, f), PreconditionError);
}

TEST_CASE("power datum slopes on graded meshes") {
    {
        auto P = params(Kind::Convection, 4, 2.0, 1.2);
        P.B = 0.5 * threshold(P);
        auto M = RadialMesh::for_measure(4, 1.0, 100000, 3.0);
        auto s = solve_radial_convection(P, M, FieldSpec::from_params(P),
                                         RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2)));
        CHECK(fit_u(s, 1e-16, 1e-12) == doctest::Approx(-1.0 / 3.0).epsilon(0.05));
        CHECK(fit_grad_avg(s, 1e-16, 1e-12) == doctest::Approx(-7.0 / 12.0).epsilon(0.07));
    }
    {
        auto P = params(Kind::Drift, 6, 2.0, 2.0);
        P.B = 0.5 * threshold(P);
        auto M = RadialMesh::for_measure(6, 1.0, 100000, 3.0);
        auto s = solve_radial_drift(P, M, FieldSpec::from_params(P),
                                    RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 2.0)));
        CHECK(fit_u(s, 1e-16, 1e-12) == doctest::Approx(-1.0 / 6.0).epsilon(0.05));
        CHECK(fit_grad_avg(s, 1e-16, 1e-12) == doctest::Approx(-1.0 / 3.0).epsilon(0.07));
    }
}

TEST_CASE("truncated solves") {
    auto P = params(Kind::Convection, 4, 2.0, 1.2);
    P.B = 0.5 * threshold(P);
    auto F = FieldSpec::from_params(P);
    auto f = RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2));
    auto M = RadialMesh::for_measure(4, 1.0, 4096, 1.0);
    auto base = solve_radial_convection(P, M, F, f);

    auto inf = solve_truncated(P, M, F, f, INFINITY);
    CHECK(inf.u == base.u);
    CHECK(inf.grad == base.grad);
    CHECK(std::isinf(inf.truncation_level));

    double prev = INFINITY;
    for (double n : {10.0, 100.0, 1000.0}) {
        auto s = solve_truncated(P, M, F, f, n);
        CHECK(s.truncation_level == n);
        double gap = 0.0;
        for (std::size_t i = 0; i < s.u.size(); ++i) gap = std::max(gap, std::fabs(s.u[i] - base.u[i]));
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK_THROWS_AS(solve_truncated(P, M, F, f, 0.5), DomainError);
}

TEST_CASE("inactive truncation reproduces the untruncated solve") {
    // bounded instance: no field, datum 1/2, so max|u|, |E|, |f| < 1
    auto P = params(Kind::Convection, 4, 2.0, 1.2);
    auto F = FieldSpec::from_params(P);
    auto f = RadialSource::from_datum(radial::Datum::constant(1.0, 0.5));
    auto M = RadialMesh::for_measure(4, 1.0, 512, 1.0);
    auto base = solve_radial_convection(P, M, F, f);
    auto one = solve_truncated(P, M, F, f, 1.0);
    CHECK(one.u == base.u);
    CHECK(one.grad == base.grad);

    // with a bounded field the damping 1/(1 + |u|/n) stays active and moves u
    // by a relative amount of order max|u|
    P.Fbound = 0.5;
    auto Fs = FieldSpec::from_params(P, Orientation::Inward, [](double) { return -0.5; });
    auto b2 = solve_radial_convection(P, M, Fs, f);
    auto t2 = solve_truncated(P, M, Fs, f, 1.0);
    double gap = 0.0, umax = 0.0;
    for (std::size_t i = 0; i < b2.u.size(); ++i) {
        gap = std::max(gap, std::fabs(t2.u[i] - b2.u[i]));
        umax = std::max(umax, std::fabs(b2.u[i]));
    }
    CHECK(umax < 1.0);
    CHECK(gap > 0.0);
    CHECK(gap < umax * umax);
}

TEST_CASE("weak residual") {
    auto P = params(Kind::Convection, 3, 2.0, 1.2, rearrange::unit_ball_volume(3));
    P.B = 0.3 * threshold(P);
    auto F = FieldSpec::from_params(P);
    auto f = RadialSource::from_datum(radial::Datum::power_law(P.domain_measure, 1.0, 1.2));
    RadialMesh M(3, 1.0, 128, 1.0);
    auto s = solve_radial_convection(P, M, F, f);
    auto w = weak_residual(s, P, F, f, 32);
    CHECK(w.relative() <= 1e-8);
    auto bumped = s;
    bumped.u[64] += 1e-3;
    auto wb = weak_residual(bumped, P, F, f, 0);
    CHECK(wb.max_abs - w.max_abs >= 1e-4);

    auto Pd = params(Kind::Drift, 4, 3.0, 1.5);
    Pd.B = 0.3 * threshold(Pd);
    auto Fd = FieldSpec::from_params(Pd);
    auto fd = RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.5));
    auto sd = solve_radial_drift(Pd, RadialMesh::for_measure(4, 1.0, 2000, 2.0), Fd, fd);
    CHECK(sd.weak_residual <= 1e-8);
}

TEST_CASE("energy inequality") {
    auto P = params(Kind::Convection, 3, 2.0, 1.2, rearrange::unit_ball_volume(3));
    auto F = FieldSpec::from_params(P);
    auto f = RadialSource::from_datum(radial::Datum::constant(P.domain_measure, 1.0));
    RadialMesh M(3, 1.0, 256, 1.0);
    auto s = solve_radial_convection(P, M, F, f);
    const double umax = *std::max_element(s.u.begin(), s.u.end());

    auto empty = energy_inequality_check(s, P, F, f, 2.0 * umax, 1.0);
    CHECK(empty.empty_band);
    CHECK(empty.slack == 0.0);

    auto full = energy_inequality_check(s, P, F, f, 0.0, umax);
    CHECK(full.slack < 0.0);

    auto Q = params(Kind::Convection, 4, 2.0, 1.2);
    Q.B = 0.5 * threshold(Q);
    auto FQ = FieldSpec::from_params(Q);
    auto fq = RadialSource::from_datum(radial::Datum::power_law(1.0, 1.0, 1.2));
    auto sq = solve_radial_convection(Q, RadialMesh::for_measure(4, 1.0, 20000, 2.0), FQ, fq);
    const double levels[10][2] = {{0, 0.05}, {0.05, 0.1}, {0.1, 0.3}, {0.3, 0.5}, {0.5, 1},
                                  {1, 2},    {2, 5},      {5, 20},    {20, 100}, {0, 1000}};
    for (const auto& kh : levels) {
        auto e = energy_inequality_check(sq, Q, FQ, fq, kh[0], kh[1]);
        CHECK_FALSE(e.empty_band);
        CHECK(e.slack <= 1e-6 * e.scale);
    }
}

TEST_CASE("truncation operators") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> G(0.0, 3.0);
    std::vector<rearrange::Cell> cells(500);
    for (auto& c : cells) c = {G(rng) * std::exp(G(rng)), 0.002};
    rearrange::WeightedSample v(cells);

    auto [T0, G0] = truncation_operators(v, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(T0.cells()[i].value == 0.0);
        CHECK(G0.cells()[i].value == v.cells()[i].value);
    }
    double vmax = 0.0;
    for (const auto& c : cells) vmax = std::max(vmax, std::fabs(c.value));
    auto [Tb, Gb] = truncation_operators(v, vmax);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(Tb.cells()[i].value == v.cells()[i].value);
        CHECK(Gb.cells()[i].value == 0.0);
    }
    std::vector<double> mags;
    for (const auto& c : cells) mags.push_back(std::fabs(c.value));
    std::nth_element(mags.begin(), mags.begin() + 250, mags.end());
    auto [Tk, Gk] = truncation_operators(v, mags[250]);
    const double k = mags[250];
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = v.cells()[i].value, sum = Tk.cells()[i].value + Gk.cells()[i].value;
        CHECK(std::fabs(Tk.cells()[i].value) <= k);
        if (std::fabs(x) <= 2.0 * k)
            CHECK(sum == x);
        else
            CHECK(std::fabs(sum - x) <= std::nextafter(std::fabs(x), INFINITY) - std::fabs(x));
    }
    CHECK_THROWS_AS(truncation_operators(v, -1.0), DomainError);
}

TEST_CASE("box solver against the Fourier series") {
    auto series = [](double x, double y, double z) {
        double s = 0.0;
        for (int i = 1; i < 120; i += 2)
            for (int j = 1; j < 120; j += 2)
                for (int k = 1; k < 120; k += 2)
                    s += 64.0 / (std::pow(M_PI, 5) * i * j * k * (i * i + j * j + k * k)) * std::sin(i * M_PI * x) *
                         std::sin(j * M_PI * y) * std::sin(k * M_PI * z);
        return s;
    };
    std::vector<double> errs;
    for (int n : {16, 32}) {
        auto s = solve_box_convection_3d(box({}, [](double, double, double) { return 1.0; }), n);
        const int h = n / 2;
        const double x = (h + 0.5) / n;
        errs.push_back(std::fabs(s.u[std::size_t(h + n * (h + n * h))] - series(x, x, x)));
        CHECK(s.final_update <= 1e-10);
    }
    CHECK(errs[0] < 5e-4);
    CHECK(errs[0] / errs[1] >= 3.5);
}

TEST_CASE("box solver manufactured solution with bounded field") {
    auto exact = [](double x, double y, double z) { return x * (1 - x) * y * (1 - y) * z * (1 - z); };
    auto E = [](double x, double y, double) {
        return std::array<double, 3>{std::sin(M_PI * y), 0.5 * std::cos(M_PI * x), 1.0};
    };
    // E is divergence free, so f = -Lap u* + E . grad u*
    auto f = [&](double x, double y, double z) {
        const double X = x * (1 - x), Y = y * (1 - y), Z = z * (1 - z);
        const double lap = -2.0 * (Y * Z + X * Z + X * Y);
        const auto e = E(x, y, z);
        return -lap + e[0] * (1 - 2 * x) * Y * Z + e[1] * X * (1 - 2 * y) * Z + e[2] * X * Y * (1 - 2 * z);
    };
    std::vector<double> errs;
    for (int n : {16, 32}) {
        auto s = solve_box_convection_3d(box(E, f), n);
        double e = 0.0;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    e = std::max(e, std::fabs(s.u[std::size_t(i + n * (j + n * k))] -
                                              exact((i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n)));
        errs.push_back(e);
    }
    CHECK(errs[0] / errs[1] >= 3.5);
}

TEST_CASE("box solver stays bounded for gradient fields") {
    // E = lambda grad(|x - c|^2 / 2) points outward and has positive divergence
    double base = 0.0;
    for (double lambda : {0.0, 1.0, 2.0, 5.0, 10.0}) {
        auto s = solve_box_convection_3d(
            box([lambda](double x, double y, double z) {
                    return std::array<double, 3>{lambda * (x - 0.5), lambda * (y - 0.5), lambda * (z - 0.5)};
                },
                [](double, double, double) { return 1.0; }),
            16);
        const double umax = *std::max_element(s.u.begin(), s.u.end());
        if (lambda == 0.0) base = umax;
        CHECK(umax <= base * (1.0 + 1e-12));
        CHECK(*std::min_element(s.u.begin(), s.u.end()) >= 0.0);
    }
}

TEST_CASE("box solver rejects unsupported coefficients") {
    BoxProblem bp = box({}, [](double, double, double) { return 1.0; });
    bp.A = [](double x, double, double) {
        return std::array<double, 9>{x < 0.5 ? 1.0 : -1.0, 0, 0, 0, 1, 0, 0, 0, 1};
    };
    try {
        solve_box_convection_3d(bp, 8);
        FAIL("expected an ellipticity error");
    } catch (const PreconditionError& e) {
        CHECK(e.index() == 4);
    }
    bp.A = [](double, double, double) { return std::array<double, 9>{1, 0.1, 0, 0.1, 1, 0, 0, 0, 1}; };
    CHECK_THROWS_AS(solve_box_convection_3d(bp, 8), UnsupportedCase);
    CHECK_THROWS_AS(solve_box_convection_3d(box({}, [](double, double, double) { return 1.0; }), 65), DomainError);
}

TEST_CASE("solve result CSV") {
    auto P = params(Kind::Convection, 3, 2.0, 1.2, rearrange::unit_ball_volume(3));
    auto f = RadialSource::from_datum(radial::Datum::constant(P.domain_measure, 1.0));
    RadialMesh M(3, 1.0, 16, 1.0);
    auto s = solve_radial_convection(P, M, FieldSpec::from_params(P), f);
    auto csv = s.to_csv();
    CHECK(csv.find("# nodes=16\n") != std::string::npos);
    CHECK(csv.find("\nr,u,grad\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == long(s.provenance.size()) + 1 + 17);
    CHECK(csv == solve_radial_convection(P, M, FieldSpec::from_params(P), f).to_csv());
}
