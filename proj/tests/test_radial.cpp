#include <doctest.h>

#include <cmath>
#include <vector>

#include "symmcomp/errors.hpp"
#include "symmcomp/lorentz.hpp"
#include "symmcomp/radial.hpp"

using namespace symmcomp;
using namespace symmcomp::radial;

namespace {

ProblemParams convection(int N, double m, double alpha = 1.0, double B_frac = 0.0, double measure = 1.0) {
    ProblemParams P;
    P.kind = Kind::Convection;
    P.N = N;
    P.p = 2.0;
    P.m = m;
    P.alpha = P.beta_growth = alpha;
    P.domain_measure = measure;
    P.finalize();
    P.B = B_frac * convection_threshold(P);
    return P;
}

ProblemParams drift(int N, double m, double B_frac = 0.0, double measure = 1.0) {
    ProblemParams P;
    P.kind = Kind::Drift;
    P.N = N;
    P.p = 2.0;
    P.m = m;
    P.domain_measure = measure;
    P.finalize();
    P.B = B_frac * drift_threshold(P);
    return P;
}

std::vector<double> log_grid(double lo, double hi, int per_decade = 10) {
    std::vector<double> ts;
    const double a = std::log10(lo), b = std::log10(hi);
    const int n = int(std::round((b - a) * per_decade));
    for (int i = 0; i <= n; ++i) ts.push_back(std::pow(10.0, a + (b - a) * i / n));
    return ts;
}

double bound_slope(const BoundProfile& v, double lo, double hi) {
    auto ts = log_grid(lo, hi);
    return lorentz::fit_exponent(v.sampled(ts), lo, hi).slope;
}

}  // namespace

TEST_CASE("convection threshold examples") {
    auto P = convection(4, 1.2);
    const double expected = std::pow(M_PI * M_PI / 2.0, 0.25) * 4.0 / 3.0;
    CHECK(convection_threshold(P) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(convection_threshold(P) == doctest::Approx(1.9871).epsilon(1e-4));
    auto P16 = convection(4, 1.2, 16.0);
    CHECK(convection_threshold(P16) == doctest::Approx(16.0 * expected).epsilon(1e-14));
    auto Pedge = convection(4, 2.0 - 1e-9);
    CHECK(convection_threshold(Pedge) < 1e-8);
}

TEST_CASE("drift threshold examples") {
    auto P = drift(4, 2.0);
    CHECK(drift_threshold(P) == doctest::Approx(std::pow(M_PI * M_PI / 2.0, 0.25) * 2.0).epsilon(1e-14));
    CHECK(drift_threshold(P) == doctest::Approx(2.9809).epsilon(1e-4));
    auto Pedge = drift(4, 1.0 + 1e-10);
    CHECK(drift_threshold(Pedge) < 1e-9);
}

TEST_CASE("delta choice") {
    auto P = convection(4, 1.2, 1.0, 0.25);
    const double crit = (4.0 - 2.4) / (4.0 * 1.2);
    auto d = choose_delta(P);
    CHECK(d.delta == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(d.gamma == doctest::Approx(crit / 2.0).epsilon(1e-13));

    P.B = 0.9 * convection_threshold(P);
    d = choose_delta(P);
    CHECK(d.gamma / crit == doctest::Approx(std::sqrt(0.9)).epsilon(1e-13));
    CHECK(d.gamma < crit);

    P.B = 1e-12 * convection_threshold(P);
    CHECK(choose_delta(P).gamma < 1e-5);
    P.B = 0.0;
    CHECK(choose_delta(P).gamma == 0.0);

    P.B = 1.1 * convection_threshold(P);
    try {
        choose_delta(P);
        FAIL("expected a threshold error");
    } catch (const ThresholdError& e) {
        CHECK(e.value() == P.B);
        CHECK(e.threshold() == doctest::Approx(convection_threshold(P)));
    }
}

TEST_CASE("datum arithmetic") {
    auto d = Datum::power_law(2.0, 3.0, 2.0);
    // int_0^s 3 t^{-1/2} = 6 sqrt(s)
    CHECK(d.cumulative(0.25) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(d.average(0.25) == doctest::Approx(12.0).epsilon(1e-14));
    CHECK(d.average(4.0) == doctest::Approx(6.0 * std::sqrt(2.0) / 4.0).epsilon(1e-14));
    // int_0^s 3 t^{-1/2} t^{-1/4} = 12 s^{1/4}
    CHECK(d.weighted_cumulative(0.0625, 0.25) == doctest::Approx(6.0).epsilon(1e-13));

    auto t = d.truncated(6.0);  // crossing at s = 1/4
    CHECK(t.value(0.1) == 6.0);
    CHECK(t.value(1.0) == doctest::Approx(3.0));
    CHECK(t.cumulative(0.25) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(t.cumulative(1.0) == doctest::Approx(1.5 + 6.0 - 3.0).epsilon(1e-14));

    auto pm = Datum::point_mass(1.0, 2.0, 1e-3);
    CHECK(pm.cumulative(1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(pm.value(0.5) == 0.0);

    auto prof = d.sample({0.5, 1.0, 2.0});
    CHECK(prof.integral(2.0) == doctest::Approx(d.cumulative(2.0)).epsilon(1e-14));
    CHECK(prof.values()[0] >= prof.values()[1]);

    CHECK_THROWS_AS(Datum({{0.0, 1.0, 1.0, 0.5}}, 1.0), DomainError);
    CHECK_THROWS_AS(Datum({{0.0, 0.5, 1.0, 0.0}, {0.6, 1.0, 1.0, 0.0}}, 1.0), DomainError);
    CHECK_THROWS_AS(Datum({{0.0, 0.5, 1.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, 1.0), DomainError);
    CHECK_THROWS_AS(Datum::power_law(1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("zero datum gives zero bounds") {
    auto P = convection(4, 1.2, 1.0, 0.5);
    auto z = Datum::zero(1.0);
    auto v = convection_profile(P, z);
    auto g = convection_gradient_bound(P, v, z);
    auto Pd = drift(6, 2.0, 0.5);
    auto w = drift_profile(Pd, z);
    auto wg = drift_gradient_bound(Pd, z);
    for (double t : {1e-12, 1e-3, 0.5}) {
        CHECK(v(t) == 0.0);
        CHECK(g(t) == 0.0);
        CHECK(w(t) == 0.0);
        CHECK(wg(t) == 0.0);
    }
}

TEST_CASE("convection profile slopes on deep windows") {
    auto P = convection(4, 1.2, 1.0, 0.5);
    auto f = Datum::power_law(1.0, 1.0, 1.2);
    auto v = convection_profile(P, f);
    CHECK(bound_slope(v, 1e-40, 1e-30) == doctest::Approx(-1.0 / 3.0).epsilon(0.01));
    auto g = convection_gradient_bound(P, v, f);
    CHECK(bound_slope(g, 1e-40, 1e-30) == doctest::Approx(-7.0 / 12.0).epsilon(0.03));
    // the shallow window is still dominated by lower-order terms
    CHECK(std::fabs(bound_slope(v, 1e-6, 1e-2) + 1.0 / 3.0) > 0.05);
}

TEST_CASE("L1 model gradient bound slope") {
    ProblemParams P;
    P.N = 4;
    P.p = 2.0;
    P.m = 1.0;
    P.datum_class = DatumClass::Lebesgue1;
    P.finalize();
    P.B = 0.5 * convection_threshold(P);
    auto f = Datum::point_mass(1.0, 1.0, 1e-60);
    auto v = convection_profile(P, f);
    CHECK(bound_slope(v, 1e-40, 1e-30) == doctest::Approx(-0.5).epsilon(0.02));
    auto g = convection_gradient_bound(P, v, f);
    CHECK(bound_slope(g, 1e-40, 1e-30) == doctest::Approx(-0.75).epsilon(0.03));
}

TEST_CASE("profiles are nonincreasing and grow with B") {
    auto f = Datum::power_law(1.0, 1.0, 1.2);
    auto P = convection(4, 1.2, 1.0, 0.6);
    auto Ph = P;
    Ph.B = 0.5 * P.B;
    auto v = convection_profile(P, f);
    auto vh = convection_profile(Ph, f);
    double prev = INFINITY;
    for (double t : log_grid(1e-20, 0.99, 4)) {
        CHECK(v(t) <= prev);
        prev = v(t);
        CHECK(vh(t) <= v(t));
    }
    auto Pd = drift(6, 2.0, 0.6);
    auto Pdh = Pd;
    Pdh.B = 0.5 * Pd.B;
    auto fd = Datum::power_law(1.0, 1.0, 2.0);
    auto z = drift_profile(Pd, fd);
    auto zh = drift_profile(Pdh, fd);
    for (double t : log_grid(1e-20, 0.99, 4)) CHECK(zh(t) <= z(t));
}

TEST_CASE("drift profile slope") {
    auto P = drift(6, 2.0, 0.5);
    auto f = Datum::power_law(1.0, 1.0, 2.0);
    auto z = drift_profile(P, f);
    CHECK(bound_slope(z, 1e-40, 1e-30) == doctest::Approx(-1.0 / 6.0).epsilon(0.02));
    CHECK_THROWS_AS(drift_profile(drift(6, 2.0, 1.0), f), ThresholdError);
}

TEST_CASE("drift profile at B = 0 has the field-free shape") {
    auto Pd = drift(6, 2.0, 0.0);
    auto Pc = convection(6, 2.0, 1.0, 0.0);
    auto f = Datum::power_law(1.0, 1.0, 2.0);
    auto z = drift_profile(Pd, f);
    auto v = convection_profile(Pc, f);
    const double ratio = z(1e-6) / v(1e-6);
    for (double t : log_grid(1e-12, 0.5, 2)) CHECK(z(t) / v(t) == doctest::Approx(ratio).epsilon(1e-9));
}

TEST_CASE("drift gradient bound slopes") {
    auto f2 = Datum::power_law(1.0, 1.0, 2.0);
    // m = 2 lies above (2*)' = 3/2: the tail term only sees the energy space
    auto g2 = drift_gradient_bound(drift(6, 2.0, 0.5), f2);
    CHECK(bound_slope(g2, 1e-40, 1e-30) == doctest::Approx(-0.5).epsilon(0.03));
    auto P2 = drift(6, 2.0, 0.5);
    CHECK(predicted_slopes(P2).grad_bound == doctest::Approx(-0.5));
    CHECK(predicted_slopes(P2).grad_avg == doctest::Approx(-1.0 / 3.0));
    // below (2*)' the bound follows the datum
    auto f1 = Datum::power_law(1.0, 1.0, 1.25);
    auto g1 = drift_gradient_bound(drift(6, 1.25, 0.5), f1);
    CHECK(bound_slope(g1, 1e-40, 1e-30) == doctest::Approx(-(6.0 - 1.25) / (6.0 * 1.25)).epsilon(0.03));
}

TEST_CASE("drift gradient bound at B = 0 matches the convection bound") {
    auto f = Datum::power_law(1.0, 1.0, 2.0);
    auto Pd = drift(6, 2.0, 0.0);
    auto Pc = convection(6, 2.0, 1.0, 0.0);
    auto gd = drift_gradient_bound(Pd, f);
    auto gc = convection_gradient_bound(Pc, convection_profile(Pc, f), f);
    // with no field the constants differ by the factor 2^{1/p}
    for (double s : log_grid(1e-10, 0.9, 2)) CHECK(gc(s) == doctest::Approx(std::sqrt(2.0) * gd(s)).epsilon(1e-9));
}

TEST_CASE("symmetrized residual converges at second order") {
    auto P = convection(4, 1.2, 1.0, 0.5);
    auto f = Datum::power_law(P.domain_measure, 1.0, 1.2);
    auto d = choose_delta(P);
    const double R = P.radius();
    std::vector<double> radii;
    for (int i = 1; i <= 9; ++i) radii.push_back(R * i / 10.0);
    auto norm = [&](double h) {
        double s = 0.0;
        for (double x : symmetrized_residual(P, 1.0, d.gamma, f, radii, h)) s += x * x;
        return std::sqrt(s);
    };
    const double r1 = norm(1e-2), r2 = norm(5e-3), r3 = norm(2.5e-3);
    CHECK(r1 / r2 >= 3.5);
    CHECK(r2 / r3 >= 3.5);
}

TEST_CASE("symmetrized residual trivial cases") {
    auto P = convection(4, 1.2, 1.0, 0.0);
    const double R = P.radius();
    std::vector<double> radii{0.2 * R, 0.5 * R, 0.8 * R};
    for (double x : symmetrized_residual(P, 1.0, 0.3, Datum::zero(1.0), radii, 1e-3)) CHECK(x == 0.0);
    // gamma = 0 with a constant datum gives a quadratic in r: exact up to rounding
    for (double x : symmetrized_residual(P, 2.0, 0.0, Datum::constant(1.0, 3.0), radii, 1e-2))
        CHECK(std::fabs(x) < 1e-6);
    CHECK_THROWS_AS(symmetrized_residual(P, 1.0, 0.0, Datum::constant(1.0, 1.0), {0.005}, 1e-2), DomainError);
}

TEST_CASE("sharpness exponents") {
    auto P = convection(4, 1.2);
    P.B = sharpness_B(P, 0.5);
    auto s = sharpness_exponents(P);
    CHECK(s.gamma_B == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.in_window);
    CHECK(s.u_slope == doctest::Approx(-0.5));
    CHECK(s.grad_slope == doctest::Approx(-0.75));

    const double crit = (4.0 - 2.4) / 4.8;
    P.B = sharpness_B(P, crit);
    s = sharpness_exponents(P);
    CHECK(s.u_slope == doctest::Approx(predicted_slopes(P).u).epsilon(1e-12));
    CHECK(s.grad_slope == doctest::Approx(predicted_slopes(P).grad_avg).epsilon(1e-12));
    CHECK(P.B == doctest::Approx(convection_threshold(P)).epsilon(1e-12));

    P.B = sharpness_B(P, 0.75);
    s = sharpness_exponents(P);
    CHECK(s.grad_borderline);
    CHECK(std::isnan(s.grad_slope));

    P.B = sharpness_B(P, 0.2);
    CHECK_FALSE(sharpness_exponents(P).in_window);
}

TEST_CASE("predicted regularity examples") {
    auto reg = [](double p, int N, double m, double q, DatumClass cls = DatumClass::Lorentz) {
        ProblemParams P;
        P.p = p;
        P.N = N;
        P.m = m;
        P.q = q;
        P.datum_class = cls;
        P.finalize();
        return predicted_regularity(P);
    };
    auto a = reg(2.0, 6, 1.25, INFINITY);
    CHECK(a.u.m == doctest::Approx(15.0 / 7.0));
    CHECK(std::isinf(a.u.q));
    REQUIRE(a.grad);
    CHECK(a.grad->m == doctest::Approx(30.0 / 19.0));

    auto b = reg(2.0, 6, 2.0, 2.0);
    CHECK(b.energy_space);
    CHECK(b.u.m == doctest::Approx(6.0));
    CHECK(b.u.q == doctest::Approx(2.0));
    CHECK_FALSE(b.grad.has_value());

    for (int N : {3, 4, 6}) {
        auto c = reg(2.0, N, 1.0, INFINITY, DatumClass::Lebesgue1);
        CHECK(c.u.m == doctest::Approx(N / (N - 2.0)));
        CHECK(std::isinf(c.u.q));
        REQUIRE(c.grad);
        CHECK(c.grad->m == doctest::Approx(N / (N - 1.0)));
    }

    // p = 1.7, N = 5: m_low = 5 / 4.5 = 10/9 and p < 2 - 1/N
    auto d = reg(1.7, 5, 10.0 / 9.0, 1.0, DatumClass::LogLorentz);
    CHECK(d.case_label == "borderline (iv)");
    CHECK(d.u.m == doctest::Approx(1.25));
    CHECK(d.u.q == doctest::Approx(0.7));
    REQUIRE(d.grad);
    CHECK(d.grad->m == doctest::Approx(1.0));
    CHECK(d.grad->q == doctest::Approx(0.7));

    CHECK_THROWS_AS(reg(2.0, 6, 1.5, INFINITY), UnsupportedCase);
}
