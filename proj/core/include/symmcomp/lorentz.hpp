#pragma once

#include <cstddef>

#include "symmcomp/rearrange.hpp"

namespace symmcomp::lorentz {

using rearrange::DecreasingProfile;
using rearrange::SampledFunction;
using rearrange::StepProfile;

enum class Scale {
    Standard,  // uses the decreasing rearrangement
    Maximal,   // uses the maximal function over (0, inf)
    L1q,       // m = 1, maximal function truncated at |Omega|
};

struct LorentzIndex {
    double m = 1.0;
    double q = 1.0;  // +inf allowed
    Scale scale = Scale::Standard;

    LorentzIndex() = default;
    LorentzIndex(double m, double q, Scale scale = Scale::Standard);

    double conjugate() const { return m / (m - 1.0); }  // m'
};

struct HardyParams {
    double beta = 0.0;
    double delta = 0.5;
    double lambda = 1.0;

    HardyParams() = default;
    HardyParams(double beta, double delta, double lambda);
};

// Returns +inf for divergent integrals; that is a legal value.
double lorentz_norm(const DecreasingProfile& f, const LorentzIndex& idx);

struct EquivalenceChain {
    double lhs = 0.0;  // standard quasi-norm
    double mid = 0.0;  // maximal quasi-norm
    double rhs = 0.0;  // m' times the standard quasi-norm
    bool holds = true;
};

// Evaluates both quasi-norms and the chain lhs <= mid <= rhs with a 1e-8
// relative allowance.
EquivalenceChain norm_equivalence_check(const DecreasingProfile& f, double m, double q);

double l1q_norm(const DecreasingProfile& f, double q);

// R(t) = int_0^t s^beta r(s) ds when delta < 1, int_t^inf s^beta r(s) ds when
// delta > 1; r vanishes beyond |Omega|. Sampled at the breakpoints of r.
SampledFunction hardy_transform(const DecreasingProfile& r, const HardyParams& hp);
double hardy_transform_at(const DecreasingProfile& r, const HardyParams& hp, double t);

struct HardyCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 1.0;
    double constant = 0.0;  // calibrated C(beta, delta, lambda)
    bool finite = true;     // false when either side diverges; nothing asserted then
    bool holds = true;
};

// lhs = int (R/t)^lambda t^{delta lambda} dt/t, rhs = int r^lambda t^{lambda(beta+delta)} dt/t.
HardyCheck hardy_sides(const DecreasingProfile& r, const HardyParams& hp);

// 1.05 times the largest lhs/rhs ratio over a fixed corpus of 200 profiles:
// 160 random step profiles and 40 truncated power laws approaching the
// borderline exponent. Cached per parameter triple.
double hardy_constant(const HardyParams& hp);

HardyCheck hardy_inequality_check(const DecreasingProfile& r, const HardyParams& hp);

// Random decreasing step profiles on (0, 1] (also used by tests as a generator).
std::vector<DecreasingProfile> hardy_corpus(std::size_t count, unsigned long long seed);
// Truncated power laws s^{-a} with a increasing toward beta + delta.
std::vector<DecreasingProfile> hardy_extremal_family(const HardyParams& hp, std::size_t count);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

// Least squares of log(value) against log(s) over breakpoints in [s_lo, s_hi].
ExponentFit fit_exponent(const StepProfile& p, double s_lo, double s_hi);

}  // namespace symmcomp::lorentz
