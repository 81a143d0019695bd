#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symmcomp/lorentz.hpp"
#include "symmcomp/rearrange.hpp"

namespace symmcomp::radial {

using lorentz::LorentzIndex;
using rearrange::DecreasingProfile;

enum class Kind { Convection, Drift };

// How a datum with m = 1 is measured: plain L^1 or the L^{1,q} scale.
enum class DatumClass { Lorentz, Lebesgue1, LogLorentz };

struct ProblemParams {
    Kind kind = Kind::Convection;
    int N = 3;
    double p = 2.0;
    double alpha = 1.0;
    double beta_growth = 1.0;
    double domain_measure = 1.0;  // |Omega|
    double B = 0.0;               // Marcinkiewicz constant of the singular field part
    double Fbound = 0.0;          // sup norm of the bounded field part
    double m = 1.0;
    double q = INFINITY;
    DatumClass datum_class = DatumClass::Lorentz;

    double omega_N = 0.0;  // filled by finalize()
    double sigma_N = 0.0;

    // Validates the invariants and stores omega_N, sigma_N.
    ProblemParams& finalize();
    double p_conj() const { return p / (p - 1.0); }
    double radius() const { return std::pow(domain_measure / omega_N, 1.0 / N); }
};

// Radial datum given through its decreasing rearrangement as a piecewise power
// law c s^e on consecutive intervals of (0, |Omega|]. Pure powers, constants,
// point masses and step profiles are all exact members of this family.
class Datum {
public:
    struct Piece {
        double lo, hi, c, e;
    };

    Datum() = default;
    Datum(std::vector<Piece> pieces, double total);

    static Datum zero(double total);
    static Datum constant(double total, double c);
    // c s^{-1/m} on (0, |Omega|]
    static Datum power_law(double total, double c, double m);
    // mass spread uniformly on (0, s0]
    static Datum point_mass(double total, double mass, double s0);
    static Datum from_profile(const DecreasingProfile& prof);

    const std::vector<Piece>& pieces() const { return pieces_; }
    double total() const { return total_; }
    bool is_zero() const;

    double value(double s) const;       // fbar(s)
    double cumulative(double s) const;  // int_0^s fbar
    double average(double s) const;     // ftilde(s), with the 1/s tail past |Omega|
    // int_0^s fbar(tau) tau^{-b} dtau
    double weighted_cumulative(double s, double b) const;
    // coefficients (a, c, k) with weighted_cumulative(s, b) = a + c s^k on piece j
    struct Antiderivative {
        double a, c, k;
    };
    std::vector<Antiderivative> weighted_antiderivative(double b) const;

    Datum truncated(double level) const;  // min(fbar, level)
    Datum scaled(double factor) const;
    DecreasingProfile sample(const std::vector<double>& breakpoints) const;  // cell averages

private:
    std::vector<Piece> pieces_;
    double total_ = 1.0;
};

struct NamedConstant {
    std::string key;
    double value;
};

// Closed-form a priori bound t -> value on (0, |Omega|] with tracked constants.
class BoundProfile {
public:
    BoundProfile() = default;
    BoundProfile(std::function<double(double)> eval, double C, double gamma, double delta, double total,
                 std::vector<NamedConstant> provenance);

    double operator()(double t) const { return eval_(t); }
    double C() const { return C_; }
    double gamma() const { return gamma_; }
    double delta() const { return delta_; }
    double total() const { return total_; }
    const std::vector<NamedConstant>& provenance() const { return prov_; }

    // Step profile with the bound's value at each right endpoint.
    rearrange::StepProfile sampled(const std::vector<double>& ts) const;
    std::string provenance_block() const;  // key=value lines
    std::string to_csv(const std::vector<double>& ts) const;  // t,bound

private:
    std::function<double(double)> eval_;
    double C_ = 0.0, gamma_ = 0.0, delta_ = 0.0, total_ = 1.0;
    std::vector<NamedConstant> prov_;
};

double convection_threshold(const ProblemParams& params);
double drift_threshold(const ProblemParams& params);

struct DeltaChoice {
    double delta;
    double gamma;
};
DeltaChoice choose_delta(const ProblemParams& params);

BoundProfile convection_profile(const ProblemParams& params, const Datum& fbar);
BoundProfile convection_profile(const ProblemParams& params, const DecreasingProfile& fbar);
// Bound on s -> (1/s) int_0^s |grad u|^{p-1} rearranged.
BoundProfile convection_gradient_bound(const ProblemParams& params, const BoundProfile& vprof, const Datum& fbar);

BoundProfile drift_profile(const ProblemParams& params, const Datum& fbar);
BoundProfile drift_profile(const ProblemParams& params, const DecreasingProfile& fbar);
BoundProfile drift_gradient_bound(const ProblemParams& params, const Datum& fbar);

// Radial value v(|x|) = C t^{-gamma} int_t^{|Omega|} s^{2/N-1+gamma} ftilde(s) ds with t = omega_N |x|^N.
double symmetrized_value(const ProblemParams& params, double C, double gamma, const Datum& fbar, double r);

// Centered-difference residual of
//   -Lap v - gamma N div(v x/|x|^2) - omega_N^{2/N} N^2 C fbar(omega_N |x|^N)
// at each radius with step h.
std::vector<double> symmetrized_residual(const ProblemParams& params, double C, double gamma, const Datum& fbar,
                                         const std::vector<double>& radii, double h);

struct SharpnessExponents {
    double gamma_B = 0.0;
    double u_slope = 0.0;
    double grad_slope = NAN;  // NaN when no gradient prediction applies
    bool in_window = false;
    bool grad_borderline = false;
};
SharpnessExponents sharpness_exponents(const ProblemParams& params);
// B giving gamma(B) = g for p = 2.
double sharpness_B(const ProblemParams& params, double gamma_B);

struct Regularity {
    LorentzIndex u;
    std::optional<LorentzIndex> grad;
    bool energy_space = false;  // u in W^{1,p}_0 as well
    std::string case_label;
};
Regularity predicted_regularity(const ProblemParams& params);

// Predicted log-log slopes of the rearranged solution and of the running
// average of the rearranged |grad u|^{p-1} for a power-law datum. grad_bound is
// the slope of the a priori gradient bound, which above (p*)' only sees the
// energy space and decays like s^{-(p-1)/p}.
struct PredictedSlopes {
    double u;
    double grad_avg;
    double grad_bound;
    bool borderline;
};
PredictedSlopes predicted_slopes(const ProblemParams& params);

}  // namespace symmcomp::radial
