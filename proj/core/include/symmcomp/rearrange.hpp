#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace symmcomp::rearrange {

struct Cell {
    double value;    // signed; rearrangement uses |value|
    double measure;  // > 0
};

// A measurable function discretized as (value, measure) cells over a domain of
// total measure |Omega|.
class WeightedSample {
public:
    // Validates positivity of measures and, when total_measure > 0, that the
    // measures sum to it within 1e-12 relative. The stored total is the cell
    // sum taken in canonical order (level order, tied measures ascending), so
    // it does not depend on how the cells are permuted.
    explicit WeightedSample(std::vector<Cell> cells, double total_measure = -1.0);

    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t size() const { return cells_.size(); }
    double total_measure() const { return total_; }

    std::vector<double> values() const;
    std::vector<double> measures() const;

private:
    std::vector<Cell> cells_;
    double total_;
};

// Left-continuous step function on (0, total]: value on (b[i-1], b[i]] is v[i].
// No monotonicity requirement; used for pseudo-rearrangements.
class StepProfile {
public:
    StepProfile() = default;
    StepProfile(std::vector<double> breakpoints, std::vector<double> values, double total_measure);

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }
    double total_measure() const { return total_; }
    std::size_t size() const { return values_.size(); }

    double operator()(double s) const;
    double integral(double t) const;  // exact integral over (0, t]
    double lp_norm(double r) const;   // (int |D|^r)^(1/r)

    std::string to_csv() const;

protected:
    std::vector<double> breaks_;
    std::vector<double> values_;
    double total_ = 0.0;
};

// Nonincreasing, nonnegative step profile. An optional head exponent e in [0, 1)
// replaces the first step by v[0] * (s / b[0])^(-e), which carries an
// integrable power singularity at the origin exactly.
class DecreasingProfile : public StepProfile {
public:
    DecreasingProfile() = default;
    DecreasingProfile(std::vector<double> breakpoints, std::vector<double> values, double total_measure,
                      double head_exponent = 0.0);

    double head_exponent() const { return head_; }

    double operator()(double s) const;
    double integral(double t) const;
    // Measure of {value > t}; generalized inverse of the profile.
    double distribution(double t) const;
    // Exact running average (1/s) int_0^s at any s > 0 (s may exceed total).
    double average(double s) const;

    DecreasingProfile scaled(double c) const;

private:
    double head_ = 0.0;
};

// Returns a copy whose head exponent is the local power-law exponent fitted to
// the first two steps, clamped to [0, 0.999].
DecreasingProfile with_fitted_head(const DecreasingProfile& p);

// Piecewise-interpolated sampled function.
struct SampledFunction {
    enum class Interp { PiecewiseConstant, PiecewiseLinear };
    std::vector<double> x;
    std::vector<double> y;
    Interp interp = Interp::PiecewiseLinear;

    SampledFunction() = default;
    SampledFunction(std::vector<double> xs, std::vector<double> ys, Interp mode = Interp::PiecewiseLinear);
    double operator()(double t) const;
};

// Cell indices ordered by |value| descending, ties by index ascending.
std::vector<std::size_t> level_order(const WeightedSample& v);

double distribution_function(const WeightedSample& v, double t);
// Same quantity for many thresholds with a single sort.
std::vector<double> distribution_function(const WeightedSample& v, const std::vector<double>& ts);
DecreasingProfile decreasing_rearrangement(const WeightedSample& v);
DecreasingProfile maximal_function(const DecreasingProfile& p);
StepProfile pseudo_rearrangement(const WeightedSample& g, const WeightedSample& v);

struct LiminfReport {
    bool holds = true;
    double worst_margin = 0.0;  // min over breakpoints of liminf - vbar (>= -tol means holds)
    double at_s = 0.0;
};

// The liminf of a finite sequence x_1..x_K is estimated cell-wise by x_K plus a
// tail allowance (K-1)|x_K - x_{K-1}| that covers O(1/n) convergence from
// below. The rearranged limit is estimated by the rearrangement of x_K plus the
// largest cell allowance. Throws PreconditionError naming the first cell whose
// value exceeds its estimate.
LiminfReport check_liminf_property(const WeightedSample& v, const std::vector<WeightedSample>& sequence);

SampledFunction gronwall_bound(const SampledFunction& rho, const SampledFunction& gamma,
                               const SampledFunction& lambda);

struct TalentiReport {
    double min_slack = 0.0;  // min over levels of rhs / sigma_N - 1
    double max_abs_slack = 0.0;
    std::size_t levels = 0;
    std::size_t skipped = 0;
    std::vector<double> level_values;
    std::vector<double> slacks;
};

TalentiReport talenti_check(const WeightedSample& v, const WeightedSample& gradient, double p, int N);

double unit_ball_volume(int N);  // omega_N
double isoperimetric_constant(int N);  // sigma_N = N omega_N^(1/N)

}  // namespace symmcomp::rearrange
