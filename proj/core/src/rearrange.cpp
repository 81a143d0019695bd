#include "symmcomp/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "symmcomp/csv.hpp"
#include "symmcomp/errors.hpp"

namespace symmcomp::rearrange {

namespace {

struct Group {
    double value;  // |v| shared by the group
    double measure;
};

// Cells grouped by equal |value| in descending order. Each group's measure is
// summed in ascending order so that the result is invariant under permutation.
std::vector<Group> canonical_groups(const std::vector<Cell>& cells) {
    std::vector<std::pair<double, double>> av(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) av[i] = {std::fabs(cells[i].value), cells[i].measure};
    std::sort(av.begin(), av.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<Group> out;
    for (std::size_t i = 0; i < av.size();) {
        std::size_t j = i;
        double m = 0.0;
        while (j < av.size() && av[j].first == av[i].first) m += av[j++].second;
        out.push_back({av[i].first, m});
        i = j;
    }
    return out;
}

std::size_t first_break_at_or_after(const std::vector<double>& b, double s) {
    return static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), s) - b.begin());
}

}  // namespace

double unit_ball_volume(int N) {
    return std::pow(std::numbers::pi, N / 2.0) / std::tgamma(N / 2.0 + 1.0);
}

double isoperimetric_constant(int N) { return N * std::pow(unit_ball_volume(N), 1.0 / N); }

// ---------------------------------------------------------------- samples

WeightedSample::WeightedSample(std::vector<Cell> cells, double total_measure) : cells_(std::move(cells)) {
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (!(cells_[i].measure > 0.0) || !std::isfinite(cells_[i].measure))
            throw DomainError("cell " + std::to_string(i) + " has non-positive measure");
        if (!std::isfinite(cells_[i].value)) throw DomainError("cell " + std::to_string(i) + " has non-finite value");
    }
    double sum = 0.0;
    for (const auto& g : canonical_groups(cells_)) sum += g.measure;
    if (total_measure > 0.0 && std::fabs(sum - total_measure) > 1e-12 * total_measure)
        throw DomainError("cell measures sum to " + fmt17(sum) + ", expected " + fmt17(total_measure));
    total_ = sum;
}

std::vector<double> WeightedSample::values() const {
    std::vector<double> v;
    v.reserve(cells_.size());
    for (const auto& c : cells_) v.push_back(c.value);
    return v;
}

std::vector<double> WeightedSample::measures() const {
    std::vector<double> v;
    v.reserve(cells_.size());
    for (const auto& c : cells_) v.push_back(c.measure);
    return v;
}

// ---------------------------------------------------------------- step profiles

StepProfile::StepProfile(std::vector<double> breakpoints, std::vector<double> values, double total_measure)
    : breaks_(std::move(breakpoints)), values_(std::move(values)), total_(total_measure) {
    if (breaks_.size() != values_.size()) throw DomainError("breakpoints and values differ in length");
    if (!(total_ > 0.0)) throw DomainError("total measure must be positive");
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        if (!(breaks_[i] > (i ? breaks_[i - 1] : 0.0)))
            throw DomainError("breakpoints must be strictly increasing and positive");
        if (!std::isfinite(values_[i])) throw DomainError("non-finite profile value");
    }
    if (!breaks_.empty() && breaks_.back() > total_ * (1.0 + 1e-12))
        throw DomainError("breakpoint beyond total measure");
}

double StepProfile::operator()(double s) const {
    if (breaks_.empty() || s > breaks_.back()) return 0.0;
    std::size_t i = first_break_at_or_after(breaks_, s);
    return values_[std::min(i, values_.size() - 1)];
}

double StepProfile::integral(double t) const {
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < breaks_.size() && prev < t; ++i) {
        double hi = std::min(t, breaks_[i]);
        acc += values_[i] * (hi - prev);
        prev = breaks_[i];
    }
    return acc;
}

double StepProfile::lp_norm(double r) const {
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        acc += std::pow(std::fabs(values_[i]), r) * (breaks_[i] - prev);
        prev = breaks_[i];
    }
    return std::pow(acc, 1.0 / r);
}

std::string StepProfile::to_csv() const {
    std::ostringstream os;
    os << "s,value\n";
    for (std::size_t i = 0; i < breaks_.size(); ++i) os << fmt17(breaks_[i]) << ',' << fmt17(values_[i]) << '\n';
    return os.str();
}

DecreasingProfile::DecreasingProfile(std::vector<double> breakpoints, std::vector<double> values,
                                     double total_measure, double head_exponent)
    : StepProfile(std::move(breakpoints), std::move(values), total_measure), head_(head_exponent) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] < 0.0) throw DomainError("decreasing profile must be nonnegative");
        if (i && values_[i] > values_[i - 1]) throw DomainError("profile values must be nonincreasing");
    }
    if (!(head_ >= 0.0 && head_ < 1.0)) throw DomainError("head exponent must lie in [0, 1)");
}

double DecreasingProfile::operator()(double s) const {
    if (head_ > 0.0 && !breaks_.empty() && s <= breaks_[0])
        return s <= 0.0 ? INFINITY : values_[0] * std::pow(s / breaks_[0], -head_);
    return StepProfile::operator()(s);
}

double DecreasingProfile::integral(double t) const {
    if (breaks_.empty() || t <= 0.0) return 0.0;
    if (head_ == 0.0) return StepProfile::integral(t);
    double b0 = breaks_[0];
    double hi = std::min(t, b0);
    double acc = values_[0] * b0 / (1.0 - head_) * std::pow(hi / b0, 1.0 - head_);
    double prev = b0;
    for (std::size_t i = 1; i < breaks_.size() && prev < t; ++i) {
        double h = std::min(t, breaks_[i]);
        acc += values_[i] * (h - prev);
        prev = breaks_[i];
    }
    return acc;
}

double DecreasingProfile::distribution(double t) const {
    if (breaks_.empty()) return 0.0;
    if (t < 0.0) return breaks_.back();
    if (head_ > 0.0 && t >= values_[0]) return breaks_[0] * std::pow(t / values_[0], -1.0 / head_);
    // values > t form a prefix
    auto it = std::partition_point(values_.begin(), values_.end(), [t](double v) { return v > t; });
    std::size_t k = static_cast<std::size_t>(it - values_.begin());
    return k == 0 ? 0.0 : breaks_[k - 1];
}

double DecreasingProfile::average(double s) const {
    if (s <= 0.0) return (*this)(0.0);
    return integral(std::min(s, breaks_.empty() ? 0.0 : breaks_.back())) / s;
}

DecreasingProfile DecreasingProfile::scaled(double c) const {
    std::vector<double> v = values_;
    for (auto& x : v) x *= c;
    return DecreasingProfile(breaks_, std::move(v), total_, head_);
}

DecreasingProfile with_fitted_head(const DecreasingProfile& p) {
    const auto& b = p.breakpoints();
    const auto& v = p.values();
    if (b.size() < 2 || v[1] <= 0.0 || v[0] <= v[1]) return DecreasingProfile(b, v, p.total_measure(), 0.0);
    double e = std::log(v[0] / v[1]) / std::log(b[1] / b[0]);
    e = std::clamp(e, 0.0, 0.999);
    return DecreasingProfile(b, v, p.total_measure(), e);
}

// ---------------------------------------------------------------- sampled functions

SampledFunction::SampledFunction(std::vector<double> xs, std::vector<double> ys, Interp mode)
    : x(std::move(xs)), y(std::move(ys)), interp(mode) {
    if (x.size() != y.size() || x.empty()) throw DomainError("sampled function needs matching, non-empty arrays");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw DomainError("abscissae must be strictly increasing");
}

double SampledFunction::operator()(double t) const {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    if (interp == Interp::PiecewiseConstant) return y[i - 1];
    double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

// ---------------------------------------------------------------- operations

std::vector<std::size_t> level_order(const WeightedSample& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto& c = v.cells();
    std::stable_sort(idx.begin(), idx.end(),
                     [&c](std::size_t a, std::size_t b) { return std::fabs(c[a].value) > std::fabs(c[b].value); });
    return idx;
}

double distribution_function(const WeightedSample& v, double t) {
    return distribution_function(v, std::vector<double>{t}).front();
}

std::vector<double> distribution_function(const WeightedSample& v, const std::vector<double>& ts) {
    auto groups = canonical_groups(v.cells());
    std::vector<double> cum(groups.size());
    double acc = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) cum[g] = acc += groups[g].measure;
    std::vector<double> out;
    out.reserve(ts.size());
    for (double t : ts) {
        if (t < 0.0) throw DomainError("threshold must be nonnegative");
        auto it = std::partition_point(groups.begin(), groups.end(), [t](const Group& g) { return g.value > t; });
        std::size_t k = static_cast<std::size_t>(it - groups.begin());
        out.push_back(k == 0 ? 0.0 : cum[k - 1]);
    }
    return out;
}

DecreasingProfile decreasing_rearrangement(const WeightedSample& v) {
    auto groups = canonical_groups(v.cells());
    std::vector<double> b, val;
    double acc = 0.0;
    for (const auto& g : groups) {
        b.push_back(acc += g.measure);
        val.push_back(g.value);
    }
    return DecreasingProfile(std::move(b), std::move(val), v.total_measure());
}

DecreasingProfile maximal_function(const DecreasingProfile& p) {
    const auto& b = p.breakpoints();
    const auto& v = p.values();
    std::vector<double> out(v.size());
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i == 0 && p.head_exponent() > 0.0)
            acc = v[0] * b[0] / (1.0 - p.head_exponent());
        else
            acc += v[i] * (b[i] - prev);
        prev = b[i];
        double avg = acc / b[i];
        // The running average of a nonincreasing function dominates it and is
        // itself nonincreasing; the clamps only absorb last-bit rounding.
        avg = std::max(avg, v[i]);
        if (i) avg = std::min(avg, out[i - 1]);
        out[i] = avg;
    }
    return DecreasingProfile(b, std::move(out), p.total_measure(), p.head_exponent());
}

StepProfile pseudo_rearrangement(const WeightedSample& g, const WeightedSample& v) {
    if (g.size() != v.size()) throw PartitionError("g and v have different cell counts");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.cells()[i].measure != v.cells()[i].measure)
            throw PartitionError("cell " + std::to_string(i) + " has different measures in g and v");
    auto order = level_order(v);
    std::vector<double> b, val;
    b.reserve(order.size());
    val.reserve(order.size());
    double acc = 0.0;
    for (std::size_t k : order) {
        b.push_back(acc += g.cells()[k].measure);
        val.push_back(std::fabs(g.cells()[k].value));
    }
    if (!b.empty()) b.back() = std::min(b.back(), v.total_measure() * (1.0 + 1e-12));
    return StepProfile(std::move(b), std::move(val), std::max(v.total_measure(), acc));
}

LiminfReport check_liminf_property(const WeightedSample& v, const std::vector<WeightedSample>& sequence) {
    if (sequence.empty()) throw DomainError("empty sequence");
    for (const auto& w : sequence)
        if (w.size() != v.size()) throw PartitionError("sequence element has a different partition");
    const std::size_t K = sequence.size();
    const WeightedSample& last = sequence.back();
    const WeightedSample* prev = K > 1 ? &sequence[K - 2] : nullptr;
    auto estimate = [&](double xk, double xkm1) { return xk + (K - 1) * std::fabs(xk - xkm1); };

    // Cell-wise estimate of the limit; rearrangement is 1-Lipschitz in sup norm,
    // so the largest cell allowance carries over to the rearranged sequence.
    double allowance = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) {
        double xk = std::fabs(last.cells()[c].value);
        double xkm1 = prev ? std::fabs(prev->cells()[c].value) : xk;
        double vc = std::fabs(v.cells()[c].value);
        if (vc > estimate(xk, xkm1) * (1.0 + 1e-12) + 1e-300)
            throw PreconditionError("|v| exceeds liminf |v_n| at cell " + std::to_string(c), static_cast<long>(c));
        allowance = std::max(allowance, estimate(xk, xkm1) - xk);
    }

    DecreasingProfile vb = decreasing_rearrangement(v);
    DecreasingProfile lb = decreasing_rearrangement(last);
    std::vector<double> pts = vb.breakpoints();
    pts.insert(pts.end(), lb.breakpoints().begin(), lb.breakpoints().end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    // Compare inside each interval of the merged partition: the two profiles
    // reach a shared jump through differently ordered sums.
    std::vector<double> mids;
    double left = 0.0;
    const double sliver = 1e-12 * std::max(vb.total_measure(), lb.total_measure());
    for (double s : pts) {
        if (s - left > sliver) mids.push_back(0.5 * (left + s));
        left = s;
    }

    LiminfReport rep;
    rep.worst_margin = INFINITY;
    for (double s : mids) {
        double margin = lb(s) + allowance - vb(s);
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.at_s = s;
        }
        if (margin < -1e-12 * std::max(1.0, vb(s))) rep.holds = false;
    }
    return rep;
}

SampledFunction gronwall_bound(const SampledFunction& rho, const SampledFunction& gamma,
                               const SampledFunction& lambda) {
    const auto& x = rho.x;
    const std::size_t n = x.size();
    std::vector<double> g(n), l(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = gamma(x[i]);
        l[i] = lambda(x[i]);
        r[i] = rho.y[i];
        if (g[i] < 0.0 || l[i] < 0.0) throw DomainError("gronwall: lambda and gamma must be nonnegative");
    }
    const bool linear = rho.interp == SampledFunction::Interp::PiecewiseLinear;
    // K_i = int_{x_i}^{end} rho lambda exp(int_{x_i}^tau lambda gamma) dtau, accumulated from the right.
    std::vector<double> K(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        double h = x[i + 1] - x[i];
        double dL = linear ? 0.5 * h * (l[i] * g[i] + l[i + 1] * g[i + 1]) : h * l[i] * g[i];
        double e = std::exp(dL);
        double local = linear ? 0.5 * h * (r[i] * l[i] + r[i + 1] * l[i + 1] * e)
                              : r[i] * l[i] * (dL > 0 ? (e - 1.0) / (l[i] * g[i]) : h);
        K[i] = local + e * K[i + 1];
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = r[i] + g[i] * K[i];
    return SampledFunction(x, std::move(out), rho.interp);
}

TalentiReport talenti_check(const WeightedSample& v, const WeightedSample& gradient, double p, int N) {
    if (gradient.size() != v.size()) throw PartitionError("gradient and v have different cell counts");
    if (!(p > 1.0) || N < 1) throw DomainError("talenti_check needs p > 1 and N >= 1");
    auto order = level_order(v);
    // group cells by equal |v|; accumulate measure and int |grad|^p per group
    std::vector<double> lev, S, Phi;
    double s_acc = 0.0, phi_acc = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        double val = std::fabs(v.cells()[order[i]].value);
        std::size_t j = i;
        while (j < order.size() && std::fabs(v.cells()[order[j]].value) == val) {
            const auto& c = v.cells()[order[j]];
            s_acc += c.measure;
            phi_acc += std::pow(std::fabs(gradient.cells()[order[j]].value), p) * c.measure;
            ++j;
        }
        lev.push_back(val);
        S.push_back(s_acc);
        Phi.push_back(phi_acc);
        i = j;
    }
    TalentiReport rep;
    const double sigma = isoperimetric_constant(N);
    const std::size_t M = lev.size();
    if (M < 4) return rep;
    // Level k_j = (lev[j] + lev[j+1]) / 2 has A(k_j) = S[j], Phi(k_j) = Phi[j].
    // A^{1/N-1} (-A') is evaluated as -N d(A^{1/N})/dk.
    rep.min_slack = INFINITY;
    for (std::size_t j = 1; j + 2 < M; ++j) {
        double k_lo = 0.5 * (lev[j + 1] + lev[j + 2]);
        double k_hi = 0.5 * (lev[j - 1] + lev[j]);
        double dk = k_hi - k_lo;
        double dS = S[j + 1] - S[j - 1];
        double dPhi = Phi[j + 1] - Phi[j - 1];
        if (!(dk > 0.0) || !(dS > 0.0) || !(dPhi > 0.0)) {
            ++rep.skipped;
            continue;
        }
        double dA1N = std::pow(S[j + 1], 1.0 / N) - std::pow(S[j - 1], 1.0 / N);
        double rhs = N * dA1N / dk * std::pow(dPhi / dS, 1.0 / p);
        double slack = rhs / sigma - 1.0;
        rep.level_values.push_back(0.5 * (lev[j] + lev[j + 1]));
        rep.slacks.push_back(slack);
        rep.min_slack = std::min(rep.min_slack, slack);
        rep.max_abs_slack = std::max(rep.max_abs_slack, std::fabs(slack));
        ++rep.levels;
    }
    if (rep.levels == 0) rep.min_slack = 0.0;
    return rep;
}

}  // namespace symmcomp::rearrange
