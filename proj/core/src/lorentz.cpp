#include "symmcomp/lorentz.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include "symmcomp/errors.hpp"

namespace symmcomp::lorentz {

namespace {

constexpr double kInf = INFINITY;

// Adaptive Gauss-Kronrod in u = log t over [log a, log b] of g(t) * t, i.e. of
// g(t) dt.
template <class F>
double log_quad(F&& g, double a, double b) {
    if (!(b > a)) return 0.0;
    auto h = [&](double u) {
        double t = std::exp(u);
        return g(t) * t;
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(h, std::log(a), std::log(b), 8, 1e-11);
}

// int_{a}^{b} t^{k-1} dt for k > 0 (exact).
double power_piece(double a, double b, double k) { return (std::pow(b, k) - std::pow(a, k)) / k; }

// (int_0^T t^{a} g(t)^q dt/t) where g is the maximal function of f, over the
// breakpoints of f. The first interval is integrated in closed form.
double maximal_power_integral(const DecreasingProfile& f, double a, double q) {
    const auto& b = f.breakpoints();
    const auto& v = f.values();
    const double e = f.head_exponent();
    if (b.empty()) return 0.0;
    // first interval: g(t) = v0/(1-e) (t/b0)^{-e}
    double acc = 0.0;
    double k0 = a - e * q;
    if (v[0] > 0.0) {
        if (k0 <= 0.0) return kInf;
        acc += std::pow(v[0] / (1.0 - e), q) * std::pow(b[0], e * q) * std::pow(b[0], k0) / k0;
    }
    double P = f.integral(b[0]);
    for (std::size_t i = 1; i < b.size(); ++i) {
        double lo = b[i - 1], hi = b[i], vi = v[i], P0 = P;
        if (P0 > 0.0) {
            auto g = [&](double t) { return std::pow(t, a - 1.0) * std::pow((P0 + vi * (t - lo)) / t, q); };
            acc += log_quad(g, lo, hi);
        }
        P += vi * (hi - lo);
    }
    return acc;
}

}  // namespace

LorentzIndex::LorentzIndex(double m_, double q_, Scale s) : m(m_), q(q_), scale(s) {
    if (!(m >= 1.0) || !std::isfinite(m)) throw DomainError("Lorentz exponent m must be >= 1");
    if (!(q > 0.0)) throw DomainError("Lorentz exponent q must be positive");
    if (scale == Scale::L1q && m != 1.0) throw DomainError("the L^{1,q} scale requires m = 1");
    if (scale == Scale::Maximal && m == 1.0 && std::isfinite(q))
        throw DomainError("maximal scale with m = 1 and finite q contains only the zero function");
}

HardyParams::HardyParams(double b, double d, double l) : beta(b), delta(d), lambda(l) {
    if (!(beta >= 0.0)) throw DomainError("Hardy beta must be >= 0");
    if (delta == 1.0 || !(delta > 0.0)) throw DomainError("Hardy delta must be positive and different from 1");
    if (!(lambda > 0.0)) throw DomainError("Hardy lambda must be positive");
}

double lorentz_norm(const DecreasingProfile& f, const LorentzIndex& idx) {
    const auto& b = f.breakpoints();
    const auto& v = f.values();
    const double m = idx.m, q = idx.q, e = f.head_exponent();
    if (b.empty()) return 0.0;
    const double T = f.total_measure();
    const double I = f.integral(b.back());

    if (std::isinf(q)) {
        double sup = 0.0;
        double a = idx.scale == Scale::Standard ? 1.0 / m : (idx.scale == Scale::Maximal ? 1.0 / m : 1.0);
        // head: t^{a} * c t^{-e}; unbounded at 0 when e > a
        if (e > a && v[0] > 0.0) return kInf;
        if (idx.scale == Scale::Standard) {
            for (std::size_t i = 0; i < b.size(); ++i) sup = std::max(sup, std::pow(b[i], a) * v[i]);
        } else {
            // t^a * average(t) is maximized at breakpoints (or at infinity)
            for (std::size_t i = 0; i < b.size(); ++i) sup = std::max(sup, std::pow(b[i], a) * (f.integral(b[i]) / b[i]));
            if (idx.scale == Scale::Maximal && a >= 1.0) sup = std::max(sup, I);
        }
        return sup;
    }

    double acc = 0.0;
    switch (idx.scale) {
        case Scale::Standard: {
            double k = q / m;
            double prev = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (v[i] > 0.0) {
                    if (i == 0 && e > 0.0) {
                        double k0 = k - e * q;
                        if (k0 <= 0.0) return kInf;
                        acc += std::pow(v[0], q) * std::pow(b[0], e * q) * std::pow(b[0], k0) / k0;
                    } else {
                        acc += std::pow(v[i], q) * power_piece(prev, b[i], k);
                    }
                }
                prev = b[i];
            }
            break;
        }
        case Scale::Maximal: {
            acc = maximal_power_integral(f, q / m, q);
            if (std::isinf(acc)) return kInf;
            if (I > 0.0) {
                double k = q - q / m;  // tail (I/t)^q t^{q/m} dt/t past the support
                if (k <= 0.0) return kInf;
                acc += std::pow(I, q) * std::pow(b.back(), -k) / k;
            }
            break;
        }
        case Scale::L1q: {
            acc = maximal_power_integral(f, q, q);
            // region between last breakpoint and T (if any) has g = I/t
            double last = b.back();
            if (T > last && I > 0.0) acc += std::pow(I, q) * std::log(T / last);
            break;
        }
    }
    if (std::isinf(acc)) return kInf;
    return std::pow(acc, 1.0 / q);
}

EquivalenceChain norm_equivalence_check(const DecreasingProfile& f, double m, double q) {
    if (!(m > 1.0)) throw DomainError("norm equivalence needs m > 1");
    EquivalenceChain c;
    c.lhs = lorentz_norm(f, LorentzIndex(m, q, Scale::Standard));
    c.mid = lorentz_norm(f, LorentzIndex(m, q, Scale::Maximal));
    c.rhs = m / (m - 1.0) * c.lhs;
    const double tol = 1e-8;
    c.holds = c.lhs <= c.mid * (1.0 + tol) && c.mid <= c.rhs * (1.0 + tol);
    return c;
}

double l1q_norm(const DecreasingProfile& f, double q) { return lorentz_norm(f, LorentzIndex(1.0, q, Scale::L1q)); }

namespace {

// R_delta evaluated through prefix sums of the exact per-step integrals.
class HardyTransform {
public:
    HardyTransform(const DecreasingProfile& r, const HardyParams& hp)
        : r_(r), k_(hp.beta + 1.0), lower_(hp.delta < 1.0), cum_(r.size() + 1, 0.0) {
        const auto& b = r.breakpoints();
        double prev = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            cum_[i + 1] = cum_[i] + piece(i, prev, b[i]);
            prev = b[i];
        }
    }

    double operator()(double t) const {
        const auto& b = r_.breakpoints();
        if (b.empty()) return 0.0;
        auto i = static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), t) - b.begin());
        if (i >= b.size()) return lower_ ? cum_.back() : 0.0;
        double lo = i == 0 ? 0.0 : b[i - 1];
        double partial = piece(i, lo, t);  // over (lo, t]
        return lower_ ? cum_[i] + partial : (cum_.back() - cum_[i]) - partial;
    }

private:
    double piece(std::size_t i, double lo, double hi) const {
        if (hi <= lo) return 0.0;
        const auto& b = r_.breakpoints();
        const auto& v = r_.values();
        if (i == 0 && r_.head_exponent() > 0.0) {
            double e = r_.head_exponent(), kk = k_ - e;
            return v[0] * std::pow(b[0], e) * (std::pow(hi, kk) - std::pow(lo, kk)) / kk;
        }
        return v[i] * (std::pow(hi, k_) - std::pow(lo, k_)) / k_;
    }

    const DecreasingProfile& r_;
    double k_;
    bool lower_;
    std::vector<double> cum_;
};

}  // namespace

double hardy_transform_at(const DecreasingProfile& r, const HardyParams& hp, double t) {
    return HardyTransform(r, hp)(t);
}

SampledFunction hardy_transform(const DecreasingProfile& r, const HardyParams& hp) {
    HardyTransform R(r, hp);
    std::vector<double> x = r.breakpoints(), y;
    y.reserve(x.size());
    for (double t : x) y.push_back(R(t));
    return SampledFunction(std::move(x), std::move(y));
}

HardyCheck hardy_sides(const DecreasingProfile& r, const HardyParams& hp) {
    HardyCheck out;
    const auto& b = r.breakpoints();
    const auto& v = r.values();
    const double lam = hp.lambda, beta = hp.beta, delta = hp.delta;
    if (b.empty()) return out;
    const double e = r.head_exponent();

    // rhs, exact per step
    double rhs = 0.0, prev = 0.0;
    const double kr = lam * (beta + delta);
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (v[i] > 0.0) {
            if (i == 0 && e > 0.0) {
                double k0 = kr - e * lam;
                rhs += k0 > 0.0 ? std::pow(v[0], lam) * std::pow(b[0], e * lam) * std::pow(b[0], k0) / k0 : kInf;
            } else {
                rhs += std::pow(v[i], lam) * power_piece(prev, b[i], kr);
            }
        }
        prev = b[i];
    }

    // lhs
    HardyTransform Rt(r, hp);
    auto integrand = [&](double t) {
        double R = Rt(t);
        return std::pow(R / t, lam) * std::pow(t, delta * lam - 1.0);
    };
    double lhs = 0.0;
    if (delta < 1.0) {
        // first interval: R = c t^{beta+1-e}
        double k = beta + 1.0 - e;
        double c = v[0] * std::pow(b[0], e) / k;
        double k0 = lam * (k - 1.0 + delta);
        lhs += k0 > 0.0 ? std::pow(c, lam) * std::pow(b[0], k0) / k0 : kInf;
        for (std::size_t i = 1; i < b.size(); ++i) lhs += log_quad(integrand, b[i - 1], b[i]);
        double Rend = Rt(b.back());
        double kt = (1.0 - delta) * lam;  // tail with constant R
        lhs += std::pow(Rend, lam) * std::pow(b.back(), -kt) / kt;
    } else {
        double R0 = Rt(0.0);
        double eps = b[0] * 1e-30;
        double kh = (delta - 1.0) * lam;
        lhs += std::pow(R0, lam) * std::pow(eps, kh) / kh;
        lhs += log_quad(integrand, eps, b[0]);
        for (std::size_t i = 1; i < b.size(); ++i) lhs += log_quad(integrand, b[i - 1], b[i]);
    }
    out.lhs = lhs;
    out.rhs = rhs;
    out.finite = std::isfinite(lhs) && std::isfinite(rhs);
    out.ratio = (rhs > 0.0 && out.finite) ? lhs / rhs : 1.0;
    return out;
}

std::vector<DecreasingProfile> hardy_corpus(std::size_t count, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> steps(1, 40);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DecreasingProfile> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        int k = steps(rng);
        std::vector<double> w(k), val(k);
        double spread = 2.0 + 8.0 * u(rng);  // decades covered by the step widths
        double sum = 0.0;
        for (auto& x : w) sum += x = std::exp(spread * u(rng));
        if (u(rng) < 0.5) std::sort(w.begin(), w.end());
        double acc = 0.0;
        std::vector<double> b(k);
        for (int i = 0; i < k; ++i) b[i] = acc += w[i] / sum;
        b.back() = 1.0;
        double level = std::exp(4.0 * u(rng));
        for (int i = 0; i < k; ++i) {
            val[i] = level;
            level *= u(rng) < 0.2 ? 1.0 : u(rng);
        }
        out.emplace_back(std::move(b), std::move(val), 1.0);
    }
    return out;
}

std::vector<DecreasingProfile> hardy_extremal_family(const HardyParams& hp, std::size_t count) {
    // cell averages of s^{-a} on geometric steps over (1e-12, 1], a just below beta + delta
    std::vector<DecreasingProfile> out;
    const double crit = hp.beta + hp.delta;
    const int steps = 72;
    std::vector<double> b(steps);
    for (int i = 0; i < steps; ++i) b[i] = std::pow(10.0, -12.0 + 12.0 * (i + 1) / steps);
    for (std::size_t j = 0; j < count; ++j) {
        double a = crit * (1.0 - 0.4 * std::pow(0.8, static_cast<double>(j)));
        std::vector<double> v(steps);
        double prev = 0.0;
        for (int i = 0; i < steps; ++i) {
            double k = 1.0 - a;
            v[i] = std::fabs(k) < 1e-12 ? std::log(b[i] / std::max(prev, 1e-300)) / (b[i] - prev)
                                        : (std::pow(b[i], k) - (prev > 0 ? std::pow(prev, k) : 0.0)) / k / (b[i] - prev);
            if (i == 0 && a >= 1.0) v[i] = std::pow(b[0], -a);
            prev = b[i];
        }
        for (int i = 1; i < steps; ++i) v[i] = std::min(v[i], v[i - 1]);
        out.emplace_back(b, std::move(v), 1.0);
    }
    return out;
}

double hardy_constant(const HardyParams& hp) {
    static std::mutex mu;
    static std::map<std::tuple<double, double, double>, double> cache;
    auto key = std::make_tuple(hp.beta, hp.delta, hp.lambda);
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto corpus = hardy_corpus(160, 0x5eed2024ULL);
    auto extremal = hardy_extremal_family(hp, 40);
    corpus.insert(corpus.end(), extremal.begin(), extremal.end());
    double worst = 0.0;
    for (const auto& prof : corpus) {
        auto s = hardy_sides(prof, hp);
        if (s.finite && s.rhs > 0.0) worst = std::max(worst, s.ratio);
    }
    double c = 1.05 * worst;
    std::lock_guard<std::mutex> lock(mu);
    cache[key] = c;
    return c;
}

HardyCheck hardy_inequality_check(const DecreasingProfile& r, const HardyParams& hp) {
    HardyCheck out = hardy_sides(r, hp);
    out.constant = hardy_constant(hp);
    if (out.finite && out.rhs > 0.0) out.holds = out.lhs <= out.constant * out.rhs;
    return out;
}

ExponentFit fit_exponent(const StepProfile& p, double s_lo, double s_hi) {
    if (!(s_lo > 0.0) || !(s_hi > s_lo) || s_hi > p.total_measure() * (1.0 + 1e-12))
        throw DomainError("fit window must satisfy 0 < s_lo < s_hi <= |Omega|");
    std::vector<double> xs, ys;
    const auto& b = p.breakpoints();
    const auto& v = p.values();
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i] < s_lo || b[i] > s_hi) continue;
        if (!(v[i] > 0.0)) throw DomainError("profile must be strictly positive on the fit window");
        xs.push_back(std::log(b[i]));
        ys.push_back(std::log(v[i]));
    }
    if (xs.size() < 8) throw InsufficientDataError("fewer than 8 breakpoints in the fit window");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    ExponentFit f;
    f.points = xs.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.slope_stderr = std::sqrt(std::max(0.0, syy - f.slope * sxy) / (n - 2.0) / sxx);
    return f;
}

}  // namespace symmcomp::lorentz
