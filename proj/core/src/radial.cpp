#include "symmcomp/radial.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <memory>
#include <sstream>

#include "symmcomp/csv.hpp"
#include "symmcomp/errors.hpp"

namespace symmcomp::radial {

namespace {

constexpr double kInf = INFINITY;

// int_lo^hi s^x ds, exact.
double pint(double lo, double hi, double x) {
    if (!(hi > lo)) return 0.0;
    const double k = x + 1.0;
    if (lo == 0.0) return k > 0.0 ? std::pow(hi, k) / k : kInf;
    const double L = std::log(hi / lo);
    if (std::fabs(k) < 1e-14) return L;
    return std::pow(lo, k) * std::expm1(k * L) / k;
}

bool near(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b)); }

// W(s) = a + c s^k on (lo, hi].
struct Seg {
    double lo, hi, a, c, k;
};

std::vector<Seg> segments(const Datum& f, double b) {
    auto ad = f.weighted_antiderivative(b);
    std::vector<Seg> out;
    for (std::size_t j = 0; j < ad.size(); ++j)
        out.push_back({f.pieces()[j].lo, f.pieces()[j].hi, ad[j].a, ad[j].c, ad[j].k});
    return out;
}

// Exact int_t^T s^x W(s) ds for a piecewise W, with suffix sums cached.
class PowerTail {
public:
    PowerTail(std::vector<Seg> segs, double x) : segs_(std::move(segs)), x_(x), suffix_(segs_.size() + 1, 0.0) {
        for (std::size_t j = segs_.size(); j-- > 0;) suffix_[j] = suffix_[j + 1] + part(j, segs_[j].lo, segs_[j].hi);
    }
    double operator()(double t) const {
        if (segs_.empty() || t >= segs_.back().hi) return 0.0;
        auto it = std::upper_bound(segs_.begin(), segs_.end(), t, [](double v, const Seg& s) { return v < s.hi; });
        auto j = static_cast<std::size_t>(it - segs_.begin());
        if (t <= 0.0) return suffix_[0];
        return part(j, std::max(t, segs_[j].lo), segs_[j].hi) + suffix_[j + 1];
    }

private:
    double part(std::size_t j, double lo, double hi) const {
        const Seg& s = segs_[j];
        double r = 0.0;
        if (s.a != 0.0) r += s.a * pint(lo, hi, x_);
        if (s.c != 0.0) r += s.c * pint(lo, hi, x_ + s.k);
        return r;
    }
    std::vector<Seg> segs_;
    double x_;
    std::vector<double> suffix_;
};

// Cumulative integrals of a nonnegative g on (0, T] over a logarithmic grid,
// with Gauss-Kronrod per grid interval and a power-law head below the grid.
class LogCumulative {
public:
    LogCumulative(std::function<double(double)> g, double T, const std::vector<double>& breaks)
        : g_(std::move(g)), T_(T) {
        const double lo = T * 1e-60;
        const int per_decade = 8;
        for (int i = 0; i <= 60 * per_decade; ++i) grid_.push_back(lo * std::pow(10.0, double(i) / per_decade));
        grid_.back() = T;
        for (double b : breaks)
            if (b > lo && b < T) grid_.push_back(b);
        std::sort(grid_.begin(), grid_.end());
        grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
        const std::size_t n = grid_.size();
        cum_.assign(n, 0.0);
        tail_.assign(n, 0.0);
        cum_[0] = head(grid_[0]);
        std::vector<double> segs(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) segs[i] = piece(grid_[i], grid_[i + 1]);
        for (std::size_t i = 1; i < n; ++i) cum_[i] = cum_[i - 1] + segs[i - 1];
        for (std::size_t i = n - 1; i-- > 0;) tail_[i] = tail_[i + 1] + segs[i];
    }

    double from_zero(double s) const {
        if (s <= 0.0) return 0.0;
        if (s < grid_[0]) return head(s);
        if (s >= T_) return cum_.back();
        std::size_t i = locate(s);
        return cum_[i] + piece(grid_[i], s);
    }
    double to_end(double s) const {
        if (s >= T_) return 0.0;
        if (s < grid_[0]) return (cum_[0] - head(s)) + tail_[0];
        std::size_t i = locate(s);
        return piece(s, grid_[i + 1]) + tail_[i + 1];
    }

private:
    std::size_t locate(double s) const {
        auto it = std::upper_bound(grid_.begin(), grid_.end(), s);
        return static_cast<std::size_t>(it - grid_.begin()) - 1;
    }
    double piece(double a, double b) const {
        if (!(b > a)) return 0.0;
        auto h = [&](double u) {
            double t = std::exp(u);
            return g_(t) * t;
        };
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(h, std::log(a), std::log(b), 0, 0.0);
    }
    // int_0^s g assuming g(t) ~ g(s) (t/s)^kappa below s
    double head(double s) const {
        double gs = g_(s);
        if (!(gs > 0.0)) return 0.0;
        if (!std::isfinite(gs)) return kInf;
        double gh = g_(0.5 * s);
        double kappa = std::log(gs / gh) / std::log(2.0);
        if (!(kappa > -1.0 + 1e-9)) return kInf;
        return gs * s / (kappa + 1.0);
    }

    std::function<double(double)> g_;
    double T_;
    std::vector<double> grid_, cum_, tail_;
};

std::vector<double> piece_breaks(const Datum& f) {
    std::vector<double> b;
    for (const auto& p : f.pieces()) b.push_back(p.hi);
    return b;
}

}  // namespace

// ------------------------------------------------------------------ params

ProblemParams& ProblemParams::finalize() {
    if (N < 3) throw DomainError("dimension N must be >= 3");
    if (!(p > 1.0) || !(p < N)) throw DomainError("exponent p must lie in (1, N)");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(beta_growth >= alpha)) throw DomainError("beta_growth must be >= alpha");
    if (!(domain_measure > 0.0)) throw DomainError("|Omega| must be positive");
    if (!(B >= 0.0) || !std::isfinite(B)) throw DomainError("B must be finite and >= 0");
    if (!(Fbound >= 0.0) || !std::isfinite(Fbound)) throw DomainError("Fbound must be finite and >= 0");
    if (!(m >= 1.0)) throw DomainError("datum exponent m must be >= 1");
    if (!(q > 0.0)) throw DomainError("datum exponent q must be positive");
    if (kind == Kind::Convection && !(m < double(N) / p))
        throw DomainError("convection requires m < N/p");
    if (kind == Kind::Drift && !(m > 1.0)) throw DomainError("drift requires m > 1");
    omega_N = rearrange::unit_ball_volume(N);
    sigma_N = rearrange::isoperimetric_constant(N);
    return *this;
}

// ------------------------------------------------------------------- datum

Datum::Datum(std::vector<Piece> pieces, double total) : pieces_(std::move(pieces)), total_(total) {
    if (!(total_ > 0.0)) throw DomainError("datum total measure must be positive");
    if (pieces_.empty()) throw DomainError("datum needs at least one piece");
    double prev_hi = 0.0, prev_end = kInf;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const auto& p = pieces_[i];
        if (p.lo != prev_hi || !(p.hi > p.lo)) throw DomainError("datum pieces must tile (0, |Omega|]");
        if (!(p.c >= 0.0) || !std::isfinite(p.c)) throw DomainError("datum coefficients must be finite and >= 0");
        if (p.e > 0.0 || !(p.e > -1.0)) throw DomainError("datum exponents must lie in (-1, 0]");
        if (p.c > 0.0 && p.lo == 0.0 && p.e <= -1.0) throw DomainError("datum is not integrable at 0");
        double start = p.lo > 0.0 ? p.c * std::pow(p.lo, p.e) : kInf;
        if (p.lo > 0.0 && start > prev_end * (1.0 + 1e-12)) throw DomainError("datum must be nonincreasing");
        prev_end = p.c * std::pow(p.hi, p.e);
        prev_hi = p.hi;
    }
    if (!near(prev_hi, total_, 1e-12)) throw DomainError("datum pieces must end at |Omega|");
    pieces_.back().hi = total_;
}

Datum Datum::zero(double total) { return Datum({{0.0, total, 0.0, 0.0}}, total); }
Datum Datum::constant(double total, double c) { return Datum({{0.0, total, c, 0.0}}, total); }
Datum Datum::power_law(double total, double c, double m) {
    if (!(m > 1.0)) throw DomainError("power-law datum needs m > 1 to be integrable");
    return Datum({{0.0, total, c, -1.0 / m}}, total);
}
Datum Datum::point_mass(double total, double mass, double s0) {
    if (!(s0 > 0.0) || !(s0 <= total)) throw DomainError("point mass support must lie in (0, |Omega|]");
    if (s0 >= total) return constant(total, mass / total);
    return Datum({{0.0, s0, mass / s0, 0.0}, {s0, total, 0.0, 0.0}}, total);
}

Datum Datum::from_profile(const DecreasingProfile& prof) {
    const auto& b = prof.breakpoints();
    const auto& v = prof.values();
    const double T = prof.total_measure();
    std::vector<Piece> pieces;
    double lo = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i == 0 && prof.head_exponent() > 0.0) {
            double e = prof.head_exponent();
            pieces.push_back({0.0, b[0], v[0] * std::pow(b[0], e), -e});
        } else {
            pieces.push_back({lo, b[i], v[i], 0.0});
        }
        lo = b[i];
    }
    if (lo < T * (1.0 - 1e-12)) pieces.push_back({lo, T, 0.0, 0.0});
    return Datum(std::move(pieces), T);
}

bool Datum::is_zero() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.c == 0.0; });
}

double Datum::value(double s) const {
    if (s <= 0.0) return kInf;
    for (const auto& p : pieces_)
        if (s <= p.hi) return p.c * std::pow(s, p.e);
    return 0.0;
}

double Datum::weighted_cumulative(double s, double b) const {
    double acc = 0.0;
    for (const auto& p : pieces_) {
        if (s <= p.lo) break;
        if (p.c != 0.0) acc += p.c * pint(p.lo, std::min(s, p.hi), p.e - b);
    }
    return acc;
}

double Datum::cumulative(double s) const { return weighted_cumulative(s, 0.0); }

double Datum::average(double s) const {
    if (!(s > 0.0)) return kInf;
    return cumulative(std::min(s, total_)) / s;
}

std::vector<Datum::Antiderivative> Datum::weighted_antiderivative(double b) const {
    std::vector<Antiderivative> out;
    double P = 0.0;
    for (const auto& p : pieces_) {
        double k = p.e - b + 1.0;
        Antiderivative ad{P, 0.0, k};
        if (p.c != 0.0) {
            if (p.lo == 0.0 && !(k > 0.0)) throw DomainError("weighted datum integral diverges at 0");
            if (std::fabs(k) < 1e-14) throw UnsupportedCase("logarithmic weighted antiderivative");
            ad.c = p.c / k;
            ad.a = P - (p.lo > 0.0 ? ad.c * std::pow(p.lo, k) : 0.0);
            P += p.c * pint(p.lo, p.hi, p.e - b);
        }
        out.push_back(ad);
    }
    return out;
}

Datum Datum::truncated(double level) const {
    if (!(level > 0.0)) throw DomainError("truncation level must be positive");
    if (std::isinf(level)) return *this;
    std::vector<Piece> out;
    for (const auto& p : pieces_) {
        double hi_val = p.c * std::pow(p.hi, p.e);  // smallest value on the piece
        double lo_val = p.lo > 0.0 ? p.c * std::pow(p.lo, p.e) : (p.e < 0.0 && p.c > 0.0 ? kInf : p.c);
        if (lo_val <= level) {
            out.push_back(p);
        } else if (hi_val >= level) {
            out.push_back({p.lo, p.hi, level, 0.0});
        } else {
            double cross = std::pow(level / p.c, 1.0 / p.e);
            cross = std::clamp(cross, p.lo, p.hi);
            if (cross > p.lo) out.push_back({p.lo, cross, level, 0.0});
            if (cross < p.hi) out.push_back({cross, p.hi, p.c, p.e});
        }
    }
    return Datum(std::move(out), total_);
}

Datum Datum::scaled(double factor) const {
    if (!(factor >= 0.0)) throw DomainError("scale factor must be >= 0");
    auto out = pieces_;
    for (auto& p : out) p.c *= factor;
    return Datum(std::move(out), total_);
}

DecreasingProfile Datum::sample(const std::vector<double>& breakpoints) const {
    std::vector<double> vals;
    vals.reserve(breakpoints.size());
    double prev = 0.0, prevF = 0.0, last = kInf;
    for (double b : breakpoints) {
        double F = cumulative(b);
        double v = std::min(last, (F - prevF) / (b - prev));
        vals.push_back(std::max(v, 0.0));
        last = vals.back();
        prev = b;
        prevF = F;
    }
    return DecreasingProfile(breakpoints, std::move(vals), total_);
}

// ----------------------------------------------------------- bound profile

BoundProfile::BoundProfile(std::function<double(double)> eval, double C, double gamma, double delta, double total,
                           std::vector<NamedConstant> provenance)
    : eval_(std::move(eval)), C_(C), gamma_(gamma), delta_(delta), total_(total), prov_(std::move(provenance)) {}

rearrange::StepProfile BoundProfile::sampled(const std::vector<double>& ts) const {
    std::vector<double> v;
    v.reserve(ts.size());
    for (double t : ts) v.push_back(eval_(t));
    return rearrange::StepProfile(ts, std::move(v), total_);
}

std::string BoundProfile::provenance_block() const {
    std::ostringstream os;
    for (const auto& c : prov_) os << c.key << '=' << fmt17(c.value) << '\n';
    return os.str();
}

std::string BoundProfile::to_csv(const std::vector<double>& ts) const {
    std::ostringstream os;
    os << "t,bound\n";
    for (double t : ts) os << fmt17(t) << ',' << fmt17(eval_(t)) << '\n';
    return os.str();
}

// -------------------------------------------------------------- thresholds

double convection_threshold(const ProblemParams& P) {
    if (!(P.m < double(P.N) / P.p)) throw DomainError("convection threshold needs m < N/p");
    return std::pow(P.alpha, 1.0 / (P.p - 1.0)) * std::pow(P.omega_N, 1.0 / P.N) * (P.N - P.p * P.m) /
           ((P.p - 1.0) * P.m);
}

double drift_threshold(const ProblemParams& P) {
    if (!(P.m > 1.0)) throw DomainError("drift threshold vanishes at m = 1");
    return P.alpha * std::pow(P.omega_N, 1.0 / P.N) * P.N * (P.m - 1.0) / P.m;
}

DeltaChoice choose_delta(const ProblemParams& P) {
    const double Bc = convection_threshold(P);
    if (!(P.B < Bc))
        throw ThresholdError("B = " + fmt17(P.B) + " is not below the convection threshold " + fmt17(Bc), P.B, Bc);
    if (P.B == 0.0) return {kInf, 0.0};
    DeltaChoice d;
    d.delta = std::sqrt(Bc / P.B);
    d.gamma = d.delta * P.B / (std::pow(P.alpha, 1.0 / (P.p - 1.0)) * P.sigma_N);
    const double crit = (P.N - P.p * P.m) / ((P.p - 1.0) * P.N * P.m);
    if (!(d.gamma < crit)) throw ThresholdError("exponent gamma reached the critical value", d.gamma, crit);
    return d;
}

// -------------------------------------------------------------- convection

namespace {

struct ConvectionConstants {
    double C, C_delta, exp_B, exp_F;
};

ConvectionConstants convection_constants(const ProblemParams& P, const DeltaChoice& d) {
    const double p = P.p, ap = std::pow(P.alpha, 1.0 / (p - 1.0));
    ConvectionConstants k{};
    if (p >= 2.0 || std::isinf(d.delta)) {
        k.C_delta = 1.0;
    } else {
        const double r = 1.0 / (p - 1.0);
        k.C_delta = std::pow(1.0 - std::pow(d.delta, -1.0 / (r - 1.0)), 1.0 - r);
    }
    k.exp_B = std::exp(P.N * P.B / (p * (P.N - p)));
    k.exp_F = std::exp(P.Fbound * P.N * std::pow(P.domain_measure, 1.0 / P.N) / (ap * P.sigma_N));
    k.C = 2.0 * k.C_delta / (ap * std::pow(P.sigma_N, P.p_conj())) * k.exp_B * k.exp_F;
    return k;
}

// C t^{-gamma} int_t^T s^{p'/N + gamma - 1} ftilde(s)^{1/(p-1)} ds
std::function<double(double)> convection_evaluator(const ProblemParams& P, double C, double gamma, const Datum& f) {
    const double T = P.domain_measure;
    if (f.is_zero()) return [](double) { return 0.0; };
    const double x = P.p_conj() / P.N + gamma - 1.0;
    if (P.p == 2.0) {
        // ftilde = F(s)/s with F exact per piece
        auto tail = std::make_shared<PowerTail>(segments(f, 0.0), x - 1.0);
        return [tail, C, gamma, T](double t) {
            if (t >= T) return 0.0;
            return C * std::pow(t, -gamma) * (*tail)(t);
        };
    }
    const double e = 1.0 / (P.p - 1.0);
    auto g = [f, x, e](double s) { return std::pow(s, x) * std::pow(f.average(s), e); };
    auto cum = std::make_shared<LogCumulative>(g, T, piece_breaks(f));
    return [cum, C, gamma, T](double t) {
        if (t >= T) return 0.0;
        return C * std::pow(t, -gamma) * cum->to_end(t);
    };
}

}  // namespace

BoundProfile convection_profile(const ProblemParams& P, const Datum& fbar) {
    if (P.kind != Kind::Convection) throw DomainError("convection_profile needs convection parameters");
    const auto d = choose_delta(P);
    const auto k = convection_constants(P, d);
    std::vector<NamedConstant> prov{{"N", double(P.N)},
                                    {"p", P.p},
                                    {"alpha", P.alpha},
                                    {"B", P.B},
                                    {"B_crit", convection_threshold(P)},
                                    {"Fbound", P.Fbound},
                                    {"delta", d.delta},
                                    {"gamma", d.gamma},
                                    {"C_delta", k.C_delta},
                                    {"exp_B", k.exp_B},
                                    {"exp_F", k.exp_F},
                                    {"safety", 2.0},
                                    {"C", k.C}};
    return BoundProfile(convection_evaluator(P, k.C, d.gamma, fbar), k.C, d.gamma, d.delta, P.domain_measure,
                        std::move(prov));
}

BoundProfile convection_profile(const ProblemParams& P, const DecreasingProfile& fbar) {
    return convection_profile(P, Datum::from_profile(fbar));
}

BoundProfile convection_gradient_bound(const ProblemParams& P, const BoundProfile& v, const Datum& f) {
    const double p = P.p, pc = P.p_conj(), N = P.N, T = P.domain_measure;
    const double KE = P.B + P.Fbound * std::pow(T, (p - 1.0) / N);
    const double kappa = KE * P.sigma_N;
    const double Cg = 2.0 * std::pow(2.0, 1.0 / p) / (P.alpha * P.sigma_N);
    std::vector<NamedConstant> prov{{"K_E", KE}, {"kappa", kappa}, {"safety", 2.0}, {"C_grad", Cg}};
    if (f.is_zero()) return BoundProfile([](double) { return 0.0; }, Cg, v.gamma(), v.delta(), T, prov);

    auto inner = [v, f, kappa, p, N](double t) {
        double vt = v(t);
        return kappa * std::pow(vt, p - 1.0) * std::pow(t, -(p - 1.0) / N) + f.average(t) * std::pow(t, 1.0 / N);
    };
    auto outer = [v, f, kappa, p, pc, N](double t) {
        double vt = v(t);
        return std::pow(kappa, pc) * std::pow(vt, p) * std::pow(t, -p / N) +
               std::pow(f.average(t), pc) * std::pow(t, pc / N);
    };
    auto brk = piece_breaks(f);
    auto I = std::make_shared<LogCumulative>(inner, T, brk);
    auto O = std::make_shared<LogCumulative>(outer, T, brk);
    auto eval = [I, O, Cg, pc, T](double s) {
        if (!(s > 0.0)) return kInf;
        s = std::min(s, T);
        return Cg * (I->from_zero(s) / s + std::pow(O->to_end(s) / s, 1.0 / pc));
    };
    return BoundProfile(eval, Cg, v.gamma(), v.delta(), T, std::move(prov));
}

// ------------------------------------------------------------------- drift

namespace {

struct DriftConstants {
    double b, K, Cz, C1;
};

DriftConstants drift_constants(const ProblemParams& P) {
    const double Bc = drift_threshold(P);
    if (!(P.B < Bc)) throw ThresholdError("B = " + fmt17(P.B) + " is not below the drift threshold " + fmt17(Bc), P.B, Bc);
    DriftConstants k{};
    const double as = P.alpha * P.sigma_N;
    k.b = P.B / as;
    k.K = std::exp((P.N * P.B / (P.p * (P.N - P.p)) + P.N * P.Fbound * std::pow(P.domain_measure, 1.0 / P.N)) / as);
    k.Cz = 2.0 * std::pow(k.K, 1.0 / (P.p - 1.0)) / (std::pow(P.alpha, 1.0 / (P.p - 1.0)) * std::pow(P.sigma_N, P.p_conj()));
    k.C1 = 2.0 * k.K / as;
    return k;
}

}  // namespace

BoundProfile drift_profile(const ProblemParams& P, const Datum& f) {
    if (P.kind != Kind::Drift) throw DomainError("drift_profile needs drift parameters");
    const auto k = drift_constants(P);
    const double T = P.domain_measure, p = P.p;
    std::vector<NamedConstant> prov{{"N", double(P.N)}, {"p", p},         {"alpha", P.alpha},
                                    {"B", P.B},         {"B_crit", drift_threshold(P)},
                                    {"Fbound", P.Fbound}, {"weight_exponent", k.b},
                                    {"exp_factor", k.K}, {"safety", 2.0}, {"C", k.Cz}};
    const double x = P.p_conj() * (1.0 / P.N - 1.0) + k.b / (p - 1.0);
    std::function<double(double)> eval;
    if (f.is_zero()) {
        eval = [](double) { return 0.0; };
    } else if (p == 2.0) {
        auto tail = std::make_shared<PowerTail>(segments(f, k.b), x);
        const double C = k.Cz;
        eval = [tail, C, T](double t) { return t >= T ? 0.0 : C * (*tail)(t); };
    } else {
        const double b = k.b, e = 1.0 / (p - 1.0);
        auto g = [f, b, x, e](double t) { return std::pow(t, x) * std::pow(f.weighted_cumulative(t, b), e); };
        auto cum = std::make_shared<LogCumulative>(g, T, piece_breaks(f));
        const double C = k.Cz;
        eval = [cum, C, T](double t) { return t >= T ? 0.0 : C * cum->to_end(t); };
    }
    return BoundProfile(eval, k.Cz, k.b, 0.0, T, std::move(prov));
}

BoundProfile drift_profile(const ProblemParams& P, const DecreasingProfile& fbar) {
    return drift_profile(P, Datum::from_profile(fbar));
}

BoundProfile drift_gradient_bound(const ProblemParams& P, const Datum& f) {
    if (P.kind != Kind::Drift) throw DomainError("drift_gradient_bound needs drift parameters");
    const auto k = drift_constants(P);
    const double T = P.domain_measure, pc = P.p_conj(), b = k.b;
    const double w = 1.0 / P.N - 1.0 + b;
    std::vector<NamedConstant> prov{{"weight_exponent", b}, {"exp_factor", k.K}, {"safety", 2.0}, {"C1", k.C1}};
    if (f.is_zero()) return BoundProfile([](double) { return 0.0; }, k.C1, b, 0.0, T, prov);
    auto inner = [f, w, b](double t) { return std::pow(t, w) * f.weighted_cumulative(t, b); };
    auto outer = [f, w, b, pc](double t) { return std::pow(t, pc * w) * std::pow(f.weighted_cumulative(t, b), pc); };
    auto brk = piece_breaks(f);
    auto I = std::make_shared<LogCumulative>(inner, T, brk);
    auto O = std::make_shared<LogCumulative>(outer, T, brk);
    const double C1 = k.C1;
    auto eval = [I, O, C1, pc, T](double s) {
        if (!(s > 0.0)) return kInf;
        s = std::min(s, T);
        return C1 * (I->from_zero(s) / s + std::pow(O->to_end(s) / s, 1.0 / pc));
    };
    return BoundProfile(eval, C1, b, 0.0, T, std::move(prov));
}

// ------------------------------------------------------------- symmetrized

double symmetrized_value(const ProblemParams& P, double C, double gamma, const Datum& f, double r) {
    if (P.p != 2.0) throw DomainError("the symmetrized problem is evaluated for p = 2 only");
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    const double t = P.omega_N * std::pow(r, P.N);
    if (t >= P.domain_measure || f.is_zero() || C == 0.0) return 0.0;
    PowerTail tail(segments(f, 0.0), 2.0 / P.N + gamma - 2.0);
    return C * std::pow(t, -gamma) * tail(t);
}

std::vector<double> symmetrized_residual(const ProblemParams& P, double C, double gamma, const Datum& f,
                                         const std::vector<double>& radii, double h) {
    if (P.p != 2.0) throw DomainError("the symmetrized problem is evaluated for p = 2 only");
    if (!(h > 0.0)) throw DomainError("difference step must be positive");
    const int N = P.N;
    const double R = P.radius();
    PowerTail tail(segments(f, 0.0), 2.0 / N + gamma - 2.0);
    auto v = [&](double r) {
        double t = P.omega_N * std::pow(r, N);
        if (t >= P.domain_measure || C == 0.0) return 0.0;
        return C * std::pow(t, -gamma) * tail(t);
    };
    std::vector<double> res;
    res.reserve(radii.size());
    for (double r : radii) {
        if (!(r - h > 0.0)) throw DomainError("radius too close to the origin for the difference stencil");
        if (r + h >= R) throw DomainError("radius too close to the boundary for the difference stencil");
        double vm = v(r - h), v0 = v(r), vp = v(r + h);
        double d1 = (vp - vm) / (2.0 * h);
        double d2 = (vp - 2.0 * v0 + vm) / (h * h);
        double lap = d2 + (N - 1.0) / r * d1;
        double div = (d1 + (N - 2.0) * v0 / r) / r;  // div(v x / |x|^2)
        double src = std::pow(P.omega_N, 2.0 / N) * N * N * C * f.value(P.omega_N * std::pow(r, N));
        res.push_back(-lap - gamma * N * div - src);
    }
    return res;
}

// --------------------------------------------------------------- sharpness

double sharpness_B(const ProblemParams& P, double gamma_B) {
    return gamma_B * P.alpha * P.N * std::pow(P.omega_N, 1.0 / P.N);
}

SharpnessExponents sharpness_exponents(const ProblemParams& P) {
    if (P.p != 2.0) throw DomainError("sharpness exponents are defined for p = 2");
    SharpnessExponents s;
    s.gamma_B = P.B / (P.alpha * P.N * std::pow(P.omega_N, 1.0 / P.N));
    const double crit = (P.N - 2.0 * P.m) / (P.N * P.m);
    s.in_window = s.gamma_B >= crit * (1.0 - 1e-12) && s.gamma_B < 1.0;
    s.u_slope = -s.gamma_B;
    const double edge = (P.N - 1.0) / P.N;
    s.grad_borderline = near(s.gamma_B, edge);
    if (s.in_window && s.gamma_B < edge && !s.grad_borderline) s.grad_slope = -(s.gamma_B + 1.0 / P.N);
    return s;
}

// -------------------------------------------------------------- regularity

Regularity predicted_regularity(const ProblemParams& P) {
    const double N = P.N, p = P.p, m = P.m, q = P.q;
    const double m_low = std::max(1.0, N / (N * (p - 1.0) + 1.0));
    const double ps_conj = N * p / (N * p - N + p);
    const double pq = std::isinf(q) ? q : (p - 1.0) * q;
    if (near(m, ps_conj)) throw UnsupportedCase("m = (p*)' is not covered");
    if (m < m_low * (1.0 - 1e-12)) throw UnsupportedCase("m below max{1, N/(N(p-1)+1)} requires entropy solutions");
    Regularity out;
    const double u_exp = (p - 1.0) * N * m / (N - p * m);
    if (!near(m, m_low)) {
        if (m < ps_conj) {
            out.u = LorentzIndex(u_exp, pq);
            out.grad = LorentzIndex((p - 1.0) * N * m / (N - m), pq);
            out.case_label = P.kind == Kind::Convection ? "high-summability (i)" : "drift (i)";
        } else {
            out.u = LorentzIndex(u_exp, pq);
            out.energy_space = true;
            out.case_label = P.kind == Kind::Convection ? "high-summability (ii)" : "drift (ii)";
        }
        return out;
    }
    if (P.kind == Kind::Drift) throw UnsupportedCase("drift with borderline data is not covered");
    // borderline m = m_low
    const double p_edge = 2.0 - 1.0 / N;
    if (p > p_edge && !near(p, p_edge)) {
        if (P.datum_class == DatumClass::LogLorentz) {
            out.u = LorentzIndex((p - 1.0) * N / (N - p), pq);
            out.grad = LorentzIndex((p - 1.0) * N / (N - 1.0), pq);
            out.case_label = "borderline (ii)";
        } else {
            out.u = LorentzIndex((p - 1.0) * N / (N - p), INFINITY);
            out.grad = LorentzIndex((p - 1.0) * N / (N - 1.0), INFINITY);
            out.case_label = "borderline (i)";
        }
        return out;
    }
    if (near(p, p_edge)) {
        if (P.datum_class != DatumClass::LogLorentz) throw UnsupportedCase("p = 2 - 1/N needs an L^{1,q} datum");
        if (q > N / (N - 1.0) * (1.0 + 1e-12)) throw UnsupportedCase("p = 2 - 1/N needs q <= N/(N-1)");
        out.u = LorentzIndex(N / (N - 1.0), (N - 1.0) / N * q);
        out.grad = LorentzIndex(1.0, pq);
        out.case_label = "borderline (iii)";
        return out;
    }
    if (q > 1.0 / (p - 1.0) * (1.0 + 1e-12)) throw UnsupportedCase("borderline case (iv) needs q <= 1/(p-1)");
    out.u = LorentzIndex(N / (N - 1.0), pq);
    out.grad = LorentzIndex(1.0, pq);
    out.case_label = "borderline (iv)";
    return out;
}

PredictedSlopes predicted_slopes(const ProblemParams& P) {
    const double N = P.N, p = P.p, m = P.m;
    PredictedSlopes s{};
    s.u = -(N - p * m) / ((p - 1.0) * N * m);
    const double ps_conj = N * p / (N * p - N + p);
    s.grad_avg = -(N - m) / (N * m);
    s.grad_bound = m < ps_conj ? s.grad_avg : -(p - 1.0) / p;
    s.borderline = m == 1.0 || near(m, std::max(1.0, N / (N * (p - 1.0) + 1.0)));
    return s;
}

}  // namespace symmcomp::radial
