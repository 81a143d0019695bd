#include "symmcomp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <lapacke.h>

#include "symmcomp/csv.hpp"
#include "symmcomp/errors.hpp"

namespace symmcomp::solver {

namespace {

using radial::Kind;

double clamp_abs(double x, double level) { return std::isinf(level) ? x : std::clamp(x, -level, level); }

double gk(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 10, 1e-13);
}

// Solves the tridiagonal system in place; rows are equilibrated by their
// diagonal first since cell scales span many decades on graded meshes.
std::vector<double> tridiagonal_solve(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                                      std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = std::fabs(diag[i]);
        if (s == 0.0) continue;
        diag[i] /= s;
        rhs[i] /= s;
        if (i > 0) lower[i] /= s;
        if (i + 1 < n) upper[i] /= s;
    }
    // LAPACK wants dl[i] = A(i+1, i) and du[i] = A(i, i+1)
    std::vector<double> dl(lower.begin() + 1, lower.end());
    std::vector<double> du(upper.begin(), upper.end() - 1);
    if (n == 0) return rhs;
    lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, lapack_int(n), 1, dl.data(), diag.data(), du.data(), rhs.data(),
                                    lapack_int(n));
    if (info != 0) throw ConvergenceError("tridiagonal factorization failed (singular pivot)", 0, double(info));
    return rhs;
}

// Fixed geometric data of the radial finite-volume scheme.
struct Geometry {
    std::size_t n;
    std::vector<double> area;    // r_i^{N-1} at outer faces
    std::vector<double> dist;    // centre-to-centre distance across face i (last: centre to R)
    std::vector<double> wface;   // weight of u_i in the centred face value
    std::vector<double> volume;  // int_{cell} r^{N-1} dr
    std::vector<double> width;   // r_i - r_{i-1}
    std::vector<double> theta;   // weight of g_{i-1} in the centred cell gradient

    explicit Geometry(const RadialMesh& m) : n(m.size()) {
        const int N = m.N();
        area.resize(n);
        dist.resize(n);
        wface.resize(n);
        volume.resize(n);
        width.resize(n);
        theta.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = m.outer(i), rc = m.center(i);
            area[i] = std::pow(ri, N - 1);
            volume[i] = m.measure(i) / (N * m.omega());
            width[i] = ri - m.inner(i);
            theta[i] = (ri - rc) / width[i];
            if (i + 1 < n) {
                dist[i] = m.center(i + 1) - rc;
                wface[i] = (m.center(i + 1) - ri) / dist[i];
            } else {
                dist[i] = m.R() - rc;
                wface[i] = 0.0;
            }
        }
    }
};

std::vector<double> face_gradients(const Geometry& G, const std::vector<double>& u) {
    std::vector<double> g(G.n);
    for (std::size_t i = 0; i < G.n; ++i) {
        const double next = i + 1 < G.n ? u[i + 1] : 0.0;
        g[i] = (next - u[i]) / G.dist[i];
    }
    return g;
}

double cell_gradient(const Geometry& G, const std::vector<double>& g, std::size_t i) {
    const double prev = i == 0 ? 0.0 : g[i - 1];
    return G.theta[i] * prev + (1.0 - G.theta[i]) * g[i];
}

double coefficient(double g, double p, double floor) {
    return p == 2.0 ? 1.0 : std::pow(std::max(std::fabs(g), floor), p - 2.0);
}

// Everything the balance equations need besides the iterate.
struct Problem {
    Kind kind;
    int N;
    double p, alpha, level;
    std::vector<double> field;  // convection: at faces; drift: at cell centres
    std::vector<double> loads;
    double floor, peclet;
};

Problem make_problem(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field, const RadialSource& f,
                     double level, const SolverOptions& opts) {
    Problem pr{P.kind, mesh.N(), P.p, P.alpha, level, {}, {}, opts.coefficient_floor, opts.peclet_switch};
    const std::size_t n = mesh.size();
    pr.field.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double e;
        if (P.kind == Kind::Convection)
            e = field.radial(mesh.outer(i), mesh.N(), mesh.omega());
        else
            e = i == 0 ? field.first_cell(mesh.outer(0), mesh.N(), mesh.omega()) + field.bounded_at(mesh.center(0))
                       : field.radial(mesh.center(i), mesh.N(), mesh.omega());
        pr.field[i] = clamp_abs(e, level);
    }
    pr.loads = (std::isinf(level) ? f : f.truncated(level)).loads(mesh);
    return pr;
}

// Face value weight of u_i for the convective flux. Centred interpolation is
// kept while the stencil stays an M-matrix, i.e. while the cell Peclet number
// scaled by the downstream interpolation weight stays below a quarter margin
// of peclet/2 (Pe > 1.5 on uniform meshes for the default switch of 2). The
// margin keeps the diagonal away from zero on the strongly graded cells at 0.
constexpr double kMargin = 0.75;

double face_weight(const Geometry& G, std::size_t i, double velocity, double diffusivity, double peclet) {
    if (i + 1 == G.n) return 0.0;
    const double w = G.wface[i];
    const double down = velocity < 0.0 ? w : 1.0 - w;
    if (std::fabs(velocity) * G.dist[i] * down > kMargin * 0.5 * peclet * diffusivity) return velocity > 0.0 ? 1.0 : 0.0;
    return w;
}

// Weight of g_{i-1} in the drift gradient of cell i, with the same sign guard
// on the off-diagonal entries.
double drift_weight(const Geometry& G, std::size_t i, double field, double diffusivity, double peclet) {
    const double th = G.theta[i];
    const double reach = G.volume[i] / G.area[i];
    if (field < 0.0 && std::fabs(field) * reach * (1.0 - th) > kMargin * 0.5 * peclet * diffusivity) return 1.0;
    if (field > 0.0 && i > 0 && field * G.volume[i] * th > kMargin * 0.5 * peclet * diffusivity * G.area[i - 1]) return 0.0;
    return th;
}

struct Lagged {
    std::vector<double> kappa;  // diffusion coefficient at faces
    std::vector<double> psi;    // multiplier of the lower-order term (faces or cells)
};

Lagged linear_lag(std::size_t n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)}; }

Lagged lag_from(const Problem& pr, const Geometry& G, const std::vector<double>& u) {
    Lagged L;
    L.kappa.resize(G.n);
    L.psi.resize(G.n);
    auto g = face_gradients(G, u);
    for (std::size_t i = 0; i < G.n; ++i) L.kappa[i] = coefficient(g[i], pr.p, pr.floor);
    for (std::size_t i = 0; i < G.n; ++i) {
        if (pr.kind == Kind::Convection) {
            const double next = i + 1 < G.n ? u[i + 1] : 0.0;
            const double uf = G.wface[i] * u[i] + (1.0 - G.wface[i]) * next;
            double psi = coefficient(uf, pr.p, pr.floor);
            if (!std::isinf(pr.level)) psi /= 1.0 + std::pow(std::fabs(uf), pr.p - 1.0) / pr.level;
            L.psi[i] = psi;
        } else {
            const double gc = cell_gradient(G, g, i);
            double psi = coefficient(gc, pr.p, pr.floor);
            if (!std::isinf(pr.level)) psi /= 1.0 + std::pow(std::fabs(gc), pr.p - 1.0) / pr.level;
            L.psi[i] = psi;
        }
    }
    return L;
}

// Assembles and solves the linearized balance J_i - J_{i-1} (+ D_i) = -F_i.
std::vector<double> linear_step(const Problem& pr, const Geometry& G, const Lagged& L) {
    const std::size_t n = G.n;
    std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), rhs(n);
    // J_i = a_i u_i + b_i u_{i+1}
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = pr.alpha * L.kappa[i] / G.dist[i];
        if (pr.kind == Kind::Convection) {
            const double vel = pr.field[i] * L.psi[i];
            const double w = face_weight(G, i, vel, pr.alpha * L.kappa[i], pr.peclet);
            a[i] = G.area[i] * (-diff - vel * w);
            b[i] = G.area[i] * (diff - vel * (1.0 - w));
        } else {
            a[i] = -G.area[i] * diff;
            b[i] = G.area[i] * diff;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        di[i] = a[i];
        if (i + 1 < n) up[i] = b[i];
        if (i > 0) {
            lo[i] = -a[i - 1];
            di[i] -= b[i - 1];
        }
        rhs[i] = -pr.loads[i];
        if (pr.kind == Kind::Drift) {
            // D_i = V_i E_i psi_i (th g_{i-1} + (1 - th) g_i)
            const double kc = i == 0 ? L.kappa[0] : 0.5 * (L.kappa[i - 1] + L.kappa[i]);
            const double coef = G.volume[i] * pr.field[i] * L.psi[i];
            const double th = drift_weight(G, i, pr.field[i] * L.psi[i], pr.alpha * kc, pr.peclet);
            if (i > 0) {
                const double c = coef * th / G.dist[i - 1];
                lo[i] -= c;
                di[i] += c;
            }
            const double c = coef * (1.0 - th) / G.dist[i];
            di[i] -= c;
            if (i + 1 < n) up[i] += c;
        }
    }
    return tridiagonal_solve(lo, di, up, rhs);
}

std::string str(double x) { return fmt17(x); }

SolveResult package(const Problem& pr, const RadialMesh& mesh, const Geometry& G, std::vector<double> u) {
    SolveResult res;
    const std::size_t n = G.n;
    auto g = face_gradients(G, u);
    res.r.resize(n + 1);
    res.grad.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        res.r[i] = mesh.center(i);
        res.grad[i] = std::fabs(cell_gradient(G, g, i));
    }
    res.r[n] = mesh.R();
    res.grad[n] = std::fabs(g[n - 1]);
    u.push_back(0.0);
    res.u = std::move(u);
    res.measures = mesh.measures();
    res.face_grad = std::move(g);
    res.truncation_level = pr.level;
    res.coefficient_floor = pr.floor;
    res.mesh = mesh;
    return res;
}

void validate(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field, const SolverOptions& opts) {
    if (P.omega_N == 0.0) throw DomainError("problem parameters are not finalized");
    if (mesh.N() != P.N) throw DomainError("mesh dimension differs from the problem dimension");
    if (field.kind != P.kind) throw DomainError("field kind differs from the problem kind");
    if (!(field.B >= 0.0) || !(field.Fbound >= 0.0)) throw DomainError("field constants must be >= 0");
    if (field.bounded) {
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            const double r = mesh.center(i);
            if (std::fabs(field.bounded(r)) > field.Fbound * (1.0 + 1e-12))
                throw PreconditionError("bounded field part exceeds Fbound", long(i));
        }
    }
    const double Bc = P.kind == Kind::Convection ? radial::convection_threshold(P) : radial::drift_threshold(P);
    if (!(field.B < Bc)) {
        if (!opts.sharpness_mode)
            throw ThresholdError("B = " + fmt17(field.B) + " is not below the threshold " + fmt17(Bc), field.B, Bc);
        if (P.p != 2.0) throw ThresholdError("sharpness mode is limited to p = 2", field.B, Bc);
    }
    if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) throw DomainError("relaxation must lie in (0, 1]");
    if (!(opts.tol > 0.0) || opts.max_iter < 1) throw DomainError("invalid iteration controls");
}

SolveResult solve_radial(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field, const RadialSource& f,
                         double level, const SolverOptions& opts) {
    validate(P, mesh, field, opts);
    const Geometry G(mesh);
    const Problem pr = make_problem(P, mesh, field, f, level, opts);
    std::vector<double> u = linear_step(pr, G, linear_lag(G.n));
    int iterations = 1;
    double update = 0.0;
    const bool nonlinear = P.p != 2.0 || !std::isinf(level);
    if (nonlinear) {
        update = INFINITY;
        for (iterations = 1; iterations <= opts.max_iter; ++iterations) {
            std::vector<double> fresh = linear_step(pr, G, lag_from(pr, G, u));
            double diff = 0.0, size = 0.0;
            for (std::size_t i = 0; i < G.n; ++i) {
                const double next = opts.relaxation * fresh[i] + (1.0 - opts.relaxation) * u[i];
                diff = std::max(diff, std::fabs(next - u[i]));
                size = std::max(size, std::fabs(next));
                u[i] = next;
            }
            update = size > 0.0 ? diff / size : diff;
            if (!std::isfinite(update)) break;
            if (update <= opts.tol) break;
        }
        if (!(update <= opts.tol))
            throw ConvergenceError("Picard iteration did not converge", std::min(iterations, opts.max_iter), update);
    }
    SolveResult res = package(pr, mesh, G, std::move(u));
    res.iterations = iterations;
    res.final_update = update;
    res.provenance = {{"kind", P.kind == Kind::Convection ? "convection" : "drift"},
                      {"N", std::to_string(P.N)},
                      {"p", str(P.p)},
                      {"alpha", str(P.alpha)},
                      {"B", str(field.B)},
                      {"Fbound", str(field.Fbound)},
                      {"orientation", field.orientation == Orientation::Inward ? "inward" : "outward"},
                      {"nodes", std::to_string(mesh.size())},
                      {"grading", str(mesh.grading())},
                      {"R", str(mesh.R())},
                      {"truncation", std::isinf(level) ? "inf" : str(level)},
                      {"coefficient_floor", str(opts.coefficient_floor)},
                      {"iterations", std::to_string(res.iterations)},
                      {"final_update", str(res.final_update)}};
    res.weak_residual = weak_residual(res, P, field, f, std::size_t(opts.residual_tests)).relative();
    res.provenance.emplace_back("weak_residual", str(res.weak_residual));
    return res;
}

}  // namespace

// ------------------------------------------------------------------- mesh

RadialMesh::RadialMesh(int N, double R, std::size_t nodes, double grading)
    : N_(N), R_(R), grading_(grading), omega_(rearrange::unit_ball_volume(N)) {
    if (N < 1) throw DomainError("mesh dimension must be positive");
    if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("mesh radius must be positive");
    if (nodes < 16) throw DomainError("mesh needs at least 16 nodes");
    if (!(grading >= 1.0) || !std::isfinite(grading)) throw DomainError("mesh grading must be >= 1");
    r_.resize(nodes);
    measure_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) r_[i] = R * std::pow(double(i + 1) / double(nodes), grading);
    r_.back() = R;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double ro = r_[i];
        if (i == 0) {
            measure_[i] = omega_ * std::pow(ro, N);
        } else {
            // omega r^N (1 - (r_{i-1}/r)^N) without cancellation
            measure_[i] = -omega_ * std::pow(ro, N) * std::expm1(N * std::log(r_[i - 1] / ro));
        }
        if (!(measure_[i] > 0.0)) throw DomainError("mesh grading underflows the innermost cells");
    }
}

RadialMesh RadialMesh::for_measure(int N, double domain_measure, std::size_t nodes, double grading) {
    const double R = std::pow(domain_measure / rearrange::unit_ball_volume(N), 1.0 / N);
    return RadialMesh(N, R, nodes, grading);
}

// ------------------------------------------------------------------ field

FieldSpec FieldSpec::from_params(const ProblemParams& P, Orientation orientation, std::function<double(double)> bounded) {
    FieldSpec f;
    f.kind = P.kind;
    f.B = P.B;
    f.Fbound = P.Fbound;
    f.exponent = P.kind == radial::Kind::Convection ? P.p - 1.0 : 1.0;
    f.orientation = orientation;
    f.bounded = std::move(bounded);
    return f;
}

double FieldSpec::singular(double r, int N, double omega) const {
    if (B == 0.0) return 0.0;
    const double mag = B * std::pow(omega * std::pow(r, N), -exponent / N);
    return orientation == Orientation::Inward ? -mag : mag;
}

double FieldSpec::first_cell(double r0, int N, double omega) const { return singular(r0, N, omega); }

// ----------------------------------------------------------------- source

RadialSource RadialSource::from_datum(Datum fbar) {
    RadialSource s;
    s.datum_ = std::move(fbar);
    return s;
}

RadialSource RadialSource::from_function(std::function<double(double)> f, std::function<double(double)> primitive) {
    if (!f) throw DomainError("source function is empty");
    RadialSource s;
    s.fn_ = std::move(f);
    s.primitive_ = std::move(primitive);
    return s;
}

const Datum& RadialSource::datum() const {
    if (!datum_) throw DomainError("source is not given by a datum");
    return *datum_;
}

double RadialSource::value(double r, int N, double omega) const {
    return datum_ ? datum_->value(omega * std::pow(r, N)) : fn_(r);
}

std::vector<double> RadialSource::loads(const RadialMesh& mesh) const {
    const std::size_t n = mesh.size();
    const int N = mesh.N();
    std::vector<double> out(n);
    if (datum_) {
        if (datum_->total() < mesh.total_measure() * (1.0 - 1e-12))
            throw DomainError("datum support is shorter than the mesh measure");
        const double scale = 1.0 / (N * mesh.omega());
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cur = datum_->cumulative(std::min(mesh.t_outer(i), datum_->total()));
            out[i] = (cur - prev) * scale;
            prev = cur;
        }
        return out;
    }
    if (primitive_) {
        double prev = primitive_(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double cur = primitive_(mesh.outer(i));
            out[i] = cur - prev;
            prev = cur;
        }
        return out;
    }
    auto integrand = [&](double r) { return std::pow(r, N - 1) * fn_(r); };
    for (std::size_t i = 0; i < n; ++i) out[i] = gk(integrand, mesh.inner(i), mesh.outer(i));
    return out;
}

std::vector<double> RadialSource::abs_loads(const RadialMesh& mesh) const {
    if (datum_) return loads(mesh);
    const int N = mesh.N();
    auto integrand = [&](double r) { return std::pow(r, N - 1) * std::fabs(fn_(r)); };
    std::vector<double> out(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) out[i] = gk(integrand, mesh.inner(i), mesh.outer(i));
    return out;
}

RadialSource RadialSource::truncated(double level) const {
    if (!(level >= 0.0)) throw DomainError("truncation level must be >= 0");
    if (std::isinf(level)) return *this;
    if (datum_) return from_datum(datum_->truncated(level));
    auto fn = fn_;
    return from_function([fn, level](double r) { return std::clamp(fn(r), -level, level); });
}

// ----------------------------------------------------------------- result

rearrange::WeightedSample SolveResult::solution_sample() const {
    std::vector<rearrange::Cell> cells(measures.size());
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = {u[i], measures[i]};
    return rearrange::WeightedSample(std::move(cells));
}

rearrange::WeightedSample SolveResult::gradient_sample(double power) const {
    std::vector<rearrange::Cell> cells(measures.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
        cells[i] = {power == 1.0 ? grad[i] : std::pow(grad[i], power), measures[i]};
    return rearrange::WeightedSample(std::move(cells));
}

std::string SolveResult::to_csv() const {
    std::ostringstream os;
    for (const auto& [k, v] : provenance) os << "# " << k << "=" << v << "\n";
    os << "r,u,grad\n";
    for (std::size_t i = 0; i < u.size(); ++i)
        os << fmt17(r[i]) << "," << fmt17(u[i]) << "," << fmt17(grad[i]) << "\n";
    return os.str();
}

// ---------------------------------------------------------------- solvers

SolveResult solve_radial_convection(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field,
                                    const RadialSource& f, const SolverOptions& opts) {
    if (P.kind != Kind::Convection) throw DomainError("convection solver called with a drift problem");
    return solve_radial(P, mesh, field, f, INFINITY, opts);
}

SolveResult solve_radial_drift(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field,
                               const RadialSource& f, const SolverOptions& opts) {
    if (P.kind != Kind::Drift) throw DomainError("drift solver called with a convection problem");
    return solve_radial(P, mesh, field, f, INFINITY, opts);
}

SolveResult solve_truncated(const ProblemParams& P, const RadialMesh& mesh, const FieldSpec& field,
                            const RadialSource& f, double level, const SolverOptions& opts) {
    if (std::isinf(level) && level > 0.0)
        return P.kind == Kind::Convection ? solve_radial_convection(P, mesh, field, f, opts)
                                          : solve_radial_drift(P, mesh, field, f, opts);
    if (!(level >= 1.0)) throw DomainError("truncation level must be >= 1");
    return solve_radial(P, mesh, field, f, level, opts);
}

// ------------------------------------------------------------------ 3-D box

SolveResult solve_box_convection_3d(const BoxProblem& bp, int n, const SolverOptions& opts) {
    if (n < 2 || n > 64) throw DomainError("box grid must have between 2 and 64 cells per side");
    if (!bp.A || !bp.f) throw DomainError("box problem needs A and f");
    const double h = 1.0 / n;
    const std::size_t cells = std::size_t(n) * n * n;
    auto id = [n](int i, int j, int k) { return std::size_t(i) + std::size_t(n) * (std::size_t(j) + std::size_t(n) * k); };
    auto centre = [h](int i) { return (i + 0.5) * h; };

    double alpha_min = INFINITY;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                auto A = bp.A(centre(i), centre(j), centre(k));
                const double off = std::fabs(A[1]) + std::fabs(A[2]) + std::fabs(A[3]) + std::fabs(A[5]) +
                                   std::fabs(A[6]) + std::fabs(A[7]);
                if (off != 0.0) throw UnsupportedCase("the 7-point box scheme needs a diagonal coefficient matrix");
                const double lam = std::min({A[0], A[4], A[8]});
                if (!(lam > 0.0)) throw PreconditionError("coefficient matrix is not elliptic", long(id(i, j, k)));
                alpha_min = std::min(alpha_min, lam);
            }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(cells * 7);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(cells));
    const double area = h * h;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t P = id(i, j, k);
                double diag = 0.0;
                for (int d = 0; d < 3; ++d) {
                    for (int side = -1; side <= 1; side += 2) {
                        int nb[3] = {i, j, k};
                        nb[d] += side;
                        double x[3] = {centre(i), centre(j), centre(k)};
                        x[d] += side * 0.5 * h;
                        const double a = bp.A(x[0], x[1], x[2])[4 * d];
                        // outward normal velocity
                        const double vel = bp.E ? side * bp.E(x[0], x[1], x[2])[d] : 0.0;
                        if (nb[d] < 0 || nb[d] >= n) {
                            // Dirichlet face: gradient over half a cell, zero convected value
                            diag += area * a / (0.5 * h);
                            continue;
                        }
                        const std::size_t Q = id(nb[0], nb[1], nb[2]);
                        double w = 0.5;
                        if (std::fabs(vel) * h > opts.peclet_switch * a) w = vel > 0.0 ? 1.0 : 0.0;
                        diag += area * (a / h + vel * w);
                        trip.emplace_back(Eigen::Index(P), Eigen::Index(Q), area * (-a / h + vel * (1.0 - w)));
                    }
                }
                trip.emplace_back(Eigen::Index(P), Eigen::Index(P), diag);
                rhs[Eigen::Index(P)] = bp.f(centre(i), centre(j), centre(k)) * h * h * h;
            }
    const auto dim = static_cast<Eigen::Index>(cells);
    Eigen::SparseMatrix<double, Eigen::RowMajor> M(dim, dim);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> krylov;
    krylov.setTolerance(opts.tol);
    krylov.setMaxIterations(std::max(opts.max_iter, 20 * n * n));
    krylov.compute(M);
    Eigen::VectorXd sol = krylov.solve(rhs);
    if (krylov.info() != Eigen::Success || !(krylov.error() <= opts.tol))
        throw ConvergenceError("BiCGSTAB did not reach the requested residual", int(krylov.iterations()),
                               krylov.error());

    SolveResult res;
    res.u.resize(cells);
    res.r.resize(cells);
    res.grad.resize(cells);
    res.measures.assign(cells, h * h * h);
    auto val = [&](int i, int j, int k) -> double {
        if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return 0.0;
        return sol[Eigen::Index(id(i, j, k))];
    };
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t P = id(i, j, k);
                res.u[P] = sol[Eigen::Index(P)];
                const double dx = centre(i) - 0.5, dy = centre(j) - 0.5, dz = centre(k) - 0.5;
                res.r[P] = std::sqrt(dx * dx + dy * dy + dz * dz);
                double g2 = 0.0;
                const int c[3] = {i, j, k};
                for (int d = 0; d < 3; ++d) {
                    int lo[3] = {c[0], c[1], c[2]}, hi[3] = {c[0], c[1], c[2]};
                    lo[d] -= 1;
                    hi[d] += 1;
                    // boundary neighbours sit at distance h/2
                    const double dlo = lo[d] < 0 ? 0.5 * h : h, dhi = hi[d] >= n ? 0.5 * h : h;
                    const double gd = (val(hi[0], hi[1], hi[2]) - val(lo[0], lo[1], lo[2])) / (dlo + dhi);
                    g2 += gd * gd;
                }
                res.grad[P] = std::sqrt(g2);
            }
    res.iterations = int(krylov.iterations());
    res.final_update = krylov.error();
    res.coefficient_floor = alpha_min;
    res.provenance = {{"kind", "box_convection"},
                      {"cells_per_side", std::to_string(n)},
                      {"iterations", std::to_string(res.iterations)},
                      {"relative_residual", fmt17(res.final_update)},
                      {"min_ellipticity", fmt17(alpha_min)}};
    return res;
}

// --------------------------------------------------------------- residuals

WeakResidual weak_residual(const SolveResult& res, const ProblemParams& P, const FieldSpec& field,
                           const RadialSource& f, std::size_t test_count) {
    if (!res.mesh) throw DomainError("weak residual needs a radial solve result");
    const RadialMesh& mesh = *res.mesh;
    const Geometry G(mesh);
    SolverOptions opts;
    opts.coefficient_floor = res.coefficient_floor > 0.0 ? res.coefficient_floor : opts.coefficient_floor;
    const Problem pr = make_problem(P, mesh, field, f, res.truncation_level, opts);
    const std::size_t n = G.n;
    std::vector<double> u(res.u.begin(), res.u.begin() + long(n));
    const Lagged L = lag_from(pr, G, u);
    auto g = face_gradients(G, u);

    std::vector<double> J(n);
    for (std::size_t i = 0; i < n; ++i) {
        double flux = pr.alpha * L.kappa[i] * g[i];
        if (pr.kind == Kind::Convection) {
            const double vel = pr.field[i] * L.psi[i];
            const double w = face_weight(G, i, vel, pr.alpha * L.kappa[i], pr.peclet);
            const double next = i + 1 < n ? u[i + 1] : 0.0;
            flux -= vel * (w * u[i] + (1.0 - w) * next);
        }
        J[i] = G.area[i] * flux;
    }
    const double scale = P.N * mesh.omega();
    WeakResidual out;
    std::size_t tests = test_count == 0 || test_count >= n ? n : test_count;
    for (std::size_t t = 0; t < tests; ++t) {
        const std::size_t i = tests == n ? t : (t * (n - 1)) / (tests - 1 == 0 ? 1 : tests - 1);
        double bal = J[i] - (i > 0 ? J[i - 1] : 0.0) + pr.loads[i];
        if (pr.kind == Kind::Drift) {
            const double kc = i == 0 ? L.kappa[0] : 0.5 * (L.kappa[i - 1] + L.kappa[i]);
            const double th = drift_weight(G, i, pr.field[i] * L.psi[i], pr.alpha * kc, pr.peclet);
            const double gc = th * (i > 0 ? g[i - 1] : 0.0) + (1.0 - th) * g[i];
            bal += G.volume[i] * pr.field[i] * L.psi[i] * gc;
        }
        out.max_abs = std::max(out.max_abs, scale * std::fabs(bal));
    }
    for (std::size_t i = 0; i < n; ++i) out.load_norm += scale * std::fabs(pr.loads[i]);
    return out;
}

EnergySlack energy_inequality_check(const SolveResult& res, const ProblemParams& P, const FieldSpec& field,
                                    const RadialSource& f, double k, double h) {
    if (!(k >= 0.0) || !(h > 0.0)) throw DomainError("energy check needs k >= 0 and h > 0");
    if (P.kind != Kind::Convection) throw DomainError("energy check applies to convection solves");
    if (!res.mesh) throw DomainError("energy check needs a radial solve result");
    const RadialMesh& mesh = *res.mesh;
    const std::size_t n = mesh.size();
    const auto fl = (std::isinf(res.truncation_level) ? f : f.truncated(res.truncation_level)).abs_loads(mesh);
    const double scale = P.N * mesh.omega();
    double lhs = 0.0, fterm = 0.0, conv = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(res.u[i]);
        if (a > k) fterm += scale * fl[i];
        if (a > k && a < k + h) {
            any = true;
            const double E = clamp_abs(i == 0 ? field.first_cell(mesh.outer(0), mesh.N(), mesh.omega()) +
                                                    field.bounded_at(mesh.center(0))
                                              : field.radial(mesh.center(i), mesh.N(), mesh.omega()),
                                       res.truncation_level);
            lhs += P.alpha * std::pow(res.grad[i], P.p) * res.measures[i];
            conv += std::fabs(E) * res.grad[i] * res.measures[i];
        }
    }
    EnergySlack out;
    if (!any) {
        out.empty_band = true;
        out.note = "empty level band; skipped";
        return out;
    }
    const double rhs_f = h * fterm, rhs_c = std::pow(k + h, P.p - 1.0) * conv;
    out.slack = lhs - rhs_f - rhs_c;
    out.scale = std::max({lhs, rhs_f, rhs_c});
    return out;
}

std::pair<rearrange::WeightedSample, rearrange::WeightedSample> truncation_operators(const rearrange::WeightedSample& v,
                                                                                     double k) {
    if (!(k >= 0.0)) throw DomainError("truncation level must be >= 0");
    std::vector<rearrange::Cell> T = v.cells(), Gk = v.cells();
    for (std::size_t i = 0; i < T.size(); ++i) {
        const double x = v.cells()[i].value;
        const double t = std::clamp(x, -k, k);
        double g = x - t;
        // x - t is exact when |x| <= 2k. Beyond that, nudge g by ulps toward a
        // value whose rounded sum gives back x; when every candidate sum is a
        // rounding tie this is impossible and t + g stays within one ulp of x.
        for (int step = 0; t + g != x && step < 4; ++step) {
            const double next = std::nextafter(g, t + g < x ? INFINITY : -INFINITY);
            if (std::fabs(t + next - x) > std::fabs(t + g - x)) break;
            g = next;
        }
        T[i].value = t;
        Gk[i].value = g;
    }
    return {rearrange::WeightedSample(std::move(T), v.total_measure()),
            rearrange::WeightedSample(std::move(Gk), v.total_measure())};
}

}  // namespace symmcomp::solver
