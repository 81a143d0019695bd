#include "symmcomp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "symmcomp/csv.hpp"
#include "symmcomp/errors.hpp"
#include "symmcomp/lorentz.hpp"
#include "symmcomp/solver.hpp"

namespace symmcomp::bench {

using radial::Datum;
using radial::Kind;
using radial::ProblemParams;
using rearrange::Cell;
using rearrange::DecreasingProfile;
using rearrange::WeightedSample;

namespace {

// ------------------------------------------------------------ value parsing

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected, int line) {
    throw ConfigError("line " + std::to_string(line) + ": " + key + " = '" + value + "' is not " + expected, line);
}

double to_double(const std::string& key, const std::string& s, int line) {
    if (s == "inf" || s == "+inf") return INFINITY;
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(x)) bad_value(key, s, "a number", line);
    return x;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& s, int line) {
    Int x{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "an integer", line);
    return x;
}

bool to_bool(const std::string& key, const std::string& s, int line) {
    if (s == "true") return true;
    if (s == "false") return false;
    bad_value(key, s, "true or false", line);
}

std::vector<double> to_list(const std::string& key, const std::string& s, int line) {
    std::vector<double> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item), line));
    return out;
}

std::string list_str(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt17(v[i]);
    return out;
}

template <class E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<Kind> kKinds[] = {{Kind::Convection, "convection"}, {Kind::Drift, "drift"}};
constexpr EnumName<radial::DatumClass> kClasses[] = {{radial::DatumClass::Lorentz, "lorentz"},
                                                     {radial::DatumClass::Lebesgue1, "lebesgue1"},
                                                     {radial::DatumClass::LogLorentz, "log_lorentz"}};
constexpr EnumName<DatumKind> kDatumKinds[] = {{DatumKind::Power, "power"},
                                               {DatumKind::Zero, "zero"},
                                               {DatumKind::Constant, "constant"},
                                               {DatumKind::PointMass, "point_mass"},
                                               {DatumKind::Table, "table"}};
constexpr EnumName<Mode> kModes[] = {{Mode::Compare, "compare"},
                                     {Mode::SweepM, "sweep_m"},
                                     {Mode::SweepB, "sweep_B"},
                                     {Mode::Properties, "properties"}};

template <class E, std::size_t K>
E to_enum(const EnumName<E> (&table)[K], const std::string& key, const std::string& s, int line) {
    for (const auto& e : table)
        if (s == e.name) return e.value;
    std::string allowed;
    for (const auto& e : table) allowed += (allowed.empty() ? "" : "|") + std::string(e.name);
    bad_value(key, s, ("one of " + allowed).c_str(), line);
}

template <class E, std::size_t K>
std::string enum_str(const EnumName<E> (&table)[K], E v) {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    return "?";
}

// ------------------------------------------------------------- key table

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;
using Getter = std::function<std::optional<std::string>(const ExperimentConfig&)>;

struct Key {
    const char* name;
    Setter set;
    Getter get;
};

#define NUM_KEY(NAME, FIELD)                                                                           \
    Key {                                                                                              \
        NAME, [](ExperimentConfig& c, const std::string& v, int l) { c.FIELD = to_double(NAME, v, l); }, \
            [](const ExperimentConfig& c) -> std::optional<std::string> { return fmt17(c.FIELD); }     \
    }
#define OPT_KEY(NAME, FIELD)                                                                           \
    Key {                                                                                              \
        NAME, [](ExperimentConfig& c, const std::string& v, int l) { c.FIELD = to_double(NAME, v, l); }, \
            [](const ExperimentConfig& c) -> std::optional<std::string> {                              \
                if (!c.FIELD) return std::nullopt;                                                     \
                return fmt17(*c.FIELD);                                                                \
            }                                                                                          \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"problem.kind", [](ExperimentConfig& c, const std::string& v, int l) { c.kind = to_enum(kKinds, "problem.kind", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return enum_str(kKinds, c.kind); }},
        NUM_KEY("problem.p", p),
        {"problem.N", [](ExperimentConfig& c, const std::string& v, int l) { c.N = to_integer<int>("problem.N", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.N); }},
        NUM_KEY("problem.m", m),
        NUM_KEY("problem.q", q),
        NUM_KEY("problem.alpha", alpha),
        NUM_KEY("problem.measure", measure),
        OPT_KEY("problem.B_fraction", B_fraction),
        {"problem.B",
         [](ExperimentConfig& c, const std::string& v, int l) {
             c.B = to_double("problem.B", v, l);
             c.B_fraction.reset();
         },
         [](const ExperimentConfig& c) -> std::optional<std::string> {
             if (!c.B) return std::nullopt;
             return fmt17(*c.B);
         }},
        NUM_KEY("problem.Fbound", Fbound),
        {"problem.datum_class",
         [](ExperimentConfig& c, const std::string& v, int l) { c.datum_class = to_enum(kClasses, "problem.datum_class", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return enum_str(kClasses, c.datum_class); }},
        {"datum.kind", [](ExperimentConfig& c, const std::string& v, int l) { c.datum = to_enum(kDatumKinds, "datum.kind", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return enum_str(kDatumKinds, c.datum); }},
        OPT_KEY("datum.exponent", datum_exponent),
        NUM_KEY("datum.scale", datum_scale),
        OPT_KEY("datum.width", datum_width),
        {"datum.table", [](ExperimentConfig& c, const std::string& v, int) { c.datum_table = v; },
         [](const ExperimentConfig& c) -> std::optional<std::string> {
             if (c.datum_table.empty()) return std::nullopt;
             return c.datum_table;
         }},
        {"mesh.nodes",
         [](ExperimentConfig& c, const std::string& v, int l) { c.nodes = to_integer<std::size_t>("mesh.nodes", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.nodes); }},
        NUM_KEY("mesh.grading", grading),
        NUM_KEY("solver.tol", tol),
        {"solver.max_iter",
         [](ExperimentConfig& c, const std::string& v, int l) { c.max_iter = to_integer<int>("solver.max_iter", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.max_iter); }},
        NUM_KEY("solver.relaxation", relaxation),
        NUM_KEY("solver.truncation", truncation),
        {"solver.sharpness",
         [](ExperimentConfig& c, const std::string& v, int l) { c.sharpness = to_bool("solver.sharpness", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return c.sharpness ? "true" : "false"; }},
        NUM_KEY("analysis.fit_lo", fit_lo),
        NUM_KEY("analysis.fit_hi", fit_hi),
        NUM_KEY("analysis.compare_lo", compare_lo),
        NUM_KEY("analysis.compare_hi", compare_hi),
        NUM_KEY("analysis.tol_u", tol_u),
        NUM_KEY("analysis.tol_grad", tol_grad),
        NUM_KEY("analysis.tol_borderline", tol_borderline),
        {"analysis.resolutions",
         [](ExperimentConfig& c, const std::string& v, int l) {
             c.resolutions = to_integer<int>("analysis.resolutions", v, l);
         },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.resolutions); }},
        {"mode.kind", [](ExperimentConfig& c, const std::string& v, int l) { c.mode = to_enum(kModes, "mode.kind", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return enum_str(kModes, c.mode); }},
        {"mode.values", [](ExperimentConfig& c, const std::string& v, int l) { c.values = to_list("mode.values", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> {
             if (c.values.empty()) return std::nullopt;
             return list_str(c.values);
         }},
        {"mode.gamma_factors",
         [](ExperimentConfig& c, const std::string& v, int l) { c.gamma_factors = to_list("mode.gamma_factors", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> {
             if (c.gamma_factors.empty()) return std::nullopt;
             return list_str(c.gamma_factors);
         }},
        {"mode.cases",
         [](ExperimentConfig& c, const std::string& v, int l) { c.cases = to_integer<std::size_t>("mode.cases", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.cases); }},
        {"mode.seed",
         [](ExperimentConfig& c, const std::string& v, int l) { c.seed = to_integer<std::uint64_t>("mode.seed", v, l); },
         [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.seed); }},
    };
    return table;
}

#undef NUM_KEY
#undef OPT_KEY

void validate_impl(const ExperimentConfig& c, const std::map<std::string, int>& lines) {
    auto check = [&](bool ok, const std::string& key, const std::string& msg) {
        if (ok) return;
        auto it = lines.find(key);
        int line = it == lines.end() ? 0 : it->second;
        throw ConfigError((line ? "line " + std::to_string(line) + ": " : std::string()) + key + ": " + msg, line);
    };
    auto pct = [](double t) { return t > 0.0 && t <= 50.0; };
    check(c.p > 1.0 && std::isfinite(c.p), "problem.p", "must be > 1");
    check(c.N >= 2, "problem.N", "must be >= 2");
    check(c.m >= 1.0 && std::isfinite(c.m), "problem.m", "must be >= 1");
    check(c.q > 0.0, "problem.q", "must be positive");
    check(c.alpha > 0.0 && std::isfinite(c.alpha), "problem.alpha", "must be positive");
    check(c.measure > 0.0 && std::isfinite(c.measure), "problem.measure", "must be positive");
    check(c.B_fraction.has_value() != c.B.has_value(), "problem.B", "give exactly one of problem.B and problem.B_fraction");
    if (c.B_fraction) check(*c.B_fraction >= 0.0 && std::isfinite(*c.B_fraction), "problem.B_fraction", "must be >= 0");
    if (c.B) check(*c.B >= 0.0 && std::isfinite(*c.B), "problem.B", "must be >= 0");
    check(c.Fbound >= 0.0 && std::isfinite(c.Fbound), "problem.Fbound", "must be >= 0");
    if (c.datum == DatumKind::Power && c.datum_exponent)
        check(*c.datum_exponent > -1.0 && *c.datum_exponent < 0.0, "datum.exponent", "must lie in (-1, 0)");
    check(std::isfinite(c.datum_scale) && c.datum_scale >= 0.0, "datum.scale", "must be finite and >= 0");
    if (c.datum_width) check(*c.datum_width > 0.0 && *c.datum_width <= c.measure, "datum.width", "must lie in (0, |Omega|]");
    check(c.datum != DatumKind::Table || !c.datum_table.empty(), "datum.table", "required for datum.kind = table");
    check(c.nodes >= 16, "mesh.nodes", "must be >= 16");
    check(c.grading >= 1.0 && std::isfinite(c.grading), "mesh.grading", "must be >= 1");
    check(c.tol > 0.0, "solver.tol", "must be positive");
    check(c.max_iter >= 1, "solver.max_iter", "must be >= 1");
    check(c.relaxation > 0.0 && c.relaxation <= 1.0, "solver.relaxation", "must lie in (0, 1]");
    check(c.truncation >= 1.0, "solver.truncation", "must be >= 1 or inf");
    check(c.fit_lo > 0.0 && c.fit_lo < c.fit_hi, "analysis.fit_lo", "fit window must satisfy 0 < fit_lo < fit_hi");
    check(c.fit_hi < c.measure, "analysis.fit_hi", "fit window must lie inside (0, |Omega|)");
    check(c.compare_lo > 0.0 && c.compare_lo < c.compare_hi, "analysis.compare_lo",
          "comparison window must satisfy 0 < compare_lo < compare_hi");
    check(c.compare_hi < c.measure, "analysis.compare_hi", "comparison window must lie inside (0, |Omega|)");
    check(pct(c.tol_u), "analysis.tol_u", "must lie in (0, 50]");
    check(pct(c.tol_grad), "analysis.tol_grad", "must lie in (0, 50]");
    check(pct(c.tol_borderline), "analysis.tol_borderline", "must lie in (0, 50]");
    check(c.resolutions == 1 || c.resolutions == 2, "analysis.resolutions", "must be 1 or 2");
    check(c.cases >= 1, "mode.cases", "must be >= 1");
    if (c.mode == Mode::SweepM) {
        check(!c.values.empty(), "mode.values", "sweep_m needs a list of m values");
        for (double m : c.values) check(m >= 1.0 && std::isfinite(m), "mode.values", "m values must be >= 1");
    }
    if (c.mode == Mode::SweepB) {
        check(c.p == 2.0, "problem.p", "sweep_B requires p = 2");
        check(!c.values.empty() || !c.gamma_factors.empty(), "mode.values", "sweep_B needs B fractions or gamma factors");
        for (double v : c.values) check(v >= 0.0 && std::isfinite(v), "mode.values", "B fractions must be >= 0");
        for (double g : c.gamma_factors) check(g > 0.0 && std::isfinite(g), "mode.gamma_factors", "must be positive");
    }
}

// ---------------------------------------------------------- problem setup

double threshold(const ProblemParams& P) {
    return P.kind == Kind::Convection ? radial::convection_threshold(P) : radial::drift_threshold(P);
}

ProblemParams make_params(const ExperimentConfig& c) {
    ProblemParams P;
    P.kind = c.kind;
    P.N = c.N;
    P.p = c.p;
    P.m = c.m;
    P.q = c.q;
    P.alpha = c.alpha;
    P.domain_measure = c.measure;
    P.Fbound = c.Fbound;
    P.datum_class = c.datum_class;
    P.finalize();
    P.B = c.B ? *c.B : *c.B_fraction * threshold(P);
    return P;
}

Datum read_table(const ExperimentConfig& c) {
    std::filesystem::path path = c.datum_table;
    if (path.is_relative() && !c.base_dir.empty()) path = c.base_dir / path;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read datum table " + path.string());
    std::vector<double> b, v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 's,value'", lineno);
        b.push_back(to_double("datum.table s", trim(line.substr(0, comma)), lineno));
        v.push_back(to_double("datum.table value", trim(line.substr(comma + 1)), lineno));
    }
    if (b.empty()) throw ConfigError(path.string() + ": empty datum table");
    try {
        return Datum::from_profile(DecreasingProfile(b, v, c.measure));
    } catch (const Error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Datum make_datum(const ExperimentConfig& c, const solver::RadialMesh& mesh) {
    const double T = c.measure;
    switch (c.datum) {
        case DatumKind::Zero:
            return Datum::zero(T);
        case DatumKind::Constant:
            return Datum::constant(T, c.datum_scale);
        case DatumKind::PointMass:
            return Datum::point_mass(T, c.datum_scale, c.datum_width ? *c.datum_width : mesh.t_outer(0));
        case DatumKind::Table:
            return read_table(c);
        case DatumKind::Power:
            break;
    }
    double e = c.datum_exponent ? *c.datum_exponent : -1.0 / c.m;
    return Datum({{0.0, T, c.datum_scale, e}}, T);
}

solver::SolverOptions solver_options(const ExperimentConfig& c, bool sharp) {
    solver::SolverOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.relaxation = c.relaxation;
    o.sharpness_mode = c.sharpness || sharp;
    return o;
}

// Exponent of the datum the predicted slopes refer to; nullopt when none applies.
std::optional<ProblemParams> slope_params(const ExperimentConfig& c, const ProblemParams& P, const Datum& d) {
    if (d.is_zero()) return std::nullopt;
    if (c.datum == DatumKind::PointMass) return P;
    if (c.datum != DatumKind::Power) return std::nullopt;
    ProblemParams Q = P;
    if (c.datum_exponent) Q.m = -1.0 / *c.datum_exponent;
    return Q;
}

lorentz::ExponentFit fit_on_grid(const std::function<double(double)>& f, double lo, double hi, double total) {
    std::vector<double> b, v;
    const double a = std::log10(lo), z = std::log10(hi);
    const int steps = std::max(2, int(std::lround((z - a) / 0.1)));
    for (int k = 0; k <= steps; ++k) {
        double t = std::pow(10.0, a + (z - a) * k / steps);
        b.push_back(t);
        v.push_back(f(t));
    }
    return lorentz::fit_exponent(rearrange::StepProfile(b, v, total), lo, hi);
}

bool within(double fitted, double predicted, double pct) {
    return std::fabs(fitted - predicted) <= pct / 100.0 * std::fabs(predicted);
}

std::string label_num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

double ratio_of(double value, double bound) {
    if (bound > 0.0) return value / bound;
    return value == 0.0 ? 0.0 : INFINITY;
}

// Worst ratio per 0.05-decade bin over every breakpoint in (lo, hi). Each bin
// reports its worst breakpoint, so a failing breakpoint always fails a row.
void domination_rows(std::vector<Row>& rows, const std::string& run, const std::string& quantity,
                     const std::vector<double>& breaks, const std::function<double(std::size_t)>& value,
                     const std::function<double(double)>& bound, double lo, double hi) {
    constexpr double kBin = 0.05;
    const double a = std::log10(lo);
    long current = -1;
    Row worst;
    bool have = false;
    auto flush = [&] {
        if (have) rows.push_back(worst);
        have = false;
    };
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        double t = breaks[i];
        if (!(t > lo && t < hi)) continue;
        long bin = long(std::floor((std::log10(t) - a) / kBin));
        if (bin != current) {
            flush();
            current = bin;
        }
        double v = value(i), bd = bound(t);
        double r = ratio_of(v, bd);
        if (!have || r > worst.ratio) {
            worst = Row{run, quantity, t, v, bd, r, r <= 1.0};
            have = true;
        }
    }
    flush();
}

struct Outcome {
    std::vector<Row> rows;
    std::vector<SummaryRow> summary;
    std::vector<ProfileRow> profiles;
};

void append(Report& r, Outcome&& o) {
    for (auto& x : o.rows) r.rows.push_back(std::move(x));
    for (auto& x : o.summary) r.summary.push_back(std::move(x));
    for (auto& x : o.profiles) r.profiles.push_back(std::move(x));
}

void log_line(const RunOptions& opts, const std::string& msg) {
    static std::mutex mu;
    if (!opts.log) return;
    std::lock_guard<std::mutex> lock(mu);
    *opts.log << msg << '\n';
}

Outcome compare_one(const ExperimentConfig& c, const std::string& run, const RunOptions& opts) {
    Outcome out;
    const ProblemParams P = make_params(c);
    const double Bc = threshold(P);
    const bool above = P.B >= Bc;
    const auto fine_mesh = solver::RadialMesh::for_measure(c.N, c.measure, c.nodes, c.grading);
    const Datum datum = make_datum(c, fine_mesh);
    const auto src = solver::RadialSource::from_datum(datum);
    const auto field = solver::FieldSpec::from_params(P);
    const auto sopts = solver_options(c, false);

    std::function<double(double)> ubound, gbound;
    if (!above) {
        if (c.kind == Kind::Convection) {
            auto v = radial::convection_profile(P, datum);
            ubound = v;
            gbound = radial::convection_gradient_bound(P, v, datum);
        } else {
            ubound = radial::drift_profile(P, datum);
            gbound = radial::drift_gradient_bound(P, datum);
        }
    }

    solver::SolveResult fine;
    for (int level = 0; level < c.resolutions; ++level) {
        const std::size_t nodes = level == 0 ? c.nodes : std::max<std::size_t>(16, c.nodes / 2);
        auto mesh = level == 0 ? fine_mesh : solver::RadialMesh::for_measure(c.N, c.measure, nodes, c.grading);
        auto res = solver::solve_truncated(P, mesh, field, src, c.truncation, sopts);
        log_line(opts, run + ": solved on " + std::to_string(nodes) + " nodes in " + std::to_string(res.iterations) +
                           " iterations");
        const std::string tag = run + "@" + std::to_string(nodes);
        if (!above) {
            auto pu = rearrange::decreasing_rearrangement(res.solution_sample());
            auto pg = rearrange::decreasing_rearrangement(res.gradient_sample(c.p - 1.0));
            const double lo = c.compare_lo, hi = c.compare_hi;
            domination_rows(out.rows, tag, "u", pu.breakpoints(), [&](std::size_t i) { return pu.values()[i]; },
                            ubound, lo, hi);
            domination_rows(out.rows, tag, "grad_avg", pg.breakpoints(),
                            [&](std::size_t i) { return pg.average(pg.breakpoints()[i]); }, gbound, lo, hi);
        }
        out.summary.push_back({tag, "weak_residual", res.weak_residual, 1e-8, 0.0, 0.0, res.weak_residual <= 1e-8,
                               "relative to the load norm"});
        if (level == 0) fine = std::move(res);
    }

    auto pu = rearrange::decreasing_rearrangement(fine.solution_sample());
    auto pg = rearrange::decreasing_rearrangement(fine.gradient_sample(c.p - 1.0));
    const std::string tag = run + "@" + std::to_string(c.nodes);

    // profiles on a 10-per-decade grid from below the fit window up to |Omega|
    if (!pu.breakpoints().empty()) {
        const double t0 = std::max(pu.breakpoints().front(), c.fit_lo / 100.0);
        const double a = std::log10(t0), z = std::log10(c.measure);
        const int steps = std::max(1, int(std::ceil((z - a) / 0.1)));
        for (int k = 0; k <= steps; ++k) {
            double t = k == steps ? c.measure : std::pow(10.0, a + (z - a) * k / steps);
            out.profiles.push_back({tag, "u", t, pu(t), ubound ? ubound(t) : NAN});
            out.profiles.push_back({tag, "grad_avg", t, pg.average(t), gbound ? gbound(t) : NAN});
        }
    }

    auto SP = slope_params(c, P, datum);
    if (!SP) return out;
    double pred_u, pred_g;
    bool borderline = false;
    if (above) {
        auto sh = radial::sharpness_exponents(P);
        pred_u = sh.u_slope;
        pred_g = sh.grad_slope;
        borderline = sh.grad_borderline;
    } else {
        auto ps = radial::predicted_slopes(*SP);
        pred_u = ps.u;
        pred_g = ps.grad_avg;
        borderline = ps.borderline;
    }
    auto fu = fit_on_grid([&](double t) { return pu(t); }, c.fit_lo, c.fit_hi, c.measure);
    out.summary.push_back({tag, "u_slope", fu.slope, pred_u, fu.slope_stderr, c.tol_u, within(fu.slope, pred_u, c.tol_u),
                           above ? "sharpness regime" : ""});
    if (!std::isnan(pred_g)) {
        const double tg = borderline ? c.tol_borderline : c.tol_grad;
        auto fg = fit_on_grid([&](double t) { return pg.average(t); }, c.fit_lo, c.fit_hi, c.measure);
        out.summary.push_back({tag, "grad_avg_slope", fg.slope, pred_g, fg.slope_stderr, tg,
                               within(fg.slope, pred_g, tg), borderline ? "borderline tolerance" : ""});
    }
    return out;
}

// ------------------------------------------------------------- CSV output

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

// ------------------------------------------------------- property suites

WeightedSample random_sample(std::mt19937_64& rng, std::size_t n, bool ties) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Cell> cells(n);
    double total = 0.0;
    for (auto& c : cells) {
        c.value = ties ? std::floor(U(rng) * 5.0) - 2.0 : (U(rng) - 0.3) * 10.0;
        c.measure = 0.01 + U(rng);
        total += c.measure;
    }
    return WeightedSample(cells, total);
}

WeightedSample sample_of(std::vector<Cell> cells) {
    double total = 0.0;
    for (const auto& c : cells) total += c.measure;
    return WeightedSample(std::move(cells), total);
}

// Ties, zeros, a single cell, sign flips and extreme measures.
std::vector<WeightedSample> adversarial_corpus() {
    std::vector<WeightedSample> out;
    out.push_back(sample_of({{0.0, 1.0}}));
    out.push_back(sample_of({{0.0, 0.5}, {0.0, 0.25}, {0.0, 0.25}}));
    out.push_back(sample_of({{2.0, 1.0}}));
    out.push_back(sample_of({{1.0, 0.1}, {1.0, 0.2}, {1.0, 0.3}, {1.0, 0.4}}));
    out.push_back(sample_of({{1.0, 0.3}, {0.0, 0.3}, {1.0, 0.2}, {0.0, 0.2}}));
    out.push_back(sample_of({{-3.0, 0.5}, {3.0, 0.5}, {-3.0, 1.0}, {0.0, 2.0}}));
    out.push_back(sample_of({{5.0, 1e-12}, {1.0, 1e6}, {5.0, 1e-12}, {0.0, 1.0}}));
    out.push_back(sample_of({{1e-300, 1.0}, {0.0, 1.0}, {1e300, 1.0}}));
    std::vector<Cell> stairs;
    for (int i = 0; i < 64; ++i) stairs.push_back({double(i % 4), 1.0 / 64});
    out.push_back(sample_of(stairs));
    return out;
}

struct RawProfile {
    std::vector<double> breaks, values;
};

using Rearranger = std::function<RawProfile(const WeightedSample&)>;

Rearranger rearranger(bool corrupt) {
    return [corrupt](const WeightedSample& v) {
        auto p = rearrange::decreasing_rearrangement(v);
        RawProfile raw{p.breakpoints(), p.values()};
        if (corrupt) std::reverse(raw.values.begin(), raw.values.end());
        return raw;
    };
}

// Returns a failure description, or empty when the sample passes.
std::string equimeasurability_failure(const WeightedSample& v, const Rearranger& rearr) {
    auto raw = rearr(v);
    for (std::size_t i = 1; i < raw.values.size(); ++i)
        if (raw.values[i] > raw.values[i - 1]) return "profile increases at step " + std::to_string(i);
    std::vector<double> ts;
    for (const auto& c : v.cells()) ts.push_back(std::fabs(c.value));
    ts.push_back(0.0);
    auto expected = rearrange::distribution_function(v, ts);
    for (std::size_t j = 0; j < ts.size(); ++j) {
        auto it = std::partition_point(raw.values.begin(), raw.values.end(), [&](double x) { return x > ts[j]; });
        std::size_t k = std::size_t(it - raw.values.begin());
        double got = k == 0 ? 0.0 : raw.breaks[k - 1];
        if (got != expected[j]) return "distribution differs at level " + fmt17(ts[j]);
    }
    DecreasingProfile p(raw.breaks, raw.values, v.total_measure());
    auto mf = rearrange::maximal_function(p);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (mf(p.breakpoints()[i]) < p.values()[i]) return "maximal function below the rearrangement";
    return {};
}

WeightedSample shrink(const WeightedSample& v, const std::function<bool(const WeightedSample&)>& fails) {
    std::vector<Cell> cells = v.cells();
    bool progress = true;
    while (progress && cells.size() > 1) {
        progress = false;
        for (std::size_t i = 0; i < cells.size() && cells.size() > 1; ++i) {
            auto trial = cells;
            trial.erase(trial.begin() + long(i));
            if (fails(sample_of(trial))) {
                cells = std::move(trial);
                progress = true;
                --i;
            }
        }
    }
    return sample_of(cells);
}

std::string describe(const WeightedSample& v) {
    std::string s = std::to_string(v.size()) + " cells [";
    for (std::size_t i = 0; i < v.size() && i < 12; ++i)
        s += (i ? "; " : "") + fmt17(v.cells()[i].value) + " x " + fmt17(v.cells()[i].measure);
    if (v.size() > 12) s += "; ...";
    return s + "]";
}

void record(SuiteOutcome& out, double slack, bool ok, const std::function<std::string()>& describe_case) {
    ++out.cases;
    out.worst = std::min(out.worst, slack);
    if (ok) return;
    if (out.failures++ == 0) out.counterexample = describe_case();
}

std::uint64_t suite_seed(std::uint64_t seed, Suite s) { return seed * 1000003ULL + std::uint64_t(s) * 7919ULL + 1; }

struct Pair {
    WeightedSample g, v;
};

Pair random_pair(std::mt19937_64& rng) {
    std::size_t n = 5 + rng() % 200;
    auto v = random_sample(rng, n, true);
    std::vector<Cell> gc = v.cells();
    std::uniform_real_distribution<double> U(0.0, 3.0);
    for (auto& c : gc) c.value = U(rng);
    return {WeightedSample(gc, v.total_measure()), v};
}

double hl_slack(const Pair& pr) {
    auto D = rearrange::pseudo_rearrangement(pr.g, pr.v);
    auto gb = rearrange::decreasing_rearrangement(pr.g);
    double worst = INFINITY;
    for (double t : D.breakpoints()) worst = std::min(worst, gb.integral(t) - D.integral(t));
    return worst;
}

double stability_slack(const Pair& pr) {
    auto D = rearrange::pseudo_rearrangement(pr.g, pr.v);
    double worst = INFINITY;
    for (double r : {1.0, 2.0, 4.0}) {
        double sum = 0.0;
        for (const auto& c : pr.g.cells()) sum += std::pow(std::fabs(c.value), r) * c.measure;
        worst = std::min(worst, std::pow(sum, 1.0 / r) - D.lp_norm(r));
    }
    return worst;
}

struct RadialPair {
    WeightedSample v, grad;
};

RadialPair radial_pair(int N, std::size_t n, const std::function<double(double)>& fn,
                       const std::function<double(double)>& dfn) {
    const double w = rearrange::unit_ball_volume(N);
    std::vector<Cell> vc, gc;
    for (std::size_t i = 0; i < n; ++i) {
        double a = double(i) / double(n), b = double(i + 1) / double(n);
        double meas = w * (std::pow(b, N) - std::pow(a, N));
        vc.push_back({fn(0.5 * (a + b)), meas});
        gc.push_back({std::fabs(dfn(0.5 * (a + b))), meas});
    }
    return {WeightedSample(vc, w), WeightedSample(gc, w)};
}

}  // namespace

// ================================================================ config

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, int> lines;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const auto& table = keys();
        auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
        if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'", lineno);
        if (lines.count(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'", lineno);
        if (key == "problem.B_fraction" && lines.count("problem.B"))
            throw ConfigError("line " + std::to_string(lineno) + ": problem.B_fraction conflicts with problem.B", lineno);
        if (key == "problem.B" && lines.count("problem.B_fraction"))
            throw ConfigError("line " + std::to_string(lineno) + ": problem.B conflicts with problem.B_fraction", lineno);
        lines[key] = lineno;
        it->set(cfg, value, lineno);
    }
    validate_impl(cfg, lines);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg;
    try {
        cfg = parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what(), e.line());
    }
    cfg.base_dir = path.parent_path();
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& k : keys()) {
        auto v = k.get(cfg);
        if (!v) continue;
        std::string name = k.name;
        std::string sec = name.substr(0, name.find('.'));
        if (sec != section) {
            if (!section.empty()) out += '\n';
            out += "# " + sec + "\n";
            section = sec;
        }
        out += name + " = " + *v + "\n";
    }
    return out;
}

void validate(const ExperimentConfig& cfg) { validate_impl(cfg, {}); }

// ================================================================ report

bool Report::verdict() const {
    return std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.pass; }) &&
           std::all_of(summary.begin(), summary.end(), [](const SummaryRow& s) { return s.pass; });
}

std::vector<std::string> Report::failures() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (!r.pass)
            out.push_back(r.run + " " + r.quantity + " at t=" + fmt17(r.t) + ": " + fmt17(r.value) + " > " + fmt17(r.bound));
    for (const auto& s : summary)
        if (!s.pass)
            out.push_back(s.run + " " + s.quantity + ": " + fmt17(s.fitted) + " vs " + fmt17(s.predicted) +
                          (s.note.empty() ? "" : " (" + s.note + ")"));
    return out;
}

std::string Report::to_csv() const {
    std::string out = "kind,run,quantity,t,value,bound,ratio,fitted,predicted,fit_stderr,tolerance_pct,pass,note\n";
    for (const auto& r : rows)
        out += "row," + csv_field(r.run) + "," + r.quantity + "," + fmt17(r.t) + "," + fmt17(r.value) + "," +
               fmt17(r.bound) + "," + fmt17(r.ratio) + ",,,,," + (r.pass ? "1" : "0") + ",\n";
    for (const auto& s : summary)
        out += "summary," + csv_field(s.run) + "," + s.quantity + ",,,,," + fmt17(s.fitted) + "," + fmt17(s.predicted) +
               "," + fmt17(s.fit_stderr) + "," + fmt17(s.tolerance_pct) + "," + (s.pass ? "1" : "0") + "," +
               csv_field(s.note) + "\n";
    if (!rows.empty() || !summary.empty()) out += std::string("verdict,,,,,,,,,,,") + (verdict() ? "1" : "0") + ",\n";
    return out;
}

std::string Report::profiles_csv() const {
    std::string out = "run,quantity,t,value,bound\n";
    for (const auto& p : profiles)
        out += csv_field(p.run) + "," + p.quantity + "," + fmt17(p.t) + "," + fmt17(p.value) + "," + fmt17(p.bound) + "\n";
    return out;
}

std::vector<std::filesystem::path> emit_outputs(const Report& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto rpt = dir / "report.csv", prof = dir / "profiles.csv", plot = dir / "plot.gp";
    write_file(rpt, report.to_csv());
    write_file(prof, report.profiles_csv());

    std::vector<std::pair<std::string, std::string>> series;
    for (const auto& p : report.profiles) {
        std::pair<std::string, std::string> key{p.run, p.quantity};
        if (std::find(series.begin(), series.end(), key) == series.end()) series.push_back(key);
    }
    std::string gp =
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set key outside\n"
        "set xlabel 't'\n"
        "set terminal pngcairo size 1000,700\n"
        "set output 'profiles.png'\n";
    if (series.empty()) {
        gp += "# no profiles in this report\n";
    } else {
        gp += "plot \\\n";
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& [run, q] = series[i];
            std::string sel = "(strcol(1) eq '" + run + "' && strcol(2) eq '" + q + "')";
            gp += "  'profiles.csv' using 3:(" + sel + " ? $4 : 1/0) with lines title '" + run + " " + q + "', \\\n";
            gp += "  'profiles.csv' using 3:(" + sel + " ? $5 : 1/0) with lines dashtype 2 title '" + run + " " + q +
                  " bound'" + (i + 1 < series.size() ? ", \\\n" : "\n");
        }
    }
    write_file(plot, gp);
    return {rpt, prof, plot};
}

// ================================================================ runs

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = unsigned(std::min<std::size_t>(std::max(1u, jobs), n));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Report run_compare(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate(cfg);
    Report r;
    append(r, compare_one(cfg, "compare", opts));
    return r;
}

Report run_sweep_m(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate(cfg);
    std::vector<Outcome> outs(cfg.values.size());
    parallel_for(outs.size(), opts.jobs, [&](std::size_t i) {
        ExperimentConfig c = cfg;
        c.m = cfg.values[i];
        outs[i] = compare_one(c, "m=" + label_num(c.m), opts);
    });
    Report r;
    for (auto& o : outs) append(r, std::move(o));
    return r;
}

Report run_sweep_B(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate(cfg);
    if (cfg.p != 2.0) throw ConfigError("sweep_B requires p = 2");
    const ProblemParams base = make_params(cfg);
    const double Bc = threshold(base);
    const double crit = -radial::predicted_slopes(base).u;

    struct Point {
        std::string label;
        double B;
    };
    std::vector<Point> points;
    for (double f : cfg.values) points.push_back({"B/Bc=" + label_num(f), f * Bc});
    for (double g : cfg.gamma_factors) points.push_back({"gamma/crit=" + label_num(g), radial::sharpness_B(base, g * crit)});

    struct Fit {
        lorentz::ExponentFit fit;
        double predicted;
        bool above;
        std::vector<ProfileRow> profile;
    };
    std::vector<Fit> fits(points.size());
    const auto mesh = solver::RadialMesh::for_measure(cfg.N, cfg.measure, cfg.nodes, cfg.grading);
    parallel_for(points.size(), opts.jobs, [&](std::size_t i) {
        ExperimentConfig c = cfg;
        c.B = points[i].B;
        c.B_fraction.reset();
        const ProblemParams P = make_params(c);
        const bool above = P.B >= Bc;
        const Datum datum = make_datum(c, mesh);
        auto res = solver::solve_truncated(P, mesh, solver::FieldSpec::from_params(P),
                                           solver::RadialSource::from_datum(datum), c.truncation,
                                           solver_options(c, above));
        log_line(opts, points[i].label + ": solved in " + std::to_string(res.iterations) + " iterations");
        auto pu = rearrange::decreasing_rearrangement(res.solution_sample());
        auto fit = fit_on_grid([&](double t) { return pu(t); }, c.fit_lo, c.fit_hi, c.measure);
        double pred = above ? radial::sharpness_exponents(P).u_slope : -crit;
        std::vector<ProfileRow> profile;
        const double a = std::log10(std::max(pu.breakpoints().front(), c.fit_lo / 100.0)), z = std::log10(c.measure);
        const int steps = std::max(1, int(std::ceil((z - a) / 0.1)));
        for (int k = 0; k <= steps; ++k) {
            double t = k == steps ? c.measure : std::pow(10.0, a + (z - a) * k / steps);
            profile.push_back({points[i].label, "u", t, pu(t), NAN});
        }
        fits[i] = {fit, pred, above, std::move(profile)};
    });

    Report r;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& f = fits[i];
        r.summary.push_back({points[i].label, "u_slope", f.fit.slope, f.predicted, f.fit.slope_stderr, cfg.tol_u,
                             within(f.fit.slope, f.predicted, cfg.tol_u),
                             "B/Bc=" + fmt17(points[i].B / Bc) + (f.above ? " sharpness regime" : "")});
        r.profiles.insert(r.profiles.end(), f.profile.begin(), f.profile.end());
    }

    // first B, in increasing order, whose slope leaves the standard exponent by
    // more than 3 fit standard errors and by more than the slope tolerance
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a].B < points[b].B; });
    double transition = NAN;
    std::string note = "no grid point departs from the standard exponent";
    for (std::size_t i : order) {
        double dev = std::fabs(fits[i].fit.slope + crit);
        if (dev > 3.0 * fits[i].fit.slope_stderr && dev > cfg.tol_u / 100.0 * crit) {
            transition = points[i].B / Bc;
            note = "first departure at " + points[i].label;
            break;
        }
    }
    r.summary.push_back({"sweep", "transition_B_fraction", transition, 1.0, 0.0, 0.0, true, note});
    return r;
}

Report run(const ExperimentConfig& cfg, const RunOptions& opts) {
    switch (cfg.mode) {
        case Mode::Compare:
            return run_compare(cfg, opts);
        case Mode::SweepM:
            return run_sweep_m(cfg, opts);
        case Mode::SweepB:
            return run_sweep_B(cfg, opts);
        case Mode::Properties: {
            validate(cfg);
            PropertyOptions po;
            po.seed = opts.seed ? *opts.seed : cfg.seed;
            po.cases = cfg.cases;
            return run_properties(po, opts.jobs);
        }
    }
    throw ConfigError("unknown mode");
}

// ================================================================ properties

std::string suite_name(Suite s) {
    switch (s) {
        case Suite::Equimeasurability: return "equimeasurability";
        case Suite::HardyLittlewood: return "hardy_littlewood";
        case Suite::NormStability: return "norm_stability";
        case Suite::NormEquivalence: return "norm_equivalence";
        case Suite::Talenti: return "talenti";
        case Suite::Hardy: return "hardy_inequality";
        case Suite::Gronwall: return "gronwall";
    }
    return "?";
}

SuiteOutcome run_suite(Suite suite, const PropertyOptions& opts) {
    SuiteOutcome out;
    out.suite = suite;
    std::mt19937_64 rng(suite_seed(opts.seed, suite));
    const std::string tag = suite_name(suite) + " seed " + std::to_string(opts.seed);

    switch (suite) {
        case Suite::Equimeasurability: {
            auto rearr = rearranger(opts.corrupt_rearrangement);
            auto fails = [&](const WeightedSample& v) { return !equimeasurability_failure(v, rearr).empty(); };
            auto check = [&](const WeightedSample& v, const std::string& name) {
                std::string why = equimeasurability_failure(v, rearr);
                record(out, why.empty() ? 0.0 : -1.0, why.empty(), [&] {
                    auto small = shrink(v, fails);
                    return tag + " " + name + ": " + why + "; minimized to " + describe(small) + " (" +
                           equimeasurability_failure(small, rearr) + ")";
                });
            };
            auto corpus = adversarial_corpus();
            for (std::size_t i = 0; i < corpus.size(); ++i) check(corpus[i], "adversarial case " + std::to_string(i));
            for (std::size_t i = 0; i < opts.cases; ++i) {
                auto v = random_sample(rng, 1 + rng() % 1000, i % 2 == 0);
                check(v, "case " + std::to_string(i));
            }
            break;
        }
        case Suite::HardyLittlewood:
        case Suite::NormStability: {
            auto slack_of = suite == Suite::HardyLittlewood ? hl_slack : stability_slack;
            for (std::size_t i = 0; i < opts.cases; ++i) {
                auto pr = random_pair(rng);
                double s = slack_of(pr);
                record(out, s, s >= -1e-10, [&] {
                    auto small = shrink(pr.v, [&](const WeightedSample& vv) {
                        std::vector<Cell> gc;
                        for (const auto& c : vv.cells()) {
                            auto it = std::find_if(pr.v.cells().begin(), pr.v.cells().end(), [&](const Cell& x) {
                                return x.value == c.value && x.measure == c.measure;
                            });
                            gc.push_back({pr.g.cells()[std::size_t(it - pr.v.cells().begin())].value, c.measure});
                        }
                        return slack_of({WeightedSample(gc, vv.total_measure()), vv}) < -1e-10;
                    });
                    return tag + " case " + std::to_string(i) + ": slack " + fmt17(s) + "; reference minimized to " +
                           describe(small);
                });
            }
            break;
        }
        case Suite::NormEquivalence: {
            auto corpus = lorentz::hardy_corpus(opts.cases, suite_seed(opts.seed, suite));
            for (std::size_t i = 0; i < corpus.size(); ++i)
                for (double m : {1.5, 2.0, 3.0})
                    for (double q : opts.equivalence_q) {
                        auto ch = lorentz::norm_equivalence_check(corpus[i], m, q);
                        double s = std::min(ch.mid - ch.lhs, ch.rhs - ch.mid) / std::max(ch.rhs, 1e-300);
                        record(out, s, ch.holds, [&] {
                            return tag + " case " + std::to_string(i) + " m=" + fmt17(m) + " q=" + fmt17(q) +
                                   ": standard " + fmt17(ch.lhs) + " maximal " + fmt17(ch.mid) + " m' x standard " +
                                   fmt17(ch.rhs);
                        });
                    }
            break;
        }
        case Suite::Talenti: {
            std::uniform_real_distribution<double> U(0.1, 1.0);
            const std::size_t n = 200;
            for (std::size_t i = 0; i < opts.cases; ++i) {
                const int N = 3 + int(i % 2);
                const double p = 2.0 + double((i / 2) % 2);
                double a1 = U(rng), a2 = U(rng), a3 = U(rng);
                auto pr = radial_pair(
                    N, n, [&](double r) { return a1 * (1 - r) + a2 * (1 - r * r) + a3 * (1 - r * r * r); },
                    [&](double r) { return -(a1 + 2 * a2 * r + 3 * a3 * r * r); });
                auto rep = rearrange::talenti_check(pr.v, pr.grad, p, N);
                double s = rep.min_slack + 5.0 / double(n);
                record(out, s, s >= 0.0, [&] {
                    return tag + " case " + std::to_string(i) + ": N=" + std::to_string(N) + " p=" + fmt17(p) +
                           " coefficients " + fmt17(a1) + " " + fmt17(a2) + " " + fmt17(a3) + " min slack " +
                           fmt17(rep.min_slack);
                });
            }
            break;
        }
        case Suite::Hardy: {
            auto corpus = lorentz::hardy_corpus(opts.cases, suite_seed(opts.seed, suite));
            const lorentz::HardyParams triples[] = {
                {0.5, 0.5, 1.0}, {0.5, 0.5, 2.0}, {0.5, 2.0, 1.0}, {0.5, 2.0, 2.0}};
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                const auto& hp = triples[i % 4];
                auto c = lorentz::hardy_inequality_check(corpus[i], hp);
                double s = c.constant > 0.0 ? 1.0 - c.ratio / c.constant : 0.0;
                record(out, s, c.finite && c.holds, [&] {
                    return tag + " case " + std::to_string(i) + ": beta=" + fmt17(hp.beta) + " delta=" +
                           fmt17(hp.delta) + " lambda=" + fmt17(hp.lambda) + " ratio " + fmt17(c.ratio) +
                           " constant " + fmt17(c.constant);
                });
            }
            break;
        }
        case Suite::Gronwall: {
            std::uniform_real_distribution<double> U(0.0, 1.0);
            const std::size_t n = 201;
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k) x[k] = double(k) / double(n - 1);
            for (std::size_t i = 0; i < opts.cases; ++i) {
                const double r0 = 0.1 + U(rng), r1 = U(rng), g0 = U(rng), g1 = U(rng), l0 = 2 * U(rng), l1 = U(rng);
                std::vector<double> rho(n), gam(n), lam(n);
                for (std::size_t k = 0; k < n; ++k) {
                    rho[k] = r0 + r1 * x[k];
                    gam[k] = g0 + g1 * x[k];
                    lam[k] = l0 + l1 * (1 - x[k]);
                }
                // extremal phi = rho + gamma int_t^1 lambda phi by Picard iteration
                std::vector<double> phi = rho, next(n);
                for (int it = 0; it < 200; ++it) {
                    double tail = 0.0, change = 0.0;
                    next[n - 1] = rho[n - 1];
                    for (std::size_t k = n - 1; k-- > 0;) {
                        tail += 0.5 * (x[k + 1] - x[k]) * (lam[k] * phi[k] + lam[k + 1] * phi[k + 1]);
                        next[k] = rho[k] + gam[k] * tail;
                    }
                    for (std::size_t k = 0; k < n; ++k) change = std::max(change, std::fabs(next[k] - phi[k]));
                    phi.swap(next);
                    if (change < 1e-14) break;
                }
                auto b = rearrange::gronwall_bound(rearrange::SampledFunction(x, rho), rearrange::SampledFunction(x, gam),
                                                   rearrange::SampledFunction(x, lam));
                double s = INFINITY;
                for (std::size_t k = 0; k < n; ++k) s = std::min(s, (b.y[k] - phi[k]) / phi[k]);
                record(out, s, s >= -1e-4, [&] {
                    return tag + " case " + std::to_string(i) + ": rho " + fmt17(r0) + "+" + fmt17(r1) + "x gamma " +
                           fmt17(g0) + "+" + fmt17(g1) + "x lambda " + fmt17(l0) + "+" + fmt17(l1) + "(1-x) slack " +
                           fmt17(s);
                });
            }
            break;
        }
    }
    if (out.cases == 0) out.worst = 0.0;
    return out;
}

Report run_properties(const PropertyOptions& opts, unsigned jobs) {
    const Suite suites[] = {Suite::Equimeasurability, Suite::HardyLittlewood, Suite::NormStability,
                            Suite::NormEquivalence,   Suite::Talenti,         Suite::Hardy,
                            Suite::Gronwall};
    std::vector<SuiteOutcome> outs(std::size(suites));
    parallel_for(outs.size(), jobs, [&](std::size_t i) { outs[i] = run_suite(suites[i], opts); });
    Report r;
    for (const auto& o : outs)
        r.summary.push_back({"properties", suite_name(o.suite), o.worst, 0.0, 0.0, 0.0, o.passed(),
                             std::to_string(o.cases) + " cases, " + std::to_string(o.failures) + " failures" +
                                 (o.counterexample.empty() ? "" : "; first: " + o.counterexample)});
    return r;
}

}  // namespace symmcomp::bench
