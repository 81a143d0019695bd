#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "symmcomp/radial.hpp"
#include "symmcomp/rearrange.hpp"

namespace symmcomp::bench {

enum class Mode { Compare, SweepM, SweepB, Properties };
enum class DatumKind { Power, Zero, Constant, PointMass, Table };

// Experiment description read from `section.key = value` text. Fit and
// comparison windows are absolute values of the rearrangement variable;
// tolerances are percentages.
struct ExperimentConfig {
    // problem
    radial::Kind kind = radial::Kind::Convection;
    double p = 2.0;
    int N = 4;
    double m = 1.2;
    double q = INFINITY;
    double alpha = 1.0;
    double measure = 1.0;  // |Omega|
    std::optional<double> B_fraction = 0.5;  // of the threshold
    std::optional<double> B;                 // absolute; excludes B_fraction
    double Fbound = 0.0;
    radial::DatumClass datum_class = radial::DatumClass::Lorentz;

    // datum
    DatumKind datum = DatumKind::Power;
    std::optional<double> datum_exponent;  // power law c s^e, default e = -1/m
    double datum_scale = 1.0;              // c, the constant, or the point mass
    std::optional<double> datum_width;     // point-mass support, default: innermost cell
    std::string datum_table;               // two columns s,value; nonincreasing

    // mesh
    std::size_t nodes = 100000;
    double grading = 3.0;

    // solver
    double tol = 1e-10;
    int max_iter = 500;
    double relaxation = 0.5;
    double truncation = INFINITY;
    bool sharpness = false;

    // analysis
    double fit_lo = 1e-16;
    double fit_hi = 1e-12;
    double compare_lo = 1e-4;
    double compare_hi = 1e-1;
    double tol_u = 5.0;
    double tol_grad = 7.0;
    double tol_borderline = 10.0;
    int resolutions = 2;

    // mode
    Mode mode = Mode::Compare;
    std::vector<double> values;         // m values (sweep_m) or B/B_crit values (sweep_B)
    std::vector<double> gamma_factors;  // sweep_B points given as multiples of the critical exponent
    std::size_t cases = 1000;
    std::uint64_t seed = 42;

    std::filesystem::path base_dir;  // resolves relative table paths; not serialized

    bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError carrying the offending line number (0 for whole-config
// validation failures).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

struct Row {
    std::string run, quantity;
    double t = 0.0, value = 0.0, bound = 0.0, ratio = 0.0;
    bool pass = true;
};

struct SummaryRow {
    std::string run, quantity;
    double fitted = 0.0, predicted = 0.0, fit_stderr = 0.0, tolerance_pct = 0.0;
    bool pass = true;
    std::string note;
};

struct ProfileRow {
    std::string run, quantity;
    double t = 0.0, value = 0.0, bound = 0.0;
};

struct Report {
    std::vector<Row> rows;
    std::vector<SummaryRow> summary;
    std::vector<ProfileRow> profiles;

    bool verdict() const;
    std::vector<std::string> failures() const;
    std::string to_csv() const;
    std::string profiles_csv() const;
};

struct RunOptions {
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;  // overrides mode.seed
    std::ostream* log = nullptr;        // progress lines when set
};

Report run(const ExperimentConfig& cfg, const RunOptions& opts = {});
Report run_compare(const ExperimentConfig& cfg, const RunOptions& opts = {});
Report run_sweep_m(const ExperimentConfig& cfg, const RunOptions& opts = {});
Report run_sweep_B(const ExperimentConfig& cfg, const RunOptions& opts = {});

enum class Suite { Equimeasurability, HardyLittlewood, NormStability, NormEquivalence, Talenti, Hardy, Gronwall };
std::string suite_name(Suite s);

struct PropertyOptions {
    std::uint64_t seed = 42;
    std::size_t cases = 1000;
    bool corrupt_rearrangement = false;  // negative control: emits unsorted profiles
    std::vector<double> equivalence_q = {1.0, 2.0, INFINITY};
};

struct SuiteOutcome {
    Suite suite;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst = 0.0;  // smallest slack seen; >= 0 when every case holds
    std::string counterexample;  // first failing case, shrunk where possible
    bool passed() const { return failures == 0; }
};

SuiteOutcome run_suite(Suite suite, const PropertyOptions& opts);
Report run_properties(const PropertyOptions& opts, unsigned jobs = 1);

// Writes report.csv, profiles.csv and plot.gp into dir; returns their paths.
std::vector<std::filesystem::path> emit_outputs(const Report& report, const std::filesystem::path& dir);

// Runs f(0..n-1) on up to jobs threads; results are ordered by index and the
// exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& f);

}  // namespace symmcomp::bench
