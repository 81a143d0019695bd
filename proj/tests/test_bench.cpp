#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "symmcomp/bench.hpp"
#include "symmcomp/errors.hpp"

using namespace symmcomp;
using namespace symmcomp::bench;

namespace {

const std::filesystem::path kConfigs = SYMMCOMP_CONFIG_DIR;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

const SummaryRow& find(const Report& r, const std::string& quantity) {
    for (const auto& s : r.summary)
        if (s.quantity == quantity) return s;
    throw std::runtime_error("missing summary row " + quantity);
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("symmcomp_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config round trip") {
    for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".cfg") continue;
        CAPTURE(entry.path().string());
        auto a = parse_config(slurp(entry.path()));
        auto text = serialize_config(a);
        auto b = parse_config(text);
        CHECK(a == b);
        CHECK(serialize_config(b) == text);
    }
    ExperimentConfig c;
    c.B = 1.25;
    c.B_fraction.reset();
    c.truncation = 100;
    c.values = {0.1, 1.0 / 3.0};
    c.datum = DatumKind::PointMass;
    c.datum_width = 1e-9;
    c.tol_u = 4.5;
    CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("config errors carry line numbers") {
    CHECK(error_line("problem.N = 4\n# comment\nproblem.colour = red\n") == 3);
    CHECK(error_line("problem.N = 4\nproblem.N = 5\n") == 2);
    CHECK(error_line("\n\nproblem.p = two\n") == 3);
    CHECK(error_line("mesh.nodes 100\n") == 1);
    CHECK(error_line("problem.B = 1\nproblem.B_fraction = 0.5\n") == 2);
    CHECK(error_line("problem.kind = both\n") == 1);
    CHECK(error_line("analysis.fit_hi = 2\n") == 1);
    CHECK(error_line("problem.measure = 3\n\nanalysis.fit_hi = 4\n") == 3);
    CHECK(error_line("analysis.tol_u = 0\n") == 1);
    CHECK(error_line("analysis.tol_grad = 60\n") == 1);
    CHECK(error_line("analysis.tol_borderline = 50\n") == -1);
    CHECK(error_line("mode.kind = sweep_m\n") == 0);
    CHECK(error_line("solver.truncation = inf\nsolver.sharpness = true\n") == -1);
    CHECK_THROWS_AS(load_config(kConfigs / "does_not_exist.cfg"), IoError);
}

TEST_CASE("compare run on the convection example") {
    auto r = run_compare(load_config(kConfigs / "convection.cfg"));
    CHECK(r.verdict());
    CHECK(find(r, "u_slope").fitted == doctest::Approx(-1.0 / 3.0).epsilon(0.05));
    CHECK(find(r, "grad_avg_slope").fitted == doctest::Approx(-7.0 / 12.0).epsilon(0.07));
    bool coarse = false;
    for (const auto& row : r.rows) {
        CHECK(row.ratio <= 1.0);
        coarse = coarse || row.run == "compare@50000";
    }
    CHECK(coarse);
    CHECK(r.rows.size() > 100);
}

TEST_CASE("compare run on the drift example") {
    auto r = run_compare(load_config(kConfigs / "drift.cfg"));
    CHECK(r.verdict());
    CHECK(find(r, "u_slope").fitted == doctest::Approx(-1.0 / 6.0).epsilon(0.05));
    CHECK(find(r, "grad_avg_slope").fitted == doctest::Approx(-1.0 / 3.0).epsilon(0.07));
}

TEST_CASE("zero datum gives an all-zero passing report") {
    auto r = run_compare(load_config(kConfigs / "zero.cfg"));
    CHECK(r.verdict());
    for (const auto& row : r.rows) CHECK(row.value == 0.0);
    for (const auto& p : r.profiles) CHECK(p.value == 0.0);
    for (const auto& s : r.summary) CHECK(s.quantity == "weak_residual");
}

TEST_CASE("a failing row fails the verdict") {
    auto cfg = load_config(kConfigs / "convection.cfg");
    cfg.nodes = 20000;
    cfg.tol_u = 0.01;
    auto r = run_compare(cfg);
    CHECK_FALSE(r.verdict());
    CHECK(r.failures().size() == 1);
    CHECK(r.to_csv().find("\nverdict,,,,,,,,,,,0,\n") != std::string::npos);
}

TEST_CASE("B sweep across the threshold") {
    RunOptions opts;
    opts.jobs = 3;
    auto r = run_sweep_B(load_config(kConfigs / "sweep_b.cfg"), opts);
    CHECK(r.verdict());
    REQUIRE(r.summary.size() == 6);
    for (int i = 0; i < 4; ++i) CHECK(r.summary[i].fitted == doctest::Approx(-1.0 / 3.0).epsilon(0.05));
    CHECK(r.summary[0].fitted == doctest::Approx(-1.0 / 3.0).epsilon(1e-3));
    CHECK(r.summary[4].fitted == doctest::Approx(-0.5).epsilon(0.05));
    CHECK(r.summary[5].quantity == "transition_B_fraction");
    CHECK(r.summary[5].fitted == doctest::Approx(1.5));

    auto serial = run_sweep_B(load_config(kConfigs / "sweep_b.cfg"));
    CHECK(serial.to_csv() == r.to_csv());
}

TEST_CASE("property suites") {
    PropertyOptions opts;
    auto r = run_properties(opts, 4);
    CHECK(r.verdict());
    CHECK(r.summary.size() == 7);
    for (const auto& s : r.summary) CHECK_MESSAGE(s.pass, s.quantity, ": ", s.note);

    // the adversarial corpus runs ahead of the random cases
    auto eq = run_suite(Suite::Equimeasurability, opts);
    CHECK(eq.cases > opts.cases);

    PropertyOptions bad = opts;
    bad.cases = 50;
    bad.corrupt_rearrangement = true;
    auto neg = run_suite(Suite::Equimeasurability, bad);
    CHECK_FALSE(neg.passed());
    CHECK(neg.counterexample.find("case") != std::string::npos);
    CHECK(neg.counterexample.find("minimized to 2 cells") != std::string::npos);

    PropertyOptions low = opts;
    low.cases = 20;
    low.equivalence_q = {0.5};
    auto eqv = run_suite(Suite::NormEquivalence, low);
    CHECK_FALSE(eqv.passed());
    CHECK(eqv.counterexample.find("q=0.5") != std::string::npos);
}

TEST_CASE("outputs") {
    auto dir = scratch("empty");
    auto files = emit_outputs(Report{}, dir);
    CHECK(files.size() == 3);
    CHECK(slurp(files[0]) == "kind,run,quantity,t,value,bound,ratio,fitted,predicted,fit_stderr,tolerance_pct,pass,note\n");

    auto cfg = load_config(kConfigs / "convection.cfg");
    cfg.nodes = 4000;
    auto a = emit_outputs(run_compare(cfg), scratch("a"));
    auto b = emit_outputs(run_compare(cfg), scratch("b"));
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::filesystem::file_size(a[i]) > 0);
        CHECK(slurp(a[i]) == slurp(b[i]));
    }
    CHECK(slurp(a[2]).find("profiles.csv") != std::string::npos);

    auto blocker = scratch("blocked");
    std::ofstream(blocker) << "file";
    CHECK_THROWS_AS(emit_outputs(Report{}, blocker / "sub"), IoError);
}

TEST_CASE("parallel_for keeps index order and reports the first failure") {
    std::vector<int> out(100, 0);
    parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = int(i) * 2; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i) * 2);
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error("boom " + std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "boom 7");
    }
}

TEST_CASE("datum tables") {
    auto dir = scratch("table");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "f.csv") << "# s,value\n0.25,4\n0.5,2\n1,1\n";
    std::ofstream(dir / "t.cfg") << "problem.N = 4\nproblem.m = 1.2\ndatum.kind = table\ndatum.table = f.csv\n"
                                    "mesh.nodes = 2000\nmesh.grading = 1\nanalysis.fit_lo = 1e-3\nanalysis.fit_hi = 1e-2\n";
    auto r = run_compare(load_config(dir / "t.cfg"));
    CHECK(r.verdict());
    CHECK(r.rows.size() > 0);
    std::ofstream(dir / "f.csv") << "0.25,4\n0.5,5\n";
    CHECK_THROWS_AS(run_compare(load_config(dir / "t.cfg")), ConfigError);
}
