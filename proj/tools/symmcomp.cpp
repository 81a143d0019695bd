#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "symmcomp/bench.hpp"
#include "symmcomp/errors.hpp"

namespace {

enum Exit { kPass = 0, kConfig = 1, kConvergence = 2, kVerdict = 3, kIo = 4 };

unsigned resolve_jobs(std::optional<unsigned> flag) {
    if (flag && *flag > 0) return *flag;
    if (const char* env = std::getenv("SYMMCOMP_JOBS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return unsigned(v);
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring SYMMCOMP_JOBS='" << env << "'\n";
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
        std::optional<unsigned> jobs, bool verbose) {
    using namespace symmcomp;
    try {
        auto cfg = bench::load_config(config);
        bench::RunOptions opts;
        opts.jobs = resolve_jobs(jobs);
        opts.seed = seed;
        if (verbose) opts.log = &std::cerr;
        auto report = bench::run(cfg, opts);
        auto files = bench::emit_outputs(report, out);
        for (const auto& s : report.summary)
            std::cout << (s.pass ? "pass " : "FAIL ") << s.run << ' ' << s.quantity << ' ' << s.fitted
                      << (s.note.empty() ? "" : "  # " + s.note) << '\n';
        std::size_t failed_rows = 0;
        for (const auto& r : report.rows) failed_rows += r.pass ? 0 : 1;
        std::cout << report.rows.size() << " comparison rows, " << failed_rows << " failed\n";
        if (verbose)
            for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
        if (!report.verdict()) {
            for (const auto& f : report.failures()) std::cerr << "failed: " << f << '\n';
            std::cout << "verdict: fail\n";
            return kVerdict;
        }
        std::cout << "verdict: pass\n";
        return kPass;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const ConvergenceError& e) {
        std::cerr << "solver did not converge: " << e.what() << " (iterations " << e.iterations()
                  << ", last update " << e.last_update() << ")\n";
        return kConvergence;
    } catch (const Error& e) {
        // threshold, domain and precondition violations come from the configured problem
        std::cerr << "invalid problem: " << e.what() << '\n';
        return kConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rearrangement comparison experiments for non-coercive elliptic problems"};
    app.require_subcommand(1);

    std::string config, out = "symmcomp-out";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    bool verbose = false;
    auto* cmd = app.add_subcommand("run", "Run an experiment config and write report.csv, profiles.csv, plot.gp");
    cmd->add_option("config", config, "Experiment config file")->required();
    cmd->add_option("--out", out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for property runs (overrides mode.seed)");
    cmd->add_option("--jobs", jobs, "Concurrent runs (default: SYMMCOMP_JOBS or hardware threads)");
    cmd->add_flag("--verbose", verbose, "Progress on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kConfig;
    }
    return run(config, out, seed, jobs, verbose);
}
