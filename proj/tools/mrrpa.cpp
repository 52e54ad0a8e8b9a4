// mrrpa: single points, curve scans and a quick self check.
//
//   mrrpa run <config.json>     one input ("input")
//   mrrpa scan <config.json>    many inputs ("inputs"), MRRPA_WORKERS in parallel
//   mrrpa selftest              builtin fixtures, cross-formula agreement
//
// Exit codes: 0 ok, 1 validation error, 2 numerical instability.

#include "mrrpa/pipeline.hpp"
#include "mrrpa/reference_sr.hpp"
#include "mrrpa/report.hpp"
#include "mrrpa/testing/fixtures.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUnstable = 2;

int execute(const std::string &config_path, bool scan, bool no_timings) {
    mrrpa::RunConfig cfg;
    try {
        cfg = mrrpa::load_config(config_path);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
    if (!scan && cfg.inputs.size() != 1) {
        std::cerr << "error: run takes exactly one input; use scan for several\n";
        return kInvalid;
    }
    const mrrpa::EnergyReport rep = mrrpa::run(cfg);
    for (const auto &f : rep.failures)
        std::cerr << fmt::format("{}: {} error: {}\n", f.label, f.kind, f.message);
    for (const auto &r : rep.records)
        if (!r.stable)
            std::cerr << fmt::format("{}: unstable: {}\n", r.label, r.diagnostic);
    try {
        if (cfg.output_path)
            mrrpa::write_report(rep, cfg.format, *cfg.output_path, !no_timings);
        else
            std::cout << mrrpa::emit(rep, cfg.format, !no_timings);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
    if (rep.any_invalid())
        return kInvalid;
    return rep.any_unstable() ? kUnstable : kOk;
}

int selftest() {
    using namespace mrrpa;
    MethodSet methods;
    methods.sosex = methods.quadrature = true;
    bool ok = true;
    auto line = [&](const std::string &name, bool pass, const std::string &detail) {
        ok = ok && pass;
        std::cout << fmt::format("{:<4} {:<28} {}\n", pass ? "ok" : "FAIL", name, detail);
    };
    try {
        for (const auto &f : testing::cross_formula_fixtures()) {
            const PipelineResult r = run_pipeline(f.integrals, f.spaces, methods);
            if (!r.stable) {
                line(f.name, false, r.diagnostic);
                continue;
            }
            const double dq = std::abs(*r.de_rpa_plasmon - *r.de_rpa_quadrature);
            const double dt = std::abs(*r.de_rpa_plasmon - *r.de_rpa_trbt);
            line(f.name, dq < 1e-6 && dt < 1e-9,
                 fmt::format("rpa {:.10f}  |plasmon-quad| {:.1e}  |plasmon-trBT| {:.1e}",
                             *r.de_rpa_plasmon, dq, dt));
        }
        for (const auto &f : testing::sr_fixtures()) {
            const PipelineResult r = run_pipeline(f.integrals, f.spaces, methods);
            const double ref = sr::sr_rpa_energy(f.integrals, f.spaces.core);
            const double d = std::abs(*r.de_rpa_plasmon - ref);
            line(f.name + " vs textbook", d < 1e-10, fmt::format("|diff| {:.1e}", d));
        }
    } catch (const std::exception &e) {
        line("exception", false, e.what());
    }
    return ok ? kOk : kUnstable;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multi-reference RPA and SOSEX correlation energies"};
    app.require_subcommand(1);
    std::string config;
    bool no_timings = false;

    auto *run = app.add_subcommand("run", "single-point calculation");
    run->add_option("config", config, "JSON configuration")->required();
    run->add_flag("--no-timings", no_timings, "omit timings from JSON output");

    auto *scan = app.add_subcommand("scan", "scan over a list of inputs");
    scan->add_option("config", config, "JSON configuration")->required();
    scan->add_flag("--no-timings", no_timings, "omit timings from JSON output");

    auto *self = app.add_subcommand("selftest", "run the builtin fixtures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }
    if (*self)
        return selftest();
    return execute(config, static_cast<bool>(*scan), no_timings);
}
