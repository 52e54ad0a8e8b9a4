// Acceptance criteria, one PASS/FAIL line each. Exit status is the number
// of failed criteria. Criterion 9 needs external integral files and reports
// SKIP when they are not provided (see README).

#include "mrrpa/pipeline.hpp"
#include "mrrpa/reference_sr.hpp"
#include "mrrpa/report.hpp"
#include "mrrpa/testing/brute_force.hpp"
#include "mrrpa/testing/fixtures.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace mrrpa;
namespace fs = std::filesystem;

namespace {

namespace tol {
constexpr double quad64 = 1e-6;
constexpr double quad256 = 1e-9;
constexpr double trbt = 1e-9;
constexpr double sr = 1e-10;
constexpr double full_cas = 1e-12;
constexpr double extensive = 1e-8;
constexpr double ring2 = 1e-8;
constexpr double partial_sum = 1e-6;
constexpr double manifold = 1e-10;
constexpr double spectrum = 1e-9;
constexpr double metric = 1e-8;
constexpr double riccati = 1e-8;
constexpr double nsd = 1e-12;
constexpr double one_electron = 1e-10;
constexpr double paper_mh = 1.5;
} // namespace tol

/// Collects sub-checks of one criterion.
class Criterion {
  public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    void check(bool ok, const std::string &what) {
        ok_ = ok_ && ok;
        details_.push_back(fmt::format("    {} {}", ok ? "ok  " : "FAIL", what));
    }
    void fail(const std::string &what) { check(false, what); }

    bool report(int number) const {
        fmt::print("criterion {} [{}]: {}\n", number, title_, ok_ ? "PASS" : "FAIL");
        for (const auto &d : details_)
            fmt::print("{}\n", d);
        return ok_;
    }

  private:
    std::string title_;
    bool ok_ = true;
    std::vector<std::string> details_;
};

struct Evaluated {
    PartitionResult pr;
    ExcitationManifold man;
    RPAMatrices m;
    RPASolution sol;
    RingAmplitudes amps;
};

Evaluated evaluate(const testing::Fixture &fx) {
    Evaluated e{build_partition(fx.integrals, fx.spaces), {}, {}, {}, {}};
    SectorSolution ground = e.pr.ground_sector;
    const ActiveSectors sectors = solve_manifold_sectors(e.pr.partition, std::move(ground), 20000);
    e.man = build_manifold(e.pr.partition, sectors);
    if (e.man.size() > 0) {
        e.m = assemble_AB(e.man, ResidualInteraction(e.pr.partition));
        e.sol = solve_rpa(e.m);
        e.amps = ring_ccd_amplitudes(e.sol, e.m);
    }
    return e;
}

MethodSet all_methods() {
    MethodSet m;
    m.sosex = m.quadrature = m.tda = true;
    return m;
}

double expected(const testing::Fixture &fx, const std::string &q) {
    const auto v = fx.expect(q);
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

void guarded(Criterion &c, const std::string &label, const std::function<void()> &body) {
    try {
        body();
    } catch (const std::exception &e) {
        c.fail(fmt::format("{}: exception: {}", label, e.what()));
    }
}

// ---------------------------------------------------------------------------

Criterion cross_formula() {
    Criterion c("cross-formula equivalence");
    for (const auto &fx : testing::cross_formula_fixtures())
        guarded(c, fx.name, [&] {
            const Evaluated e = evaluate(fx);
            const ResidualInteraction v(e.pr.partition);
            const double ep = plasmon_energy(e.sol);
            const double q64 = rpa_energy_quadrature(e.man, v, default_grid(e.man, 64));
            const double q256 = rpa_energy_quadrature(e.man, v, default_grid(e.man, 256));
            const double tb = rpa_energy_from_T(e.amps, e.m);
            const double d64 = std::abs(ep - q64), d256 = std::abs(ep - q256),
                         dt = std::abs(ep - tb);
            c.check(d64 < tol::quad64 && d256 < tol::quad256 && dt < tol::trbt,
                    fmt::format("{:<16} E={:+.12f}  |quad64| {:.1e}  |quad256| {:.1e}  |trBT| {:.1e}",
                                fx.name, ep, d64, d256, dt));
        });
    return c;
}

Criterion sr_reduction() {
    Criterion c("single-reference reduction");
    int n = 0;
    for (const auto &fx : testing::sr_fixtures())
        guarded(c, fx.name, [&] {
            const PipelineResult r = run_pipeline(fx.integrals, fx.spaces, all_methods());
            const double ref = sr::sr_rpa_energy(fx.integrals, fx.spaces.core);
            const double d = std::abs(*r.de_rpa_plasmon - ref);
            c.check(d < tol::sr, fmt::format("{:<16} MR {:+.12f}  textbook {:+.12f}  |diff| {:.1e}",
                                             fx.name, *r.de_rpa_plasmon, ref, d));
            ++n;
        });
    c.check(n >= 3, fmt::format("{} closed-shell fixtures", n));
    return c;
}

Criterion full_cas() {
    Criterion c("full active space limit");
    for (const auto &fx : {testing::hubbard4_full_cas(), testing::hubbard_chain_mo("hubbard2_fullcas", 2, 1.0, 4.0, {}, {0, 1}, {}, 2)})
        guarded(c, fx.name, [&] {
            const PipelineResult r = run_pipeline(fx.integrals, fx.spaces, all_methods());
            const double rpa = *r.de_rpa_plasmon, sosex = *r.de_sosex;
            c.check(r.stable && std::abs(rpa) < tol::full_cas && std::abs(sosex) < tol::full_cas,
                    fmt::format("{:<16} RPA {:.1e}  SOSEX {:.1e}", fx.name, rpa, sosex));
        });
    return c;
}

Criterion extensivity() {
    Criterion c("size extensivity");
    const std::vector<std::pair<testing::Fixture, testing::Fixture>> cases{
        {testing::dimer_fragment(), testing::dimer_pair()},
        {testing::hubbard4_cas22(), testing::hubbard4_pair()}};
    for (const auto &[frag, pair] : cases)
        guarded(c, pair.name, [&] {
            const PipelineResult a = run_pipeline(frag.integrals, frag.spaces, all_methods());
            const PipelineResult ab = run_pipeline(pair.integrals, pair.spaces, all_methods());
            const double dc = std::abs(ab.e_casci - 2 * a.e_casci);
            const double dr = std::abs(*ab.de_rpa_plasmon - 2 * *a.de_rpa_plasmon);
            const double ds = std::abs(*ab.de_sosex - 2 * *a.de_sosex);
            c.check(dc < tol::extensive && dr < tol::extensive && ds < tol::extensive,
                    fmt::format("{:<16} |dCASCI| {:.1e}  |dRPA| {:.1e}  |dSOSEX| {:.1e}", pair.name,
                                dc, dr, ds));
        });
    return c;
}

Criterion ring_orders_oracle() {
    Criterion c("ring-order oracle");
    guarded(c, "scalar", [&] {
        const auto fx = testing::scalar_model();
        const Evaluated e = evaluate(fx);
        const ResidualInteraction v(e.pr.partition);
        const auto orders = ring_orders(e.man, v, 8, default_grid(e.man));
        const double e2 = orders[0], ref2 = expected(fx, "ring2");
        c.check(std::abs(e2 - ref2) < tol::ring2,
                fmt::format("scalar E2 {:+.12f}  -b^2/(4w) {:+.12f}  |diff| {:.1e}", e2, ref2,
                            std::abs(e2 - ref2)));
        double partial = 0.0;
        for (double x : orders)
            partial += x;
        const double resummed = plasmon_energy(e.sol);
        const double d = std::abs(partial - resummed);
        c.check(d < tol::partial_sum,
                fmt::format("scalar sum_(n=2..8) E_n {:+.12f}  resummed {:+.12f}  |diff| {:.3e} "
                            "(tolerance {:.0e})",
                            partial, resummed, d, tol::partial_sum));
    });
    for (const auto &fx : {testing::hubbard_dimer_sr(), testing::hubbard4_sr(), testing::dimer_pair_sr()})
        guarded(c, fx.name, [&] {
            const Evaluated e = evaluate(fx);
            const double e2 = ring_order_n(e.man, ResidualInteraction(e.pr.partition), 2,
                                           default_grid(e.man));
            const double sos =
                testing::brute_ring_second_order(testing::BruteForceSpace(e.pr.partition));
            c.check(std::abs(e2 - sos) < tol::ring2,
                    fmt::format("{:<16} E2 {:+.12f}  sum over states {:+.12f}  |diff| {:.1e}",
                                fx.name, e2, sos, std::abs(e2 - sos)));
        });
    return c;
}

Criterion manifold_oracle() {
    Criterion c("manifold oracle");
    guarded(c, "hubbard4_cas22", [&] {
        const auto fx = testing::hubbard4_cas22();
        const Evaluated e = evaluate(fx);
        const testing::BruteForceSpace space(e.pr.partition);
        const auto cmp =
            testing::compare_manifold(e.man, testing::brute_transition_densities(space));
        const auto n = e.man.class_counts();
        c.check(cmp.same_levels && cmp.max_omega_error < tol::manifold &&
                    cmp.max_density_error < tol::manifold,
                fmt::format("{} states (CV {} CA {} AV {} AA {})  levels match: {}  max|dw| {:.1e}  "
                            "max|d projector| {:.1e}",
                            e.man.size(), n[0], n[1], n[2], n[3], cmp.same_levels,
                            cmp.max_omega_error, cmp.max_density_error));
    });
    return c;
}

Criterion structure() {
    Criterion c("stability and structure");
    for (const auto &fx : testing::all_fixtures())
        guarded(c, fx.name, [&] {
            const Evaluated e = evaluate(fx);
            if (e.man.size() == 0) {
                c.check(true, fmt::format("{:<16} empty manifold", fx.name));
                return;
            }
            const int n = e.m.n();
            const Eigen::VectorXcd ev = full_spectrum(e.m);
            std::vector<double> w;
            double imag = 0.0;
            for (Eigen::Index k = 0; k < ev.size(); ++k) {
                w.push_back(ev(k).real());
                imag = std::max(imag, std::abs(ev(k).imag()));
            }
            std::sort(w.begin(), w.end());
            double asym = imag;
            for (int k = 0; k < n; ++k)
                asym = std::max(asym, std::abs(w[k] + w[2 * n - 1 - k]));
            const Eigen::MatrixXd N = e.sol.X.transpose() * e.sol.X - e.sol.Y.transpose() * e.sol.Y;
            const double metric = (N - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
            const double ric = e.amps.riccati_residual;
            double top = -std::numeric_limits<double>::infinity();
            const PolarizabilityEval pi(e.man);
            for (double node : default_grid(e.man).nodes)
                top = std::max(top, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                        pi(node), Eigen::EigenvaluesOnly)
                                        .eigenvalues()
                                        .maxCoeff());
            c.check(e.sol.stable && asym < tol::spectrum && metric < tol::metric &&
                        ric < tol::riccati && top <= tol::nsd,
                    fmt::format("{:<16} n={:<3} spectrum asym {:.1e}  metric {:.1e}  riccati {:.1e}  "
                                "max eig Pi {:.1e}",
                                fx.name, n, asym, metric, ric, top));
        });
    return c;
}

Criterion one_electron() {
    Criterion c("one-electron self-interaction");
    for (const auto &fx : {testing::scalar_model(), testing::one_electron_chain()})
        guarded(c, fx.name, [&] {
            const PipelineResult r = run_pipeline(fx.integrals, fx.spaces, all_methods());
            const double ref = expected(fx, "de_sosex");
            c.check(std::abs(*r.de_sosex - ref) < tol::one_electron && *r.de_rpa_plasmon < 0.0,
                    fmt::format("{:<16} SOSEX {:+.1e}  RPA {:+.12f}", fx.name, *r.de_sosex,
                                *r.de_rpa_plasmon));
        });
    return c;
}

// Criterion 9 ---------------------------------------------------------------
//
// $MRRPA_REFERENCE_DATA/manifest.json, paths relative to the manifest:
//   {"h2": {"inputs": ["h2_0.60.fcidump", ...], "spaces": {...}},
//    "hf": {"equilibrium": "hf_eq.fcidump", "dissociated": "hf_far.fcidump",
//           "spaces": {...}}}
// Each section may also carry "spaces_dissociated". H2 FCI energies come from
// a full-space CASCI of the same integrals.

constexpr double kH2NpeMilliHartree = 8.79;
constexpr double kHFDissociationMilliHartree = 194.3;

std::vector<double> mr_rpa_totals(const nlohmann::json &inputs, const nlohmann::json &spaces,
                                  const fs::path &base, RunConfig *cfg_out = nullptr) {
    const nlohmann::json j = {{"inputs", inputs}, {"spaces", spaces}, {"methods", {"casci", "rpa"}}};
    const RunConfig cfg = parse_config(j, base);
    const EnergyReport rep = run(cfg, worker_count());
    if (!rep.failures.empty())
        throw std::runtime_error(rep.failures[0].label + ": " + rep.failures[0].message);
    std::vector<double> out;
    for (const auto &r : rep.records) {
        if (!r.stable || !r.de_rpa)
            throw InstabilityError(r.label + ": " + r.diagnostic);
        out.push_back(r.e_casci + *r.de_rpa);
    }
    if (cfg_out)
        *cfg_out = cfg;
    return out;
}

bool reference_data(Criterion &c) {
    const char *dir = std::getenv("MRRPA_REFERENCE_DATA");
    if (!dir || !fs::exists(fs::path(dir) / "manifest.json"))
        return false;
    const fs::path base = dir;
    nlohmann::json manifest;
    try {
        std::ifstream is(base / "manifest.json");
        manifest = nlohmann::json::parse(is);
    } catch (const std::exception &e) {
        c.fail(std::string("manifest: ") + e.what());
        return true;
    }
    if (manifest.contains("h2"))
        guarded(c, "h2", [&] {
            const auto &h2 = manifest.at("h2");
            RunConfig cfg;
            const std::vector<double> mr = mr_rpa_totals(h2.at("inputs"), h2.at("spaces"), base, &cfg);
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t k = 0; k < mr.size(); ++k) {
                const IntegralSet set = load_input(cfg.inputs[k]);
                const ActiveHamiltonian full{set.norb(), set.h1(), set.dense_eri()};
                const double fci = solve_sector(full, set.nelec(), set.ms2()).energies(0) + set.e_core();
                lo = std::min(lo, mr[k] - fci);
                hi = std::max(hi, mr[k] - fci);
            }
            const double npe = 1e3 * (hi - lo);
            c.check(std::abs(npe - kH2NpeMilliHartree) <= tol::paper_mh,
                    fmt::format("H2 MR-RPA NPE vs FCI {:.2f} mEh over {} points (reference {:.2f} "
                                "+- {:.1f})",
                                npe, mr.size(), kH2NpeMilliHartree, tol::paper_mh));
        });
    else
        c.fail("manifest has no h2 section");
    if (manifest.contains("hf"))
        guarded(c, "hf", [&] {
            const auto &hf = manifest.at("hf");
            const double eq =
                mr_rpa_totals(nlohmann::json::array({hf.at("equilibrium")}), hf.at("spaces"), base)[0];
            const double far = mr_rpa_totals(nlohmann::json::array({hf.at("dissociated")}),
                                             hf.value("spaces_dissociated", hf.at("spaces")), base)[0];
            const double de = 1e3 * (far - eq);
            c.check(std::abs(de - kHFDissociationMilliHartree) <= tol::paper_mh,
                    fmt::format("HF MR-RPA dissociation energy {:.1f} mEh (reference {:.1f} +- {:.1f})",
                                de, kHFDissociationMilliHartree, tol::paper_mh));
        });
    else
        c.fail("manifest has no hf section");
    return true;
}

} // namespace

int main() {
    int failed = 0;
    int number = 0;
    for (const Criterion &c : {cross_formula(), sr_reduction(), full_cas(), extensivity(),
                               ring_orders_oracle(), manifold_oracle(), structure(), one_electron()})
        failed += c.report(++number) ? 0 : 1;

    Criterion paper("reference-molecule reproduction");
    if (reference_data(paper)) {
        failed += paper.report(9) ? 0 : 1;
    } else {
        fmt::print("criterion 9 [reference-molecule reproduction]: SKIP\n"
                   "    not evaluated: set MRRPA_REFERENCE_DATA to a directory with manifest.json "
                   "and cc-pVDZ CASSCF FCIDUMP files\n");
    }
    fmt::print("{} criteria failed\n", failed);
    return failed;
}
