#pragma once

// End-to-end evaluation for one geometry: partition, active sectors,
// excitation manifold, and the requested correlation energies.

#include "mrrpa/casci.hpp"
#include "mrrpa/errors.hpp"
#include "mrrpa/integrals.hpp"
#include "mrrpa/manifold.hpp"
#include "mrrpa/partition.hpp"
#include "mrrpa/quadrature.hpp"
#include "mrrpa/rpa.hpp"
#include "mrrpa/sosex.hpp"

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace mrrpa {

struct MethodSet {
    bool casci = true;
    bool rpa = true;
    bool sosex = false;
    bool tda = false;
    bool quadrature = false;
    bool order_n = false;
};

struct PipelineOptions {
    PartitionOptions partition;
    ManifoldOptions manifold;
    int grid_nodes = 64;
    /// Non-positive selects the median excitation energy.
    double grid_scale = 0.0;
    double imag_tol = 1e-10;
    int max_ring_order = 8;
};

struct PipelineResult {
    /// Absolute CASCI energy for the given orbitals (includes e_core).
    double e_casci = 0.0;
    std::optional<double> de_rpa_plasmon;
    std::optional<double> de_rpa_quadrature;
    std::optional<double> de_rpa_trbt;
    std::optional<double> de_sosex;
    std::optional<double> omega_min_rpa;
    std::optional<double> omega_min_tda;
    std::vector<double> ring_orders;
    bool stable = true;
    std::string diagnostic;
    std::array<int, 4> class_counts{};
    int n_pairs = 0;
    double seconds = 0.0;
};

/// Energy of the closed-shell core plus the CASCI active energy.
inline double casci_total_energy(const DyallPartition &part, double active_energy) {
    const IntegralSet &set = part.integrals;
    double e = set.e_core() + active_energy;
    for (int i : part.spaces.core) {
        e += 2.0 * set.h(i, i);
        for (int j : part.spaces.core)
            e += 2.0 * set.eri(i, i, j, j) - set.eri(i, j, j, i);
    }
    return e;
}

/// Everything downstream of the integrals for one system. Numerical
/// breakdowns are reported through `stable`/`diagnostic` for the RPA-level
/// methods; usage and capacity errors propagate.
inline PipelineResult run_pipeline(const IntegralSet &set, const OrbitalSpaces &spaces,
                                   const MethodSet &methods, const PipelineOptions &opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult out;
    PartitionResult pr = build_partition(set, spaces, opt.partition);
    const DyallPartition &part = pr.partition;
    out.e_casci = casci_total_energy(part, pr.ground_sector.energies(0));

    const bool need_rpa =
        methods.rpa || methods.sosex || methods.tda || methods.quadrature || methods.order_n;
    if (need_rpa) {
        const ActiveSectors sectors = solve_manifold_sectors(
            part, std::move(pr.ground_sector), opt.partition.max_sector_dim);
        const ExcitationManifold man = build_manifold(part, sectors, opt.manifold);
        const ResidualInteraction v(part);
        out.class_counts = man.class_counts();
        out.n_pairs = man.n_pairs();

        if (man.size() == 0) {
            // Nothing couples to the reference.
            if (methods.rpa)
                out.de_rpa_plasmon = out.de_rpa_trbt = 0.0;
            if (methods.sosex)
                out.de_sosex = 0.0;
            if (methods.quadrature)
                out.de_rpa_quadrature = 0.0;
        } else {
            if (methods.rpa || methods.sosex || methods.tda) {
                const RPAMatrices m = assemble_AB(man, v);
                const RPASolution sol = solve_rpa(m, opt.imag_tol);
                if (methods.tda)
                    out.omega_min_tda = sol.omega_tda(0);
                if (!sol.stable) {
                    out.stable = false;
                    out.diagnostic = sol.diagnostic;
                } else {
                    if (methods.tda)
                        out.omega_min_rpa = sol.omega_rpa(0);
                    if (methods.rpa)
                        out.de_rpa_plasmon = plasmon_energy(sol);
                    if (methods.rpa || methods.sosex) {
                        try {
                            const RingAmplitudes amps = ring_ccd_amplitudes(sol, m);
                            if (methods.rpa)
                                out.de_rpa_trbt = rpa_energy_from_T(amps, m);
                            if (methods.sosex)
                                out.de_sosex = sosex_energy(amps, man, v);
                        } catch (const InstabilityError &e) {
                            out.stable = false;
                            out.diagnostic = e.what();
                        }
                    }
                }
            }
            if (methods.quadrature || methods.order_n) {
                const double scale = opt.grid_scale > 0 ? opt.grid_scale : median_omega(man);
                const FrequencyGrid grid = make_grid(opt.grid_nodes, scale);
                if (methods.quadrature) {
                    try {
                        out.de_rpa_quadrature = rpa_energy_quadrature(man, v, grid);
                    } catch (const InstabilityError &e) {
                        out.stable = false;
                        if (!out.diagnostic.empty())
                            out.diagnostic += "; ";
                        out.diagnostic += e.what();
                    }
                }
                if (methods.order_n)
                    out.ring_orders = ring_orders(man, v, opt.max_ring_order, grid);
            }
        }
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace mrrpa
