#pragma once

// Zeroth-order excited states |N> of H_D that couple to |0> through a
// one-body operator p^+ r, with their excitation energies and transition
// densities <N|p^+ r|0>.
//
// Four classes: core -> virtual (CV), core -> active (CA: core hole times an
// (N_A+1)-electron active state), active -> virtual (AV: virtual particle
// times an (N_A-1)-electron active state), and active-internal (AA).
//
// Product states are ordered core, active, virtual, alpha before beta inside
// each space; a CA state is |core minus i>|Phi_mu> and an AV state is
// |core>|Phi_mu>|a>. CV states are defined as a^+ i|0>.

#include "mrrpa/casci.hpp"
#include "mrrpa/errors.hpp"
#include "mrrpa/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mrrpa {

enum class ExcitationClass { CV = 0, CA = 1, AV = 2, AA = 3 };

inline const char *to_string(ExcitationClass c) {
    switch (c) {
    case ExcitationClass::CV:
        return "CV";
    case ExcitationClass::CA:
        return "CA";
    case ExcitationClass::AV:
        return "AV";
    case ExcitationClass::AA:
        return "AA";
    }
    return "?";
}

/// One entry <N|p^+ r|0>, spin orbitals flattened (see SpinOrbital::flat).
struct TransitionEntry {
    int p = 0;
    int r = 0;
    double value = 0.0;
};

struct ExcitedState {
    ExcitationClass cls = ExcitationClass::CV;
    double omega = 0.0;
    std::vector<TransitionEntry> d;
    /// Core hole (flat spin orbital) or -1.
    int core = -1;
    /// Virtual particle (flat spin orbital) or -1.
    int virt = -1;
    /// Active eigenstate index within `sector`, or -1.
    int mu = -1;
    int sector_nelec = 0;
    int sector_sz2 = 0;
};

/// Active-space eigen-solutions keyed by (N, 2Sz).
class ActiveSectors {
  public:
    void add(SectorSolution sol) {
        const auto key = std::make_pair(sol.nelec, sol.sz2);
        sectors_.insert_or_assign(key, std::move(sol));
    }
    bool contains(int nelec, int sz2) const { return sectors_.contains({nelec, sz2}); }
    const SectorSolution &get(int nelec, int sz2) const {
        auto it = sectors_.find({nelec, sz2});
        if (it == sectors_.end())
            throw UsageError(fmt::format("missing active sector solution N={} 2Sz={}", nelec, sz2));
        return it->second;
    }

  private:
    std::map<std::pair<int, int>, SectorSolution> sectors_;
};

/// Solves every active sector that build_manifold can reach from the ground
/// sector. `ground` is reused for (N_A, ms2).
inline ActiveSectors solve_manifold_sectors(const DyallPartition &part, SectorSolution ground,
                                            int max_dim = 20000) {
    ActiveSectors out;
    const int MA = part.spaces.n_active();
    const int NA = ground.nelec, ms2 = ground.sz2;
    out.add(std::move(ground));
    if (MA == 0)
        return out;
    for (int ds : {+1, -1}) {
        if (part.spaces.n_core() > 0 && sector_feasible(MA, NA + 1, ms2 + ds))
            out.add(solve_sector(part.active, NA + 1, ms2 + ds, max_dim));
        if (part.spaces.n_virtual() > 0 && sector_feasible(MA, NA - 1, ms2 + ds))
            out.add(solve_sector(part.active, NA - 1, ms2 + ds, max_dim));
    }
    return out;
}

struct ManifoldOptions {
    double drop_tol = 1e-12;
    /// Smallest acceptable excitation energy (Hartree).
    double min_omega = 1e-6;
};

class ExcitationManifold {
  public:
    std::vector<ExcitedState> states;
    /// Ordered (p, r) pairs; column k of the pair basis is pairs[k].
    std::vector<std::pair<int, int>> pairs;
    int n_spin_orbitals = 0;

    int size() const { return static_cast<int>(states.size()); }
    int n_pairs() const { return static_cast<int>(pairs.size()); }

    int pair_column(int p, int r) const {
        auto it = pair_lookup_.find(key(p, r));
        return it == pair_lookup_.end() ? -1 : it->second;
    }

    /// Registers (p, r) if new and returns its column.
    int register_pair(int p, int r) {
        auto [it, inserted] = pair_lookup_.emplace(key(p, r), n_pairs());
        if (inserted)
            pairs.emplace_back(p, r);
        return it->second;
    }

    std::array<int, 4> class_counts() const {
        std::array<int, 4> n{};
        for (const auto &s : states)
            ++n[static_cast<int>(s.cls)];
        return n;
    }

    Eigen::VectorXd omegas() const {
        Eigen::VectorXd w(size());
        for (int n = 0; n < size(); ++n)
            w(n) = states[n].omega;
        return w;
    }

    /// Transition densities as a (pairs x states) matrix.
    Eigen::MatrixXd density_matrix() const {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n_pairs(), size());
        for (int n = 0; n < size(); ++n)
            for (const auto &e : states[n].d)
                D(pair_column(e.p, e.r), n) += e.value;
        return D;
    }

  private:
    std::int64_t key(int p, int r) const {
        return static_cast<std::int64_t>(p) * n_spin_orbitals + r;
    }
    std::unordered_map<std::int64_t, int> pair_lookup_;
};

inline ExcitationManifold build_manifold(const DyallPartition &part, const ActiveSectors &sectors,
                                         const ManifoldOptions &opt = {}) {
    const auto &sp = part.spaces;
    const int nc = sp.n_core(), MA = sp.n_active();
    const int NA = sp.n_active_electrons;
    const int ms2 = part.integrals.ms2();
    const SectorSolution &ground = sectors.get(NA, ms2);
    const double E0 = ground.energies(0);

    ExcitationManifold man;
    man.n_spin_orbitals = 2 * part.norb();

    auto so = [](int orb, Spin s) { return SpinOrbital{orb, s}.flat(); };
    auto push = [&](ExcitedState st) {
        double dmax = 0.0;
        for (const auto &e : st.d)
            dmax = std::max(dmax, std::abs(e.value));
        if (dmax < opt.drop_tol)
            return;
        if (st.omega < opt.min_omega)
            throw InstabilityError(fmt::format(
                "{} excitation with omega = {:.3e} Eh below {:.1e}; the zeroth-order "
                "ground state is not the lowest state of H_D",
                to_string(st.cls), st.omega, opt.min_omega));
        std::erase_if(st.d, [&](const TransitionEntry &e) { return e.value == 0.0; });
        for (const auto &e : st.d)
            man.register_pair(e.p, e.r);
        man.states.push_back(std::move(st));
    };

    // CV
    for (Spin s : {Spin::Alpha, Spin::Beta})
        for (int k = 0; k < nc; ++k)
            for (int b = 0; b < sp.n_virtual(); ++b) {
                ExcitedState st;
                st.cls = ExcitationClass::CV;
                st.core = so(sp.core[k], s);
                st.virt = so(sp.virt[b], s);
                st.omega = part.eps_virt(b) - part.eps_core(k);
                st.sector_nelec = NA;
                st.sector_sz2 = ms2;
                st.d.push_back({st.virt, st.core, 1.0});
                push(std::move(st));
            }

    if (MA > 0) {
        // CA: <Theta_i Phi_mu|x^+ i|Theta_0 Phi_0> = -(-1)^pos(i) <Phi_mu|x^+|Phi_0>
        for (Spin s : {Spin::Alpha, Spin::Beta}) {
            const int sz2 = ms2 + spin_sign(s);
            if (nc == 0 || !sector_feasible(MA, NA + 1, sz2))
                continue;
            const SectorSolution &plus = sectors.get(NA + 1, sz2);
            const Eigen::MatrixXd amp = creation_amplitudes(plus, ground);
            for (int k = 0; k < nc; ++k) {
                const int pos = static_cast<int>(s) * nc + k;
                const double phase = (pos % 2 == 0) ? -1.0 : 1.0;
                for (int mu = 0; mu < plus.dim(); ++mu) {
                    ExcitedState st;
                    st.cls = ExcitationClass::CA;
                    st.core = so(sp.core[k], s);
                    st.mu = mu;
                    st.sector_nelec = NA + 1;
                    st.sector_sz2 = sz2;
                    st.omega = -part.eps_core(k) + (plus.energies(mu) - E0);
                    for (int x = 0; x < MA; ++x) {
                        const double v = amp(mu, active_spin_orbital(x, s, MA));
                        if (v != 0.0)
                            st.d.push_back({so(sp.active[x], s), st.core, phase * v});
                    }
                    push(std::move(st));
                }
            }
        }

        // AV: <Theta^a Phi_mu|a^+ y|Theta_0 Phi_0> = (-1)^(N_A-1) <Phi_mu|y|Phi_0>
        for (Spin s : {Spin::Alpha, Spin::Beta}) {
            const int sz2 = ms2 - spin_sign(s);
            if (sp.n_virtual() == 0 || !sector_feasible(MA, NA - 1, sz2))
                continue;
            const SectorSolution &minus = sectors.get(NA - 1, sz2);
            const Eigen::MatrixXd amp = annihilation_amplitudes(minus, ground);
            const double phase = ((NA - 1) % 2 == 0) ? 1.0 : -1.0;
            for (int b = 0; b < sp.n_virtual(); ++b)
                for (int mu = 0; mu < minus.dim(); ++mu) {
                    ExcitedState st;
                    st.cls = ExcitationClass::AV;
                    st.virt = so(sp.virt[b], s);
                    st.mu = mu;
                    st.sector_nelec = NA - 1;
                    st.sector_sz2 = sz2;
                    st.omega = part.eps_virt(b) + (minus.energies(mu) - E0);
                    for (int y = 0; y < MA; ++y) {
                        const double v = amp(mu, active_spin_orbital(y, s, MA));
                        if (v != 0.0)
                            st.d.push_back({st.virt, so(sp.active[y], s), phase * v});
                    }
                    push(std::move(st));
                }
        }

        // AA
        const Eigen::MatrixXd amp = excitation_amplitudes(ground, ground);
        const int nso = 2 * MA;
        for (int mu = 1; mu < ground.dim(); ++mu) {
            ExcitedState st;
            st.cls = ExcitationClass::AA;
            st.mu = mu;
            st.sector_nelec = NA;
            st.sector_sz2 = ms2;
            st.omega = ground.energies(mu) - E0;
            for (int x = 0; x < nso; ++x)
                for (int y = 0; y < nso; ++y) {
                    const double v = amp(mu, x * nso + y);
                    if (v == 0.0)
                        continue;
                    const Spin sx = x < MA ? Spin::Alpha : Spin::Beta;
                    const Spin sy = y < MA ? Spin::Alpha : Spin::Beta;
                    st.d.push_back({so(sp.active[x % MA], sx), so(sp.active[y % MA], sy), v});
                }
            push(std::move(st));
        }
    }
    return man;
}

} // namespace mrrpa
