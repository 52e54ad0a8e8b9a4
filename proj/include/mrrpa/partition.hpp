#pragma once

// Dyall partition H = H_D + V.
//
// H_D is quadratic in the core and virtual orbitals (semicanonical energies
// from the spin-summed generalized Fock matrix) and keeps the full
// interaction inside the active space. The residual two-body interaction is
// the bare <pq|rs> unless all four orbitals are active.

#include "mrrpa/casci.hpp"
#include "mrrpa/errors.hpp"
#include "mrrpa/integrals.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fmt/format.h>
#include <vector>

namespace mrrpa {

/// Spin orbital of the full system, flattened as 2 * orb + spin.
struct SpinOrbital {
    int orb = 0;
    Spin spin = Spin::Alpha;

    int flat() const { return 2 * orb + static_cast<int>(spin); }
    static SpinOrbital from_flat(int k) { return {k / 2, static_cast<Spin>(k % 2)}; }
    bool operator==(const SpinOrbital &) const = default;
};

/// F(p,q) = h(p,q) + sum_rs gamma(r,s) [(pq|rs) - 1/2 (ps|rq)].
inline Eigen::MatrixXd build_generalized_fock(const IntegralSet &set,
                                              const Eigen::MatrixXd &gamma) {
    const int n = set.norb();
    if (gamma.rows() != n || gamma.cols() != n)
        throw UsageError("density has wrong shape");
    if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw UsageError("density is not symmetric");
    if (std::abs(gamma.trace() - set.nelec()) > 1e-8)
        throw UsageError(fmt::format("density trace {} does not match nelec {}", gamma.trace(),
                                     set.nelec()));
    const DenseEri g = set.dense_eri();
    Eigen::MatrixXd F = set.h1();
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s)
                    if (gamma(r, s) != 0.0)
                        acc += gamma(r, s) * (g(p, q, r, s) - 0.5 * g(p, s, r, q));
            F(p, q) += acc;
        }
    return 0.5 * (F + F.transpose());
}

/// Core 2*I plus the active one-particle density; zero on the virtuals.
inline Eigen::MatrixXd total_density(const OrbitalSpaces &spaces, const Eigen::MatrixXd &gamma_active,
                                     int norb) {
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(norb, norb);
    for (int i : spaces.core)
        gamma(i, i) = 2.0;
    for (int x = 0; x < spaces.n_active(); ++x)
        for (int y = 0; y < spaces.n_active(); ++y)
            gamma(spaces.active[x], spaces.active[y]) = gamma_active(x, y);
    return gamma;
}

struct Semicanonical {
    Eigen::MatrixXd rotation;
    IntegralSet integrals;
};

/// Diagonalizes the core and virtual blocks of `fock` and transforms the
/// integrals accordingly. Active orbitals are left untouched; a block that is
/// already diagonal keeps its orbitals and their order.
inline Semicanonical semicanonicalize(const IntegralSet &set, const OrbitalSpaces &spaces,
                                      const Eigen::MatrixXd &fock) {
    const int n = set.norb();
    if ((fock - fock.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw UsageError("Fock matrix is not symmetric");
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n);
    auto rotate_block = [&](const std::vector<int> &idx) {
        const int k = static_cast<int>(idx.size());
        if (k < 2)
            return;
        Eigen::MatrixXd block(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                block(a, b) = fock(idx[a], idx[b]);
        const Eigen::MatrixXd off = block - Eigen::MatrixXd(block.diagonal().asDiagonal());
        if (off.cwiseAbs().maxCoeff() < 1e-13)
            return;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
        Eigen::MatrixXd U = es.eigenvectors();
        normalize_column_signs(U);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                R(idx[a], idx[b]) = U(a, b);
    };
    rotate_block(spaces.core);
    rotate_block(spaces.virt);
    if (R.isIdentity(0.0))
        return {R, set};
    return {R, transform_orbitals(set, R)};
}

/// Zeroth-order Hamiltonian parameters.
struct DyallPartition {
    OrbitalSpaces spaces;
    Eigen::VectorXd eps_core;
    Eigen::VectorXd eps_virt;
    Eigen::MatrixXd f_active;
    ActiveHamiltonian active;
    /// Input orbitals -> semicanonical orbitals.
    Eigen::MatrixXd rotation;
    /// Integrals in the semicanonical basis.
    IntegralSet integrals;
    Eigen::MatrixXd fock;
    Eigen::MatrixXd gamma_active;

    int norb() const { return integrals.norb(); }
};

/// Builds H_D from semicanonical integrals and the active density.
inline DyallPartition build_dyall(const IntegralSet &set, const OrbitalSpaces &spaces,
                                  const Eigen::MatrixXd &gamma_active) {
    validate(spaces, set);
    if (spaces.n_active() == 0 && spaces.n_active_electrons > 0)
        throw UsageError("active electrons without active orbitals");
    const int MA = spaces.n_active();
    if (gamma_active.rows() != MA || gamma_active.cols() != MA)
        throw UsageError("active density has wrong shape");

    DyallPartition part;
    part.spaces = spaces;
    part.integrals = set;
    part.rotation = Eigen::MatrixXd::Identity(set.norb(), set.norb());
    part.gamma_active = gamma_active;
    part.fock = build_generalized_fock(set, total_density(spaces, gamma_active, set.norb()));

    part.eps_core.resize(spaces.n_core());
    for (int k = 0; k < spaces.n_core(); ++k)
        part.eps_core(k) = part.fock(spaces.core[k], spaces.core[k]);
    part.eps_virt.resize(spaces.n_virtual());
    for (int k = 0; k < spaces.n_virtual(); ++k)
        part.eps_virt(k) = part.fock(spaces.virt[k], spaces.virt[k]);

    const DenseEri g = set.dense_eri();
    part.f_active.resize(MA, MA);
    for (int x = 0; x < MA; ++x)
        for (int y = 0; y < MA; ++y) {
            const int px = spaces.active[x], py = spaces.active[y];
            double v = set.h(px, py);
            for (int i : spaces.core)
                v += 2.0 * g(px, py, i, i) - g(px, i, i, py);
            part.f_active(x, y) = v;
        }
    part.f_active = 0.5 * (part.f_active + part.f_active.transpose()).eval();

    part.active.norb = MA;
    part.active.f = part.f_active;
    part.active.eri = DenseEri(MA);
    for (int x = 0; x < MA; ++x)
        for (int y = 0; y < MA; ++y)
            for (int z = 0; z < MA; ++z)
                for (int w = 0; w < MA; ++w)
                    part.active.eri(x, y, z, w) =
                        g(spaces.active[x], spaces.active[y], spaces.active[z], spaces.active[w]);
    return part;
}

/// V = H - H_D over spin orbitals.
class ResidualInteraction {
  public:
    explicit ResidualInteraction(const DyallPartition &part)
        : eri_(part.integrals.dense_eri()), active_(part.norb(), false) {
        const int n = part.norb();
        for (int x : part.spaces.active)
            active_[x] = true;
        Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < part.spaces.n_core(); ++k)
            h0(part.spaces.core[k], part.spaces.core[k]) = part.eps_core(k);
        for (int k = 0; k < part.spaces.n_virtual(); ++k)
            h0(part.spaces.virt[k], part.spaces.virt[k]) = part.eps_virt(k);
        for (int x = 0; x < part.spaces.n_active(); ++x)
            for (int y = 0; y < part.spaces.n_active(); ++y)
                h0(part.spaces.active[x], part.spaces.active[y]) = part.f_active(x, y);
        one_body_ = part.integrals.h1() - h0;
    }

    int norb() const { return eri_.norb(); }
    bool is_active(int orb) const { return active_[orb]; }

    /// v_{pr,qs}: coefficient of 1/2 p^+ q^+ s r in V.
    double two_body(SpinOrbital p, SpinOrbital r, SpinOrbital q, SpinOrbital s) const {
        if (p.spin != r.spin || q.spin != s.spin)
            return 0.0;
        if (active_[p.orb] && active_[r.orb] && active_[q.orb] && active_[s.orb])
            return 0.0;
        return eri_(p.orb, r.orb, q.orb, s.orb);
    }
    double two_body(int p, int r, int q, int s) const {
        return two_body(SpinOrbital::from_flat(p), SpinOrbital::from_flat(r),
                        SpinOrbital::from_flat(q), SpinOrbital::from_flat(s));
    }

    /// v_{pq}; does not enter the ring energies.
    double one_body(SpinOrbital p, SpinOrbital q) const {
        return p.spin == q.spin ? one_body_(p.orb, q.orb) : 0.0;
    }

    /// Bare <pq|rs> with spin deltas, for closure checks.
    double coulomb(SpinOrbital p, SpinOrbital r, SpinOrbital q, SpinOrbital s) const {
        if (p.spin != r.spin || q.spin != s.spin)
            return 0.0;
        return eri_(p.orb, r.orb, q.orb, s.orb);
    }

  private:
    DenseEri eri_;
    std::vector<bool> active_;
    Eigen::MatrixXd one_body_;
};

inline double residual_v(const ResidualInteraction &v, SpinOrbital p, SpinOrbital r, SpinOrbital q,
                         SpinOrbital s) {
    return v.two_body(p, r, q, s);
}

struct PartitionOptions {
    double density_tol = 1e-9;
    int max_iterations = 50;
    double degeneracy_gap = 1e-8;
    int max_sector_dim = 20000;
};

/// Converged Dyall partition together with the CASCI ground sector.
struct PartitionResult {
    DyallPartition partition;
    SectorSolution ground_sector;
    int iterations = 0;
};

/// Self-consistent partition: active density from the CASCI ground state of
/// H_A, generalized Fock from core + active density, semicanonicalize, and
/// repeat until the active density is stationary.
inline PartitionResult build_partition(const IntegralSet &set, const OrbitalSpaces &spaces,
                                       const PartitionOptions &opt = {}) {
    validate(spaces, set);
    if (spaces.n_active() == 0 && spaces.n_active_electrons > 0)
        throw UsageError("active electrons without active orbitals");
    const int MA = spaces.n_active();
    if (!sector_feasible(MA, spaces.n_active_electrons, set.ms2()))
        throw UsageError(fmt::format("active sector N={} 2Sz={} infeasible in {} orbitals",
                                     spaces.n_active_electrons, set.ms2(), MA));

    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(MA, MA);
    if (MA > 0)
        gamma.diagonal().setConstant(static_cast<double>(spaces.n_active_electrons) / MA);

    PartitionResult res;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const Eigen::MatrixXd F =
            build_generalized_fock(set, total_density(spaces, gamma, set.norb()));
        Semicanonical sc = semicanonicalize(set, spaces, F);
        DyallPartition part = build_dyall(sc.integrals, spaces, gamma);
        part.rotation = sc.rotation;
        SectorSolution ground =
            solve_sector(part.active, spaces.n_active_electrons, set.ms2(), opt.max_sector_dim);
        if (ground.dim() > 1 && ground.energies(1) - ground.energies(0) < opt.degeneracy_gap)
            throw InstabilityError(fmt::format(
                "CASCI ground state is degenerate (gap {:.3e} Eh); the zeroth-order "
                "reference is not unique",
                ground.energies(1) - ground.energies(0)));
        const Eigen::MatrixXd next =
            MA > 0 ? spin_summed_density(ground) : Eigen::MatrixXd(0, 0);
        const double change = MA > 0 ? (next - gamma).cwiseAbs().maxCoeff() : 0.0;
        gamma = next;
        res.iterations = it;
        if (change < opt.density_tol) {
            res.partition = std::move(part);
            res.ground_sector = std::move(ground);
            return res;
        }
    }
    throw InstabilityError("active density did not converge");
}

} // namespace mrrpa
