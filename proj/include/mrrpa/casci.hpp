#pragma once

// Determinant-basis exact diagonalization of the active-space Hamiltonian
// and one-body (transition) densities between its eigenstates.
//
// Phase convention: active spin orbitals are ordered alpha 0..M-1 followed by
// beta 0..M-1, and a determinant is the product of its creation operators in
// that order acting on the vacuum. An operator acting on spin orbital k picks
// up (-1)^(number of occupied spin orbitals before k).

#include "mrrpa/errors.hpp"
#include "mrrpa/integrals.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <fmt/format.h>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mrrpa {

enum class Spin : int { Alpha = 0, Beta = 1 };

inline int spin_sign(Spin s) { return s == Spin::Alpha ? 1 : -1; }

/// Active-space Hamiltonian: one-body f and chemist (xy|zw) over M orbitals.
struct ActiveHamiltonian {
    int norb = 0;
    Eigen::MatrixXd f;
    DenseEri eri;
};

struct Determinant {
    std::uint32_t alpha = 0;
    std::uint32_t beta = 0;

    std::uint64_t bits(int norb) const {
        return static_cast<std::uint64_t>(alpha) | (static_cast<std::uint64_t>(beta) << norb);
    }
    static Determinant from_bits(std::uint64_t bits, int norb) {
        const std::uint64_t mask = (std::uint64_t{1} << norb) - 1;
        return {static_cast<std::uint32_t>(bits & mask),
                static_cast<std::uint32_t>((bits >> norb) & mask)};
    }
    int nelec() const { return std::popcount(alpha) + std::popcount(beta); }
    bool operator==(const Determinant &) const = default;
};

/// Spin-orbital index in the active ordering: alpha block, then beta block.
inline int active_spin_orbital(int orb, Spin s, int norb) {
    return s == Spin::Alpha ? orb : norb + orb;
}

/// Applies a creation (create=true) or annihilation operator on spin orbital
/// `so` to a determinant bit string; nullopt when the result vanishes.
inline std::optional<std::pair<std::uint64_t, int>> apply_ladder(std::uint64_t bits, int so,
                                                                 bool create) {
    const std::uint64_t m = std::uint64_t{1} << so;
    if (create == static_cast<bool>(bits & m))
        return std::nullopt;
    const int sign = (std::popcount(bits & (m - 1)) & 1) ? -1 : 1;
    return std::make_pair(bits ^ m, sign);
}

inline bool sector_feasible(int norb, int nelec, int sz2) {
    return nelec >= 0 && nelec <= 2 * norb && (nelec + sz2) % 2 == 0 && std::abs(sz2) <= nelec &&
           (nelec + sz2) / 2 <= norb && (nelec - sz2) / 2 <= norb;
}

/// All determinants with (nelec, sz2), alpha string major, both in ascending
/// bit-mask order.
inline std::vector<Determinant> enumerate_sector(int norb, int nelec, int sz2) {
    if (norb < 0 || norb > 31)
        throw UsageError(fmt::format("active space of {} orbitals not supported", norb));
    if (!sector_feasible(norb, nelec, sz2))
        throw UsageError(fmt::format("infeasible sector nelec={} sz2={} in {} orbitals", nelec,
                                     sz2, norb));
    const int na = (nelec + sz2) / 2, nb = (nelec - sz2) / 2;
    auto strings = [norb](int k) {
        std::vector<std::uint32_t> out;
        for (std::uint32_t s = 0; s < (std::uint32_t{1} << norb); ++s)
            if (std::popcount(s) == k)
                out.push_back(s);
        return out;
    };
    const auto as = strings(na), bs = strings(nb);
    std::vector<Determinant> dets;
    dets.reserve(as.size() * bs.size());
    for (auto a : as)
        for (auto b : bs)
            dets.push_back({a, b});
    return dets;
}

/// Eigenpairs of H_A within one (N, 2Sz) sector.
struct SectorSolution {
    int norb = 0;
    int nelec = 0;
    int sz2 = 0;
    std::vector<Determinant> basis;
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
    std::unordered_map<std::uint64_t, int> lookup;

    int dim() const { return static_cast<int>(basis.size()); }
    Eigen::VectorXd state(int mu) const { return vectors.col(mu); }
    int find(std::uint64_t bits) const {
        auto it = lookup.find(bits);
        return it == lookup.end() ? -1 : it->second;
    }
};

namespace detail {
inline std::unordered_map<std::uint64_t, int> make_lookup(const std::vector<Determinant> &basis,
                                                          int norb) {
    std::unordered_map<std::uint64_t, int> map;
    map.reserve(basis.size());
    for (int i = 0; i < static_cast<int>(basis.size()); ++i)
        map.emplace(basis[i].bits(norb), i);
    return map;
}
} // namespace detail

/// Dense H_A = f_xy x^+ y + 1/2 (xz|yw) x^+ y^+ w z over the given basis.
inline Eigen::MatrixXd build_active_hamiltonian(const ActiveHamiltonian &ham,
                                                const std::vector<Determinant> &basis) {
    const int M = ham.norb;
    const int nso = 2 * M;
    const int dim = static_cast<int>(basis.size());
    const auto lookup = detail::make_lookup(basis, M);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    auto orb = [M](int so) { return so % M; };
    auto spin = [M](int so) { return so / M; };

    for (int J = 0; J < dim; ++J) {
        const std::uint64_t ket = basis[J].bits(M);
        for (int y = 0; y < nso; ++y) {
            auto a = apply_ladder(ket, y, false);
            if (!a)
                continue;
            // one-body
            for (int x = 0; x < nso; ++x) {
                if (spin(x) != spin(y))
                    continue;
                const double fxy = ham.f(orb(x), orb(y));
                if (fxy == 0.0)
                    continue;
                if (auto c = apply_ladder(a->first, x, true)) {
                    auto it = lookup.find(c->first);
                    if (it != lookup.end())
                        H(it->second, J) += fxy * a->second * c->second;
                }
            }
            // two-body: 1/2 <pq|rs> p^+ q^+ s r, r = y acts first
            for (int s = 0; s < nso; ++s) {
                auto b = apply_ladder(a->first, s, false);
                if (!b)
                    continue;
                for (int q = 0; q < nso; ++q) {
                    if (spin(q) != spin(s))
                        continue;
                    auto c = apply_ladder(b->first, q, true);
                    if (!c)
                        continue;
                    for (int p = 0; p < nso; ++p) {
                        if (spin(p) != spin(y))
                            continue;
                        const double v = ham.eri(orb(p), orb(y), orb(q), orb(s));
                        if (v == 0.0)
                            continue;
                        auto d = apply_ladder(c->first, p, true);
                        if (!d)
                            continue;
                        auto it = lookup.find(d->first);
                        if (it == lookup.end())
                            continue;
                        H(it->second, J) += 0.5 * v * a->second * b->second * c->second * d->second;
                    }
                }
            }
        }
    }
    return 0.5 * (H + H.transpose());
}

/// Full dense spectrum of H_A in one sector.
inline SectorSolution solve_sector(const ActiveHamiltonian &ham, int nelec, int sz2,
                                   int max_dim = 20000) {
    SectorSolution sol;
    sol.norb = ham.norb;
    sol.nelec = nelec;
    sol.sz2 = sz2;
    sol.basis = enumerate_sector(ham.norb, nelec, sz2);
    if (sol.dim() > max_dim)
        throw CapacityError(fmt::format("sector (N={}, 2Sz={}) has dimension {} > cap {}; "
                                        "choose a smaller active space",
                                        nelec, sz2, sol.dim(), max_dim));
    sol.lookup = detail::make_lookup(sol.basis, ham.norb);
    const Eigen::MatrixXd H = build_active_hamiltonian(ham, sol.basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    sol.energies = es.eigenvalues();
    sol.vectors = es.eigenvectors();
    return sol;
}

/// Applies a string of ladder operators (rightmost first) to a sector vector
/// and returns the result expressed in the `target` sector basis.
/// Each op is (spin orbital, create).
inline Eigen::VectorXd apply_operators(const SectorSolution &source, const Eigen::VectorXd &vec,
                                       const SectorSolution &target,
                                       const std::vector<std::pair<int, bool>> &ops) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(target.dim());
    for (int J = 0; J < source.dim(); ++J) {
        if (vec(J) == 0.0)
            continue;
        std::uint64_t bits = source.basis[J].bits(source.norb);
        int sign = 1;
        bool alive = true;
        for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
            auto r = apply_ladder(bits, it->first, it->second);
            if (!r) {
                alive = false;
                break;
            }
            bits = r->first;
            sign *= r->second;
        }
        if (!alive)
            continue;
        const int I = target.find(bits);
        if (I >= 0)
            out(I) += sign * vec(J);
    }
    return out;
}

/// <bra, mu | x^+ | ket, 0> for all mu (rows) and active spin orbitals x
/// (columns). Requires bra.nelec == ket.nelec + 1.
inline Eigen::MatrixXd creation_amplitudes(const SectorSolution &bra, const SectorSolution &ket,
                                           int ket_state = 0) {
    if (bra.nelec != ket.nelec + 1 || std::abs(bra.sz2 - ket.sz2) != 1 || bra.norb != ket.norb)
        throw UsageError("creation amplitudes need a bra sector with one more electron");
    const int nso = 2 * ket.norb;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(bra.dim(), nso);
    const Spin s = bra.sz2 > ket.sz2 ? Spin::Alpha : Spin::Beta;
    for (int x = 0; x < ket.norb; ++x) {
        const int so = active_spin_orbital(x, s, ket.norb);
        W.col(so) = apply_operators(ket, ket.vectors.col(ket_state), bra, {{so, true}});
    }
    return bra.vectors.transpose() * W;
}

/// <bra, mu | y | ket, 0> for all mu (rows) and active spin orbitals y.
/// Requires bra.nelec == ket.nelec - 1.
inline Eigen::MatrixXd annihilation_amplitudes(const SectorSolution &bra,
                                               const SectorSolution &ket, int ket_state = 0) {
    if (bra.nelec + 1 != ket.nelec || std::abs(bra.sz2 - ket.sz2) != 1 || bra.norb != ket.norb)
        throw UsageError("annihilation amplitudes need a bra sector with one fewer electron");
    const int nso = 2 * ket.norb;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(bra.dim(), nso);
    const Spin s = bra.sz2 < ket.sz2 ? Spin::Alpha : Spin::Beta;
    for (int y = 0; y < ket.norb; ++y) {
        const int so = active_spin_orbital(y, s, ket.norb);
        W.col(so) = apply_operators(ket, ket.vectors.col(ket_state), bra, {{so, false}});
    }
    return bra.vectors.transpose() * W;
}

/// <bra, mu | x^+ y | ket, 0> for all mu (rows) and spin-orbital pairs
/// (column x * 2M + y). Same-sector only; spin-flip pairs are zero.
inline Eigen::MatrixXd excitation_amplitudes(const SectorSolution &bra, const SectorSolution &ket,
                                             int ket_state = 0) {
    if (bra.nelec != ket.nelec || bra.sz2 != ket.sz2 || bra.norb != ket.norb)
        throw UsageError("excitation amplitudes need identical sectors");
    const int M = ket.norb, nso = 2 * M;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(bra.dim(), nso * nso);
    for (int x = 0; x < nso; ++x)
        for (int y = 0; y < nso; ++y) {
            if (x / M != y / M)
                continue;
            W.col(x * nso + y) =
                apply_operators(ket, ket.vectors.col(ket_state), bra, {{x, true}, {y, false}});
        }
    return bra.vectors.transpose() * W;
}

enum class DensityMode { Excitation, Creation, Annihilation };

/// Single-state transition density <bra|op|ket>. Excitation mode returns the
/// 2M x 2M matrix D(x, y) = <bra|x^+ y|ket>; the other modes return a 2M x 1
/// column.
inline Eigen::MatrixXd transition_density(const SectorSolution &bra_sector, int bra_state,
                                          const SectorSolution &ket_sector, int ket_state,
                                          DensityMode mode) {
    const int nso = 2 * ket_sector.norb;
    switch (mode) {
    case DensityMode::Excitation: {
        const Eigen::MatrixXd all = excitation_amplitudes(bra_sector, ket_sector, ket_state);
        Eigen::MatrixXd D(nso, nso);
        for (int x = 0; x < nso; ++x)
            for (int y = 0; y < nso; ++y)
                D(x, y) = all(bra_state, x * nso + y);
        return D;
    }
    case DensityMode::Creation:
        return creation_amplitudes(bra_sector, ket_sector, ket_state).row(bra_state).transpose();
    case DensityMode::Annihilation:
        return annihilation_amplitudes(bra_sector, ket_sector, ket_state)
            .row(bra_state)
            .transpose();
    }
    return {};
}

/// Spin-summed active one-particle density gamma(x, y) = sum_s <x_s^+ y_s>.
inline Eigen::MatrixXd spin_summed_density(const SectorSolution &sector, int state = 0) {
    const int M = sector.norb;
    const Eigen::MatrixXd D =
        transition_density(sector, state, sector, state, DensityMode::Excitation);
    Eigen::MatrixXd g(M, M);
    for (int x = 0; x < M; ++x)
        for (int y = 0; y < M; ++y)
            g(x, y) = D(x, y) + D(M + x, M + y);
    return 0.5 * (g + g.transpose());
}

} // namespace mrrpa
