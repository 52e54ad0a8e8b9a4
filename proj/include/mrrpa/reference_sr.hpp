#pragma once

// Textbook closed-shell direct RPA, written without any of the manifold /
// partition machinery so it can check the single-reference limit of the
// general engine.

#include "mrrpa/errors.hpp"
#include "mrrpa/integrals.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <vector>

namespace mrrpa::sr {

struct SRReference {
    int nocc = 0;
    int nvirt = 0;
    Eigen::VectorXd eps_occ;
    Eigen::VectorXd eps_virt;
    /// (ia|jb) in canonical orbitals, row i*nvirt+a, column j*nvirt+b.
    Eigen::MatrixXd ovov;
};

/// Canonicalizes the occupied and virtual blocks of the closed-shell Fock
/// operator. `occupied` lists the doubly occupied orbitals; empty selects
/// the first nelec/2.
inline SRReference canonical_reference(const IntegralSet &set, std::vector<int> occupied = {}) {
    if (set.nelec() % 2 != 0)
        throw UsageError("closed-shell reference needs an even electron count");
    const int n = set.norb();
    if (occupied.empty())
        for (int i = 0; i < set.nelec() / 2; ++i)
            occupied.push_back(i);
    if (static_cast<int>(occupied.size()) * 2 != set.nelec())
        throw UsageError("occupied list does not match the electron count");
    std::vector<int> order = occupied;
    for (int p = 0; p < n; ++p)
        if (std::find(occupied.begin(), occupied.end(), p) == occupied.end())
            order.push_back(p);
    const int no = static_cast<int>(occupied.size()), nv = n - no;

    // Fock matrix in the reordered basis: occupied first.
    Eigen::MatrixXd F(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double f = set.h(order[p], order[q]);
            for (int i : occupied)
                f += 2.0 * set.eri(order[p], order[q], i, i) - set.eri(order[p], i, i, order[q]);
            F(p, q) = f;
        }

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    SRReference ref;
    ref.nocc = no;
    ref.nvirt = nv;
    if (no > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F.topLeftCorner(no, no));
        ref.eps_occ = es.eigenvalues();
        C.topLeftCorner(no, no) = es.eigenvectors();
    }
    if (nv > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F.bottomRightCorner(nv, nv));
        ref.eps_virt = es.eigenvalues();
        C.bottomRightCorner(nv, nv) = es.eigenvectors();
    }
    auto g = [&](int p, int q, int r, int s) {
        return set.eri(order[p], order[q], order[r], order[s]);
    };

    // (ia|jb) = sum_{pqrs} C_pi C_qa C_rj C_sb (pq|rs), occupied p,r and virtual q,s.
    ref.ovov = Eigen::MatrixXd::Zero(no * nv, no * nv);
    std::vector<double> half(static_cast<std::size_t>(no) * nv * n * n, 0.0);
    auto hidx = [&](int i, int a, int r, int s) {
        return ((static_cast<std::size_t>(i) * nv + a) * n + r) * n + s;
    };
    for (int i = 0; i < no; ++i)
        for (int a = 0; a < nv; ++a)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    double acc = 0.0;
                    for (int p = 0; p < no; ++p)
                        for (int q = no; q < n; ++q)
                            acc += C(p, i) * C(q, no + a) * g(p, q, r, s);
                    half[hidx(i, a, r, s)] = acc;
                }
    for (int i = 0; i < no; ++i)
        for (int a = 0; a < nv; ++a)
            for (int j = 0; j < no; ++j)
                for (int b = 0; b < nv; ++b) {
                    double acc = 0.0;
                    for (int r = 0; r < no; ++r)
                        for (int s = no; s < n; ++s)
                            acc += C(r, j) * C(s, no + b) * half[hidx(i, a, r, s)];
                    ref.ovov(i * nv + a, j * nv + b) = acc;
                }
    return ref;
}

/// Spin-orbital direct-RPA A and B; rows ordered (spin, i, a).
inline void direct_rpa_matrices(const SRReference &ref, Eigen::MatrixXd &A, Eigen::MatrixXd &B) {
    const int nov = ref.nocc * ref.nvirt;
    A.resize(2 * nov, 2 * nov);
    B.resize(2 * nov, 2 * nov);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            B.block(s1 * nov, s2 * nov, nov, nov) = ref.ovov;
            A.block(s1 * nov, s2 * nov, nov, nov) = ref.ovov;
        }
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < ref.nocc; ++i)
            for (int a = 0; a < ref.nvirt; ++a) {
                const int k = s * nov + i * ref.nvirt + a;
                A(k, k) += ref.eps_virt(a) - ref.eps_occ(i);
            }
}

/// 1/2 (sum Omega - tr A) with Omega^2 the eigenvalues of (A - B)(A + B).
inline double sr_rpa_energy(const IntegralSet &set, const std::vector<int> &occupied = {}) {
    const SRReference ref = canonical_reference(set, occupied);
    if (ref.nocc == 0 || ref.nvirt == 0)
        return 0.0;
    Eigen::MatrixXd A, B;
    direct_rpa_matrices(ref, A, B);
    const Eigen::MatrixXd P = (A - B) * (A + B);
    Eigen::EigenSolver<Eigen::MatrixXd> es(P, false);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const std::complex<double> w2 = es.eigenvalues()(k);
        if (w2.real() <= 0 || std::abs(w2.imag()) > 1e-10)
            throw InstabilityError(fmt::format("single-reference RPA unstable: Omega^2 = {}",
                                               w2.real()));
        sum += std::sqrt(w2.real());
    }
    return 0.5 * (sum - A.trace());
}

/// Second-order direct ring (direct MP2):
/// -2 sum_{ijab} (ia|jb)^2 / (e_a - e_i + e_b - e_j), spin-summed.
inline double sr_direct_mp2(const IntegralSet &set, const std::vector<int> &occupied = {}) {
    const SRReference ref = canonical_reference(set, occupied);
    double e = 0.0;
    for (int i = 0; i < ref.nocc; ++i)
        for (int a = 0; a < ref.nvirt; ++a)
            for (int j = 0; j < ref.nocc; ++j)
                for (int b = 0; b < ref.nvirt; ++b) {
                    const double g = ref.ovov(i * ref.nvirt + a, j * ref.nvirt + b);
                    e -= 2.0 * g * g /
                         (ref.eps_virt(a) - ref.eps_occ(i) + ref.eps_virt(b) - ref.eps_occ(j));
                }
    return e;
}

} // namespace mrrpa::sr
