#pragma once

// Casida-form RPA over the excitation manifold and the plasmon-formula
// correlation energy.

#include "mrrpa/errors.hpp"
#include "mrrpa/manifold.hpp"
#include "mrrpa/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <numeric>
#include <string>
#include <vector>

namespace mrrpa {

/// V(k, l) = v_{pr,qs} for pair columns k = (p, r), l = (q, s).
inline Eigen::MatrixXd pair_interaction_matrix(const ExcitationManifold &man,
                                               const ResidualInteraction &v) {
    const int m = man.n_pairs();
    Eigen::MatrixXd V(m, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
            const auto [p, r] = man.pairs[k];
            const auto [q, s] = man.pairs[l];
            V(k, l) = v.two_body(p, r, q, s);
        }
    return V;
}

/// Antisymmetrized counterpart v_{pr,qs} - v_{ps,qr} in the pair basis.
inline Eigen::MatrixXd pair_exchange_matrix(const ExcitationManifold &man,
                                            const ResidualInteraction &v) {
    const int m = man.n_pairs();
    Eigen::MatrixXd V(m, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
            const auto [p, r] = man.pairs[k];
            const auto [q, s] = man.pairs[l];
            V(k, l) = v.two_body(p, r, q, s) - v.two_body(p, s, q, r);
        }
    return V;
}

struct RPAMatrices {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    int n() const { return static_cast<int>(A.rows()); }
};

/// A = diag(omega) + D^T V D, B = D^T V D (real transition densities).
inline RPAMatrices assemble_AB(const ExcitationManifold &man, const ResidualInteraction &v) {
    if (man.size() == 0)
        throw UsageError("empty excitation manifold");
    const Eigen::MatrixXd D = man.density_matrix();
    const Eigen::MatrixXd V = pair_interaction_matrix(man, v);
    Eigen::MatrixXd K = D.transpose() * V * D;
    K = 0.5 * (K + K.transpose()).eval();
    RPAMatrices m;
    m.B = K;
    m.A = K;
    m.A.diagonal() += man.omegas();
    return m;
}

struct RPASolution {
    /// Positive excitation energies, ascending.
    Eigen::VectorXd omega_rpa;
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    /// Eigenvalues of A, ascending.
    Eigen::VectorXd omega_tda;
    bool stable = false;
    bool norm_ok = false;
    /// True when the A - B > 0 reduction was used.
    bool symmetric_path = false;
    std::string diagnostic;
};

/// All 2n eigenvalues of [[A, B], [-B, -A]].
inline Eigen::VectorXcd full_spectrum(const RPAMatrices &m) {
    const int n = m.n();
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << m.A, m.B, -m.B, -m.A;
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
    return es.eigenvalues();
}

namespace detail {

inline bool check_normalization(RPASolution &sol, double tol) {
    const int n = static_cast<int>(sol.X.cols());
    const Eigen::MatrixXd N = sol.X.transpose() * sol.X - sol.Y.transpose() * sol.Y;
    const Eigen::MatrixXd S = sol.X.transpose() * sol.Y - sol.Y.transpose() * sol.X;
    const double e1 = (N - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    const double e2 = n > 0 ? S.cwiseAbs().maxCoeff() : 0.0;
    return e1 < tol && e2 < tol;
}

inline void solve_symmetric(const RPAMatrices &m, RPASolution &sol, double imag_tol) {
    const int n = m.n();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> amb(m.A - m.B);
    const Eigen::VectorXd s = amb.eigenvalues();
    const Eigen::MatrixXd &U = amb.eigenvectors();
    const Eigen::MatrixXd S = U * s.cwiseSqrt().asDiagonal() * U.transpose();
    const Eigen::MatrixXd Sinv = U * s.cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
    Eigen::MatrixXd M = S * (m.A + m.B) * S;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const Eigen::VectorXd w2 = es.eigenvalues();
    std::vector<int> bad;
    for (int i = 0; i < n; ++i)
        if (w2(i) <= imag_tol * imag_tol)
            bad.push_back(i);
    if (!bad.empty()) {
        sol.stable = false;
        sol.diagnostic = "Omega^2 <= 0 for modes";
        for (int i : bad)
            sol.diagnostic += fmt::format(" {}({:.3e})", i, w2(i));
        return;
    }
    sol.omega_rpa = w2.cwiseSqrt();
    const Eigen::MatrixXd &T = es.eigenvectors();
    const Eigen::MatrixXd XpY = S * T * sol.omega_rpa.cwiseSqrt().cwiseInverse().asDiagonal();
    const Eigen::MatrixXd XmY = Sinv * T * sol.omega_rpa.cwiseSqrt().asDiagonal();
    sol.X = 0.5 * (XpY + XmY);
    sol.Y = 0.5 * (XpY - XmY);
    sol.stable = true;
    sol.symmetric_path = true;
}

inline void solve_general(const RPAMatrices &m, RPASolution &sol, double imag_tol) {
    const int n = m.n();
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << m.A, m.B, -m.B, -m.A;
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, true);
    const Eigen::VectorXcd ev = es.eigenvalues();
    const Eigen::MatrixXcd evec = es.eigenvectors();

    std::vector<int> complex_modes;
    for (int i = 0; i < 2 * n; ++i)
        if (std::abs(ev(i).imag()) > imag_tol)
            complex_modes.push_back(i);
    if (!complex_modes.empty()) {
        sol.stable = false;
        sol.diagnostic = "complex excitation energies:";
        for (int i : complex_modes)
            sol.diagnostic += fmt::format(" ({:.6e}{:+.3e}i)", ev(i).real(), ev(i).imag());
        return;
    }

    // Positive-norm branch: x^T x - y^T y > 0.
    struct Mode {
        double omega;
        Eigen::VectorXd z;
    };
    std::vector<Mode> modes;
    for (int i = 0; i < 2 * n; ++i) {
        // Real eigenvalue: remove the arbitrary global phase.
        Eigen::Index imax = 0;
        evec.col(i).cwiseAbs().maxCoeff(&imax);
        const std::complex<double> c = evec(imax, i);
        const Eigen::VectorXd z = (evec.col(i) * (std::conj(c) / std::abs(c))).real();
        const double nrm = z.head(n).squaredNorm() - z.tail(n).squaredNorm();
        if (nrm > 0)
            modes.push_back({ev(i).real(), z});
    }
    if (static_cast<int>(modes.size()) != n) {
        sol.stable = false;
        sol.diagnostic = fmt::format("found {} positive-norm modes, expected {}", modes.size(), n);
        return;
    }
    std::sort(modes.begin(), modes.end(),
              [](const Mode &a, const Mode &b) { return a.omega < b.omega; });

    // Metric orthonormalization inside near-degenerate clusters.
    Eigen::MatrixXd Z(2 * n, n);
    sol.omega_rpa.resize(n);
    for (int i = 0; i < n; ++i) {
        Z.col(i) = modes[i].z;
        sol.omega_rpa(i) = modes[i].omega;
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Ones(2 * n);
    eta.tail(n).setConstant(-1.0);
    for (int start = 0; start < n;) {
        int end = start + 1;
        while (end < n && std::abs(sol.omega_rpa(end) - sol.omega_rpa(start)) < 1e-8)
            ++end;
        const int k = end - start;
        Eigen::MatrixXd Zc = Z.middleCols(start, k);
        Eigen::MatrixXd G = Zc.transpose() * eta.asDiagonal() * Zc;
        G = 0.5 * (G + G.transpose()).eval();
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) {
            sol.stable = false;
            sol.diagnostic = "indefinite metric in degenerate cluster";
            return;
        }
        const Eigen::MatrixXd Linv =
            llt.matrixL().solve(Eigen::MatrixXd::Identity(k, k));
        Z.middleCols(start, k) = Zc * Linv.transpose();
        start = end;
    }
    sol.X = Z.topRows(n);
    sol.Y = Z.bottomRows(n);
    std::vector<int> nonpositive;
    for (int i = 0; i < n; ++i)
        if (sol.omega_rpa(i) <= imag_tol)
            nonpositive.push_back(i);
    if (!nonpositive.empty()) {
        sol.stable = false;
        sol.diagnostic = "non-positive excitation energies for modes";
        for (int i : nonpositive)
            sol.diagnostic += fmt::format(" {}({:.3e})", i, sol.omega_rpa(i));
        return;
    }
    sol.stable = true;
}

} // namespace detail

/// Solves [[A, B], [B, A]] z = Omega diag(1, -1) z for the positive branch.
/// Uses the (A-B)^1/2 (A+B) (A-B)^1/2 reduction when A - B is positive
/// definite and the general 2n eigenproblem otherwise.
inline RPASolution solve_rpa(const RPAMatrices &m, double imag_tol = 1e-10) {
    const int n = m.n();
    if ((m.A - m.A.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
        (m.B - m.B.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw UsageError("A and B must be symmetric");
    RPASolution sol;
    sol.omega_tda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.A, Eigen::EigenvaluesOnly)
                        .eigenvalues();
    if (n == 0) {
        sol.stable = sol.norm_ok = true;
        return sol;
    }
    Eigen::LLT<Eigen::MatrixXd> probe(m.A - m.B);
    if (probe.info() == Eigen::Success)
        detail::solve_symmetric(m, sol, imag_tol);
    else
        detail::solve_general(m, sol, imag_tol);
    if (sol.stable)
        sol.norm_ok = detail::check_normalization(sol, 1e-8);
    return sol;
}

/// 1/2 sum_I (Omega_I^RPA - Omega_I^TDA).
inline double plasmon_energy(const RPASolution &sol) {
    if (!sol.stable)
        throw InstabilityError("RPA solution is unstable: " + sol.diagnostic);
    return 0.5 * (sol.omega_rpa.sum() - sol.omega_tda.sum());
}

} // namespace mrrpa
