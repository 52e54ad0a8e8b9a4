#pragma once

// Ring-CCD amplitudes T = Y X^-1 and the energies 1/2 tr(B T) (direct ring)
// and 1/2 tr(B~ T) with the exchange-antisymmetrized B~ (SOSEX).

#include "mrrpa/errors.hpp"
#include "mrrpa/manifold.hpp"
#include "mrrpa/partition.hpp"
#include "mrrpa/rpa.hpp"

#include <Eigen/Dense>

#include <fmt/format.h>

namespace mrrpa {

struct RingAmplitudes {
    Eigen::MatrixXd T;
    /// ||B + A T + T A + T B T||_F
    double riccati_residual = 0.0;
};

inline double riccati_residual(const RPAMatrices &m, const Eigen::MatrixXd &T) {
    return (m.B + m.A * T + T * m.A + T * m.B * T).norm();
}

inline RingAmplitudes ring_ccd_amplitudes(const RPASolution &sol, const RPAMatrices &m,
                                          double max_condition = 1e12) {
    if (!sol.stable)
        throw InstabilityError("ring amplitudes need a stable RPA solution: " + sol.diagnostic);
    RingAmplitudes amps;
    const int n = static_cast<int>(sol.X.rows());
    if (n == 0)
        return amps;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sol.X);
    const double rcond = lu.rcond();
    if (!(rcond * max_condition > 1.0))
        throw InstabilityError(
            fmt::format("X is near-singular (rcond {:.3e}); RPA is close to an instability", rcond));
    // T X = Y  <=>  X^T T^T = Y^T
    Eigen::PartialPivLU<Eigen::MatrixXd> lut(sol.X.transpose());
    amps.T = lut.solve(sol.Y.transpose()).transpose();
    amps.riccati_residual = riccati_residual(m, amps.T);
    return amps;
}

/// 1/2 tr(B T); equals the plasmon energy.
inline double rpa_energy_from_T(const RingAmplitudes &amps, const RPAMatrices &m) {
    if (amps.T.size() == 0)
        return 0.0;
    return 0.5 * (m.B.cwiseProduct(amps.T.transpose())).sum();
}

/// B~(N, M) = sum d_N(p,r) [v_{pr,qs} - v_{ps,qr}] d_M(q,s).
inline Eigen::MatrixXd exchange_B(const ExcitationManifold &man, const ResidualInteraction &v) {
    const Eigen::MatrixXd D = man.density_matrix();
    const Eigen::MatrixXd W = pair_exchange_matrix(man, v);
    Eigen::MatrixXd Bx = D.transpose() * W * D;
    return 0.5 * (Bx + Bx.transpose());
}

inline double sosex_energy(const RingAmplitudes &amps, const ExcitationManifold &man,
                           const ResidualInteraction &v) {
    if (amps.T.size() == 0)
        return 0.0;
    const Eigen::MatrixXd Bx = exchange_B(man, v);
    return 0.5 * (Bx.cwiseProduct(amps.T.transpose())).sum();
}

} // namespace mrrpa
