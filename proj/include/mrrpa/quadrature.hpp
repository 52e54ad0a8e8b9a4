#pragma once

// Imaginary-frequency route to the ring energies: the irreducible
// polarizability from the spectral sum over the excitation manifold, the
// resummed log-det energy, and individual ring orders.

#include "mrrpa/errors.hpp"
#include "mrrpa/manifold.hpp"
#include "mrrpa/partition.hpp"
#include "mrrpa/rpa.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <vector>

namespace mrrpa {

struct FrequencyGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    int size() const { return static_cast<int>(nodes.size()); }
};

/// Gauss-Legendre nodes and weights on (-1, 1), ascending.
inline void gauss_legendre(int n, std::vector<double> &x, std::vector<double> &w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

/// Gauss-Legendre on (0, 1) mapped to (0, inf) by omega = scale x / (1 - x).
inline FrequencyGrid make_grid(int n_nodes, double scale) {
    if (n_nodes < 4)
        throw UsageError("frequency grid needs at least 4 nodes");
    if (!(scale > 0))
        throw UsageError("frequency grid scale must be positive");
    std::vector<double> x, w;
    gauss_legendre(n_nodes, x, w);
    FrequencyGrid g;
    g.nodes.resize(n_nodes);
    g.weights.resize(n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
        const double t = 0.5 * (x[k] + 1.0);
        const double wt = 0.5 * w[k];
        g.nodes[k] = scale * t / (1.0 - t);
        g.weights[k] = wt * scale / ((1.0 - t) * (1.0 - t));
    }
    return g;
}

/// Median excitation energy, the default grid scale.
inline double median_omega(const ExcitationManifold &man) {
    if (man.size() == 0)
        return 1.0;
    std::vector<double> w(man.size());
    for (int n = 0; n < man.size(); ++n)
        w[n] = man.states[n].omega;
    std::sort(w.begin(), w.end());
    const int k = man.size();
    return k % 2 ? w[k / 2] : 0.5 * (w[k / 2 - 1] + w[k / 2]);
}

inline FrequencyGrid default_grid(const ExcitationManifold &man, int n_nodes = 64) {
    return make_grid(n_nodes, median_omega(man));
}

/// Pi(i omega) = -sum_N 2 omega_N / (omega^2 + omega_N^2) d_N d_N^T.
class PolarizabilityEval {
  public:
    explicit PolarizabilityEval(const ExcitationManifold &man)
        : D_(man.density_matrix()), omegas_(man.omegas()) {}

    int n_pairs() const { return static_cast<int>(D_.rows()); }

    Eigen::MatrixXd operator()(double omega) const {
        const Eigen::VectorXd f =
            (-2.0 * omegas_.array() / (omega * omega + omegas_.array().square())).matrix();
        Eigen::MatrixXd P = D_ * f.asDiagonal() * D_.transpose();
        return 0.5 * (P + P.transpose());
    }

  private:
    Eigen::MatrixXd D_;
    Eigen::VectorXd omegas_;
};

inline Eigen::MatrixXd polarizability(const ExcitationManifold &man, double omega) {
    return PolarizabilityEval(man)(omega);
}

/// Per-node value of 1/2 [ln det(I - V Pi) + tr(V Pi)].
struct QuadratureNode {
    double omega = 0.0;
    double integrand = 0.0;
};

struct QuadratureResult {
    double energy = 0.0;
    std::vector<QuadratureNode> nodes;
};

/// 1/pi * sum_k w_k * 1/2 [ln det(I - V Pi(i w_k)) + tr(V Pi(i w_k))].
inline QuadratureResult rpa_energy_quadrature_detail(const ExcitationManifold &man,
                                                     const ResidualInteraction &v,
                                                     const FrequencyGrid &grid) {
    QuadratureResult res;
    if (man.size() == 0)
        return res;
    const Eigen::MatrixXd V = pair_interaction_matrix(man, v);
    const PolarizabilityEval pi(man);
    const int m = pi.n_pairs();
    res.nodes.resize(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXd VP = V * pi(grid.nodes[k]);
        const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(m, m) - VP;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        const Eigen::MatrixXd &LU = lu.matrixLU();
        double logdet = 0.0;
        int sign = lu.permutationP().determinant();
        for (int i = 0; i < m; ++i) {
            const double u = LU(i, i);
            if (u < 0)
                sign = -sign;
            logdet += std::log(std::abs(u));
        }
        if (sign <= 0 || !std::isfinite(logdet))
            throw InstabilityError(fmt::format(
                "det(I - V Pi) <= 0 at omega = {:.6e}; the ring series is unstable", grid.nodes[k]));
        const double val = 0.5 * (logdet + VP.trace());
        res.nodes[k] = {grid.nodes[k], val};
        res.energy += grid.weights[k] * val;
    }
    res.energy /= std::numbers::pi;
    return res;
}

inline double rpa_energy_quadrature(const ExcitationManifold &man, const ResidualInteraction &v,
                                    const FrequencyGrid &grid) {
    return rpa_energy_quadrature_detail(man, v, grid).energy;
}

/// n-th order ring energy -1/(2n) * 1/pi * int_0^inf tr[(V Pi)^n].
inline double ring_order_n(const ExcitationManifold &man, const ResidualInteraction &v, int order,
                           const FrequencyGrid &grid) {
    if (order < 2)
        throw UsageError("ring order must be at least 2");
    if (man.size() == 0)
        return 0.0;
    const Eigen::MatrixXd V = pair_interaction_matrix(man, v);
    const PolarizabilityEval pi(man);
    double acc = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXd VP = V * pi(grid.nodes[k]);
        Eigen::MatrixXd P = VP;
        for (int i = 1; i < order; ++i)
            P = (P * VP).eval();
        acc += grid.weights[k] * P.trace();
    }
    return -acc / (2.0 * order * std::numbers::pi);
}

/// Ring energies for orders 2..max_order in one pass over the grid.
inline std::vector<double> ring_orders(const ExcitationManifold &man, const ResidualInteraction &v,
                                       int max_order, const FrequencyGrid &grid) {
    if (max_order < 2)
        throw UsageError("ring order must be at least 2");
    std::vector<double> out(max_order - 1, 0.0);
    if (man.size() == 0)
        return out;
    const Eigen::MatrixXd V = pair_interaction_matrix(man, v);
    const PolarizabilityEval pi(man);
    for (int k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXd VP = V * pi(grid.nodes[k]);
        Eigen::MatrixXd P = VP;
        for (int n = 2; n <= max_order; ++n) {
            P = (P * VP).eval();
            out[n - 2] += grid.weights[k] * P.trace();
        }
    }
    for (int n = 2; n <= max_order; ++n)
        out[n - 2] *= -1.0 / (2.0 * n * std::numbers::pi);
    return out;
}

} // namespace mrrpa
