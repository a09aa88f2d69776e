#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "locbeam/arrays.hpp"
#include "locbeam/rng.hpp"

namespace locbeam {

// Uniform azimuth grid {2 pi k / N, k = 0..N-1} for the sparse dictionary.
struct AngleGrid {
    int n_points = 72;

    double spacing() const { return 2.0 * M_PI / n_points; }
    double angle(int k) const { return spacing() * k; }

    void validate() const {
        if (n_points < 1)
            throw std::invalid_argument("AngleGrid: n_points must be >= 1");
    }
};

// Beam-swept measurement matrix Y, one slot per (TX beam, RX beam) pair:
//   Y(r,t) = sqrt(P) w_r^H H w_t + w_r^H n_{r,t}
// with an independent noise draw per slot. A unit-norm RX beam leaves the
// filtered noise variance at noise_stddev^2, so the slot noise is drawn as
// a single scaled complex Gaussian.
inline Eigen::MatrixXcd sweep_measurements(const Eigen::MatrixXcd& H,
                                           const Codebook& w_tx,
                                           const Codebook& w_rx,
                                           double tx_power, double noise_stddev,
                                           RandomStream& rng) {
    if (w_tx.n_elements() != H.cols() || w_rx.n_elements() != H.rows())
        throw std::invalid_argument("sweep_measurements: dimension mismatch");
    if (tx_power < 0.0 || noise_stddev < 0.0)
        throw std::invalid_argument(
            "sweep_measurements: tx_power and noise_stddev must be >= 0");

    Eigen::MatrixXcd Y =
        std::sqrt(tx_power) * (w_rx.weights.adjoint() * H * w_tx.weights);
    if (noise_stddev > 0.0) {
        const Eigen::VectorXd rx_norms = w_rx.weights.colwise().norm();
        for (int t = 0; t < Y.cols(); ++t)
            for (int r = 0; r < Y.rows(); ++r)
                Y(r, t) += noise_stddev * rx_norms[r] * rng.complex_gaussian();
    }
    return Y;
}

// Column-major stacking; satisfies vec(A X B) = (B^T kron A) vec(X).
inline Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& Y) {
    return Eigen::Map<const Eigen::VectorXcd>(Y.data(), Y.size());
}

// Recovered sparse path estimate: grid index pairs and complex gains.
struct SparseSolution {
    std::vector<std::pair<int, int>> support;  // (aod index u, aoa index v)
    Eigen::VectorXcd gains;
    double residual_norm = 0.0;
};

// Factored sensing problem. The full sensing matrix
//   Phi = sqrt(P) (W_tx^T kron W_rx^H) T_D
// is never materialized: column (u*N + v) equals
//   sqrt(P) * kron(phi_tx_factor.col(u), phi_rx_factor.col(v)),
// so correlations and column extraction run on the two small factors.
struct SensingProblem {
    Eigen::VectorXcd y_v;            // vectorized measurements, length Mtx*Mrx
    Eigen::MatrixXcd phi_tx_factor;  // Mtx x N  (= W_tx^T conj(P_AP grid))
    Eigen::MatrixXcd phi_rx_factor;  // Mrx x N  (= W_rx^H P_UE grid)
    double tx_power = 1.0;
    AngleGrid grid;

    int m_tx() const { return static_cast<int>(phi_tx_factor.rows()); }
    int m_rx() const { return static_cast<int>(phi_rx_factor.rows()); }
};

// Steering dictionary on the grid, one column per grid angle.
inline Eigen::MatrixXcd grid_dictionary(const AngleGrid& grid,
                                        const ArrayConfig& cfg) {
    Eigen::MatrixXcd D(cfg.n_elements, grid.n_points);
    for (int u = 0; u < grid.n_points; ++u)
        D.col(u) = array_response(grid.angle(u), cfg);
    return D;
}

inline SensingProblem build_sensing_factors(const Codebook& w_tx,
                                            const Codebook& w_rx,
                                            const AngleGrid& grid,
                                            const ArrayConfig& ap_cfg,
                                            const ArrayConfig& ue_cfg,
                                            double tx_power) {
    grid.validate();
    if (grid.n_points < 2)
        throw std::invalid_argument("build_sensing_factors: grid too small");
    SensingProblem p;
    p.grid = grid;
    p.tx_power = tx_power;
    p.phi_tx_factor =
        w_tx.weights.transpose() * grid_dictionary(grid, ap_cfg).conjugate();
    p.phi_rx_factor =
        w_rx.weights.adjoint() * grid_dictionary(grid, ue_cfg);
    return p;
}

inline Eigen::VectorXcd implied_phi_column(const SensingProblem& p, int u,
                                           int v) {
    if (u < 0 || u >= p.grid.n_points || v < 0 || v >= p.grid.n_points)
        throw std::invalid_argument("implied_phi_column: index out of range");
    const int mtx = p.m_tx();
    const int mrx = p.m_rx();
    Eigen::VectorXcd col(mtx * mrx);
    const double sp = std::sqrt(p.tx_power);
    for (int t = 0; t < mtx; ++t)
        col.segment(t * mrx, mrx) =
            (sp * p.phi_tx_factor(t, u)) * p.phi_rx_factor.col(v);
    return col;
}

}  // namespace locbeam
