#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "locbeam/sensing.hpp"

namespace locbeam {

struct OmpConfig {
    int max_atoms = 3;           // target sparsity, normally the path count L
    double residual_tol = 1e-6;  // relative residual stop threshold

    void validate(const AngleGrid& grid) const {
        const long long n2 = static_cast<long long>(grid.n_points) * grid.n_points;
        if (max_atoms < 1 || max_atoms > n2)
            throw std::invalid_argument("OmpConfig: max_atoms out of range");
        if (residual_tol < 0.0)
            throw std::invalid_argument("OmpConfig: residual_tol must be >= 0");
    }
};

// |Phi^H r| for every grid pair, via the factored identity: reshape r to
// Mrx x Mtx, then sqrt(P) |phi_rx^H R conj(phi_tx)| transposed to (u,v).
inline Eigen::MatrixXd correlate_all(const SensingProblem& p,
                                     const Eigen::VectorXcd& residual) {
    if (residual.size() != static_cast<Eigen::Index>(p.m_tx()) * p.m_rx())
        throw std::invalid_argument("correlate_all: residual length mismatch");
    const Eigen::Map<const Eigen::MatrixXcd> R(residual.data(), p.m_rx(),
                                               p.m_tx());
    const Eigen::MatrixXcd C =
        p.phi_rx_factor.adjoint() * R * p.phi_tx_factor.conjugate();  // (v,u)
    return std::sqrt(p.tx_power) * C.cwiseAbs().transpose();          // (u,v)
}

// Classic orthogonal matching pursuit on the factored problem. Atom choice
// by maximum |correlation| with lexicographic (u,v) tie-break; least-squares
// refit on the active set by normal equations with a small diagonal
// regularizer (adjacent grid columns are highly coherent). Stops at
// max_atoms or when the relative residual drops below residual_tol.
// Residual norms per iteration can be captured through `residual_trace`.
inline SparseSolution solve_omp(const SensingProblem& p, const OmpConfig& cfg,
                                std::vector<double>* residual_trace = nullptr) {
    cfg.validate(p.grid);
    const int n = p.grid.n_points;
    const int mtot = p.m_tx() * p.m_rx();
    if (p.y_v.size() != mtot)
        throw std::invalid_argument("solve_omp: y_v length mismatch");

    // column norms of the implied Phi factor into the per-factor norms
    const Eigen::VectorXd ntx = p.phi_tx_factor.colwise().norm();
    const Eigen::VectorXd nrx = p.phi_rx_factor.colwise().norm();
    const double norm_scale = std::sqrt(p.tx_power);
    const double max_norm = norm_scale * ntx.maxCoeff() * nrx.maxCoeff();
    if (max_norm <= 0.0)
        throw std::invalid_argument("solve_omp: all-zero sensing matrix");
    const double skip_below = 1e-12 * max_norm;

    SparseSolution sol;
    const double y_norm = p.y_v.norm();
    if (residual_trace) residual_trace->push_back(y_norm);
    if (y_norm == 0.0) return sol;
    sol.residual_norm = y_norm;

    Eigen::VectorXcd residual = p.y_v;
    Eigen::MatrixXcd atoms(mtot, 0);
    std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));

    for (int it = 0; it < cfg.max_atoms; ++it) {
        const Eigen::MatrixXd corr = correlate_all(p, residual);
        int best_u = -1, best_v = -1;
        double best = 0.0;
        for (int u = 0; u < n; ++u) {
            for (int v = 0; v < n; ++v) {
                if (used[u][v]) continue;
                if (norm_scale * ntx[u] * nrx[v] <= skip_below) continue;
                if (corr(u, v) > best) {  // strict: keeps smallest (u,v) on ties
                    best = corr(u, v);
                    best_u = u;
                    best_v = v;
                }
            }
        }
        if (best_u < 0) break;
        used[best_u][best_v] = 1;
        sol.support.emplace_back(best_u, best_v);

        atoms.conservativeResize(Eigen::NoChange, atoms.cols() + 1);
        atoms.col(atoms.cols() - 1) = implied_phi_column(p, best_u, best_v);

        Eigen::MatrixXcd gram = atoms.adjoint() * atoms;
        gram.diagonal().array() += 1e-12 * gram.trace().real();
        sol.gains = gram.ldlt().solve(atoms.adjoint() * p.y_v);
        residual = p.y_v - atoms * sol.gains;

        sol.residual_norm = residual.norm();
        if (residual_trace) residual_trace->push_back(sol.residual_norm);
        if (sol.residual_norm <= cfg.residual_tol * y_norm) break;
    }
    return sol;
}

}  // namespace locbeam
