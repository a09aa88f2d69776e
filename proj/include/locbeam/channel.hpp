#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "locbeam/arrays.hpp"
#include "locbeam/rng.hpp"

namespace locbeam {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2D& a, const Point2D& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

inline double bearing(const Point2D& from, const Point2D& to) {
    return wrap_angle(std::atan2(to.y - from.y, to.x - from.x));
}

struct Path {
    cxd gain;    // mu_l, CN(0,1)
    double aod;  // psi_l in [0, 2pi)
    double aoa;  // phi_l in [0, 2pi)
};

struct ChannelRealization {
    std::vector<Path> paths;  // paths[0] is the LOS path
    double path_loss = 1.0;   // gamma = distance^n
    Point2D ap_position;
    Point2D ue_position;
};

struct Geometry {
    double cell_min_radius_m = 800.0;
    double cell_max_radius_m = 1400.0;
    double pathloss_exponent = 3.0;

    void validate() const {
        if (!(cell_min_radius_m > 0.0) ||
            !(cell_min_radius_m < cell_max_radius_m))
            throw std::invalid_argument(
                "Geometry: need 0 < cell_min_radius_m < cell_max_radius_m");
    }
};

// Geometric channel draw. AP at the origin, UE uniform in radius over the
// annulus and uniform in bearing. Path 1 is the LOS path at the geometric
// bearing; the remaining paths have independent uniform AoD/AoA. All path
// gains are i.i.d. CN(0,1) (Rayleigh magnitudes), gamma = distance^n.
inline ChannelRealization sample_channel(const Geometry& geometry, int n_paths,
                                         RandomStream& rng) {
    geometry.validate();
    if (n_paths < 1)
        throw std::invalid_argument("sample_channel: n_paths must be >= 1");

    ChannelRealization ch;
    const double radius =
        rng.uniform(geometry.cell_min_radius_m, geometry.cell_max_radius_m);
    const double ue_bearing = rng.uniform(0.0, 2.0 * M_PI);
    ch.ap_position = {0.0, 0.0};
    ch.ue_position = {radius * std::cos(ue_bearing),
                      radius * std::sin(ue_bearing)};
    ch.path_loss = std::pow(radius, geometry.pathloss_exponent);

    ch.paths.resize(n_paths);
    for (int l = 0; l < n_paths; ++l) {
        ch.paths[l].gain = rng.complex_gaussian();
        if (l == 0) {
            ch.paths[l].aod = bearing(ch.ap_position, ch.ue_position);
            ch.paths[l].aoa = bearing(ch.ue_position, ch.ap_position);
        } else {
            ch.paths[l].aod = rng.uniform(0.0, 2.0 * M_PI);
            ch.paths[l].aoa = rng.uniform(0.0, 2.0 * M_PI);
        }
    }
    return ch;
}

// H = (1/gamma) sum_l mu_l p_UE(phi_l) p_AP(psi_l)^H, size N_UE x N_AP.
inline Eigen::MatrixXcd channel_matrix(const ChannelRealization& ch,
                                       const ArrayConfig& ap_cfg,
                                       const ArrayConfig& ue_cfg) {
    Eigen::MatrixXcd H =
        Eigen::MatrixXcd::Zero(ue_cfg.n_elements, ap_cfg.n_elements);
    for (const Path& p : ch.paths) {
        const SteeringVector a_ue = array_response(p.aoa, ue_cfg);
        const SteeringVector a_ap = array_response(p.aod, ap_cfg);
        H.noalias() += p.gain * (a_ue * a_ap.adjoint());
    }
    return H / ch.path_loss;
}

// Rescale H so that ||H||_F^2 = N_AP * N_UE. Fixes the SNR axis: with
// unit noise power the post-beamforming SNR is P |w_rx^H H w_tx|^2.
inline Eigen::MatrixXcd normalize_channel(const Eigen::MatrixXcd& H) {
    const double fro = H.norm();
    if (fro == 0.0)
        throw std::invalid_argument("normalize_channel: all-zero channel");
    const double target =
        std::sqrt(static_cast<double>(H.rows()) * static_cast<double>(H.cols()));
    return H * (target / fro);
}

}  // namespace locbeam
