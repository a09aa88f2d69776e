#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "locbeam/arrays.hpp"
#include "locbeam/channel.hpp"
#include "locbeam/omp.hpp"
#include "locbeam/sensing.hpp"

namespace locbeam {

struct LocalizationService {
    std::string name;
    double sigma_m = 0.0;  // localization error scale, meters

    void validate() const {
        if (sigma_m < 0.0)
            throw std::invalid_argument("LocalizationService: sigma_m >= 0");
    }
};

// Localization error injection: each coordinate gets an offset whose
// magnitude is uniform on [0, 2 sigma] (mean sigma) with an independent
// random sign.
inline Point2D perturb_position(const Point2D& true_pos, double sigma_m,
                                RandomStream& rng) {
    if (sigma_m < 0.0)
        throw std::invalid_argument("perturb_position: sigma_m must be >= 0");
    const double mx = rng.uniform(0.0, 2.0 * sigma_m);
    const double sx = rng.sign();
    const double my = rng.uniform(0.0, 2.0 * sigma_m);
    const double sy = rng.sign();
    return {true_pos.x + sx * mx, true_pos.y + sy * my};
}

// Contiguous circular run of grid indices lo .. lo+count-1 (mod N).
struct IndexWindow {
    int lo = 0;
    int count = 1;
    int n_grid = 1;

    int hi() const { return (lo + count - 1) % n_grid; }
    int point(int i) const { return (lo + i) % n_grid; }
    bool contains(int idx) const {
        return ((idx - lo) % n_grid + n_grid) % n_grid < count;
    }
    bool full_circle() const { return count >= n_grid; }
    // each grid point covers one 360/N cell
    double width_deg() const { return count * (360.0 / n_grid); }
};

// Window halves per side: [q1, q2] for the AoD, [g1, g2] for the AoA.
struct AngularWindow {
    IndexWindow aod;
    IndexWindow aoa;

    int q1() const { return aod.lo; }
    int q2() const { return aod.hi(); }
    int g1() const { return aoa.lo; }
    int g2() const { return aoa.hi(); }
};

enum class WindowSide { aod, aoa };

// Worst-case relative displacement between the true and estimated
// AP-UE vector: each coordinate offset is bounded by 2 sigma, so each
// endpoint moves at most 2 sqrt(2) sigma (the box corner).
inline double window_reach(double sigma_ap, double sigma_ue) {
    return 2.0 * std::sqrt(2.0) * (sigma_ap + sigma_ue);
}

// Angular search window from estimated endpoint positions.
// Center: bearing of est_ap -> est_ue (AoD) or the reverse (AoA).
// Half-width: asin(min(1, reach / d_hat)), the tangent bound for a true
// endpoint vector inside a disk of radius `reach` around the estimate;
// with the box-corner reach the window provably contains the true LOS
// bearing. Degenerate/saturated geometry yields the full circle. Edges
// round to the nearest grid index.
inline IndexWindow angular_window(const Point2D& est_ap, const Point2D& est_ue,
                                  double sigma_ap, double sigma_ue,
                                  const AngleGrid& grid, WindowSide side) {
    grid.validate();
    const int n = grid.n_points;
    const double d_hat = distance(est_ap, est_ue);
    const double reach = window_reach(sigma_ap, sigma_ue);
    if (d_hat <= 1e-12 || reach >= d_hat) return {0, n, n};

    const double center = (side == WindowSide::aod) ? bearing(est_ap, est_ue)
                                                    : bearing(est_ue, est_ap);
    const double half = std::asin(std::min(1.0, reach / d_hat));
    const double delta = grid.spacing();
    const long lo = std::lround((center - half) / delta);
    const long hi = std::lround((center + half) / delta);
    const int count = static_cast<int>(hi - lo) + 1;
    if (count >= n) return {0, n, n};
    return {static_cast<int>(((lo % n) + n) % n), count, n};
}

// Number of equal-beamwidth measurement beams covering a window.
inline int measurement_beam_count(const IndexWindow& window,
                                  double beamwidth_deg) {
    const int m = static_cast<int>(
        std::ceil(window.width_deg() / beamwidth_deg - 1e-12));
    return std::clamp(m, 1, window.count);
}

// Shared geometry for beam synthesis on the sin axis. A ULA with spacing
// d/lambda sees directions through s = sin(theta) on a circle of
// circumference 1/spacing (the per-element phase 2 pi spacing s wraps);
// its aperture resolution on that axis is w_nat = 1/(spacing n_elements).
struct BeamDesignContext {
    ArrayConfig cfg;
    AngleGrid grid;
    double circumference;
    double w_nat;
    Eigen::VectorXd lattice;       // dense zero-target directions
    Eigen::MatrixXcd lattice_mat;  // steering at lattice points
    Eigen::VectorXd grid_sin;      // sin of each grid angle
    Eigen::MatrixXcd grid_dict;    // array_response at grid angles
    Eigen::MatrixXcd gram_lattice; // lattice_mat lattice_mat^H
    Eigen::MatrixXcd gram_grid;    // grid_dict grid_dict^H

    BeamDesignContext(const AngleGrid& g, const ArrayConfig& c)
        : cfg(c), grid(g) {
        cfg.validate();
        grid.validate();
        circumference = 1.0 / cfg.spacing_wavelengths;
        w_nat = 1.0 / (cfg.spacing_wavelengths * cfg.n_elements);
        const int z = 4 * cfg.n_elements;
        lattice.resize(z);
        lattice_mat.resize(cfg.n_elements, z);
        for (int i = 0; i < z; ++i) {
            lattice[i] = -1.0 + (i + 0.5) * 2.0 / z;
            lattice_mat.col(i) = array_response_sin(lattice[i], cfg);
        }
        grid_sin.resize(grid.n_points);
        grid_dict.resize(cfg.n_elements, grid.n_points);
        for (int u = 0; u < grid.n_points; ++u) {
            grid_sin[u] = std::sin(grid.angle(u));
            grid_dict.col(u) = array_response(grid.angle(u), cfg);
        }
        gram_lattice = lattice_mat * lattice_mat.adjoint();
        gram_grid = grid_dict * grid_dict.adjoint();
    }

    double circ_dist(double s1, double s2) const {
        double d = std::fabs(std::fmod(s1 - s2, circumference));
        return std::min(d, circumference - d);
    }
};

// Measurement-beam synthesis: the window is split into contiguous,
// near-equal sub-ranges; beam i is a flat-top least-squares fit whose
// projection is the constant sqrt(N) across its sub-range's sin image and
// ~zero on the rest of the grid. The sub-range image is floored to the
// aperture width (cells narrower than the beamwidth cannot be isolated).
// A single-point window degenerates to the matched steering vector.
//
// The least-squares normal matrix starts from the precomputed full-lattice
// and full-grid Grams and removes the few columns near the beam's own span,
// which keeps synthesis cheap; codebooks are additionally memoized per
// (context, window, beam count) since scenarios revisit the same windows.
inline Codebook design_measurement_beams(const IndexWindow& window, int m_beams,
                                         const BeamDesignContext& ctx) {
    const int w = window.count;
    if (w < 1) throw std::invalid_argument("design_measurement_beams: empty window");
    const int n = ctx.grid.n_points;
    if (window.n_grid != n)
        throw std::invalid_argument("design_measurement_beams: grid mismatch");
    const int m = std::clamp(m_beams, 1, w);
    const int n_el = ctx.cfg.n_elements;

    using CacheKey = std::tuple<int, int, double, int, int, int>;
    thread_local std::map<CacheKey, Codebook> cache;
    const CacheKey key{n, n_el, ctx.cfg.spacing_wavelengths, window.lo,
                       window.count, m};
    if (auto hit = cache.find(key); hit != cache.end()) return hit->second;
    if (cache.size() > 8192) cache.clear();

    Codebook cb;
    cb.kind = Codebook::Kind::designed_eq17;
    cb.beamwidth_deg = window.width_deg() / m;
    cb.weights.resize(n_el, m);

    if (w == 1) {
        Eigen::VectorXcd v = ctx.grid_dict.col(window.lo);
        cb.weights.col(0) = v / v.norm();
        cache.emplace(key, cb);
        return cb;
    }

    const double delta = ctx.grid.spacing();
    const double c_level = std::sqrt(static_cast<double>(n_el));
    const double grid_weight = 3.0;
    const double gw2 = grid_weight * grid_weight;

    for (int i = 0; i < m; ++i) {
        const int a = (i * w) / m;
        const int b = ((i + 1) * w) / m;
        // sin image of the sub-range's angle span, floored to the aperture
        const double th0 = (window.lo + a - 0.5) * delta;
        const double th1 = (window.lo + (b - 1) + 0.5) * delta;
        double smin = 1.0, smax = -1.0;
        for (int k = 0; k <= 32; ++k) {
            const double s = std::sin(th0 + (th1 - th0) * k / 32.0);
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        const double center = 0.5 * (smin + smax);
        const double half = std::max(0.5 * (smax - smin), 0.5 * ctx.w_nat);
        const double inner = std::max(0.3 * half, half - 0.4 * ctx.w_nat);

        // flat-top fit directions across the span
        const int fill = std::max(5, static_cast<int>(
                                         std::ceil(8.0 * inner / ctx.w_nat)) | 1);
        Eigen::MatrixXcd fill_mat(n_el, fill);
        for (int k = 0; k < fill; ++k)
            fill_mat.col(k) = array_response_sin(
                center - inner + 2.0 * inner * k / (fill - 1), ctx.cfg);

        // lattice zeros drop out near the span; grid zeros likewise, and the
        // own-cell zero-drops cancel exactly against the own-cell C targets
        std::vector<int> drop_lat;
        for (int z = 0; z < ctx.lattice.size(); ++z)
            if (ctx.circ_dist(ctx.lattice[z], center) <= half + 0.5 * ctx.w_nat)
                drop_lat.push_back(z);
        std::vector<int> drop_grid, own_cells;
        for (int u = 0; u < n; ++u) {
            const int off = ((u - window.lo) % n + n) % n;
            const bool own = off < window.count && off >= a && off < b;
            if (own)
                own_cells.push_back(u);
            else if (ctx.circ_dist(ctx.grid_sin[u], center) <=
                     half + 0.2 * ctx.w_nat)
                drop_grid.push_back(u);
        }

        Eigen::MatrixXcd gram = ctx.gram_lattice + gw2 * ctx.gram_grid;
        gram.noalias() += fill_mat * fill_mat.adjoint();
        if (!drop_lat.empty()) {
            Eigen::MatrixXcd d(n_el, drop_lat.size());
            for (std::size_t k = 0; k < drop_lat.size(); ++k)
                d.col(k) = ctx.lattice_mat.col(drop_lat[k]);
            gram.noalias() -= d * d.adjoint();
        }
        if (!drop_grid.empty()) {
            Eigen::MatrixXcd d(n_el, drop_grid.size());
            for (std::size_t k = 0; k < drop_grid.size(); ++k)
                d.col(k) = ctx.grid_dict.col(drop_grid[k]);
            gram.noalias() -= gw2 * (d * d.adjoint());
        }

        Eigen::VectorXcd rhs =
            c_level * (fill_mat * Eigen::VectorXcd::Ones(fill));
        for (int u : own_cells) rhs.noalias() += gw2 * c_level * ctx.grid_dict.col(u);

        gram.diagonal().array() += 1e-9 * gram.trace().real();
        Eigen::VectorXcd v = gram.ldlt().solve(rhs);
        cb.weights.col(i) = v / v.norm();
    }
    cache.emplace(key, cb);
    return cb;
}

// Convenience form building the synthesis context on the fly; scenario
// code holds a BeamDesignContext instead and passes it directly.
inline Codebook design_measurement_beams(const IndexWindow& window, int m_beams,
                                         const AngleGrid& grid,
                                         const ArrayConfig& cfg) {
    return design_measurement_beams(window, m_beams, BeamDesignContext(grid, cfg));
}

struct BeamSelection {
    int b_tx_star = 0;
    int b_rx_star = 0;
    int tx_beams_used = 0;
    int rx_beams_used = 0;
    long long total_switchings = 0;
    SparseSolution estimated_paths;
    bool fallback_used = false;
};

// Exhaustive baseline: try every (tx, rx) codebook pair against the true
// channel and keep the gain-maximizing one. Ties break to the smallest
// (b_tx, b_rx). Beam switching complexity is B_tx * B_rx.
inline BeamSelection exhaustive_search(const Eigen::MatrixXcd& H,
                                       const Codebook& w_tx,
                                       const Codebook& w_rx) {
    if (w_tx.n_beams() < 1 || w_rx.n_beams() < 1)
        throw std::invalid_argument("exhaustive_search: empty codebook");
    const Eigen::MatrixXcd G = w_rx.weights.adjoint() * H * w_tx.weights;
    BeamSelection sel;
    double best = -1.0;
    for (int t = 0; t < G.cols(); ++t) {
        for (int r = 0; r < G.rows(); ++r) {
            const double g = std::norm(G(r, t));
            if (g > best) {
                best = g;
                sel.b_tx_star = t;
                sel.b_rx_star = r;
            }
        }
    }
    sel.tx_beams_used = w_tx.n_beams();
    sel.rx_beams_used = w_rx.n_beams();
    sel.total_switchings =
        static_cast<long long>(w_tx.n_beams()) * w_rx.n_beams();
    return sel;
}

struct AlignmentConfig {
    AngleGrid grid;
    ArrayConfig ap_cfg;
    ArrayConfig ue_cfg;
    double beamwidth_deg = 5.0;
    double tx_power = 1.0;
    double noise_stddev = 1.0;
    OmpConfig omp;
    const Codebook* data_tx = nullptr;         // final (data) codebooks
    const Codebook* data_rx = nullptr;
    const BeamDesignContext* design_ap = nullptr;
    const BeamDesignContext* design_ue = nullptr;
};

namespace detail {

inline double wrap_pm_pi(double x) {
    double t = std::fmod(x + M_PI, 2.0 * M_PI);
    if (t < 0.0) t += 2.0 * M_PI;
    return t - M_PI;
}

// Intersection of the window's angular interval with one grid cell,
// both taken around the window center on the circle. Falls back to the
// bare cell when they do not overlap (an aliased pick outside the window).
struct Interval {
    double lo, hi;
};

inline Interval window_cell_intersect(double center, double half_width,
                                      int cell, double delta) {
    const double lo = center - half_width;
    const double hi = center + half_width;
    const double mid = 0.5 * (lo + hi);
    const double cell_center = mid + wrap_pm_pi(cell * delta - mid);
    const double a = std::max(lo, cell_center - 0.5 * delta);
    const double b = std::min(hi, cell_center + 0.5 * delta);
    if (a > b) return {cell_center - 0.5 * delta, cell_center + 0.5 * delta};
    return {a, b};
}

inline double clamp_into(double x, const Interval& iv) {
    const double mid = 0.5 * (iv.lo + iv.hi);
    return std::clamp(mid + wrap_pm_pi(x - mid), iv.lo, iv.hi);
}

// Local off-grid polish of one angle of the strongest recovered path:
// golden-section maximization of the normalized measurement correlation
// over the (window cap cell) interval. A flat objective carries no angle
// information (e.g. 1x1 sweeps); the estimate then stays at the recovered
// grid angle clamped into the interval.
template <typename Objective>
double refine_angle(Objective&& obj, const Interval& iv, double anchor) {
    if (iv.hi - iv.lo < 1e-9) return anchor;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = iv.lo, b = iv.hi;
    double c1 = b - ratio * (b - a);
    double c2 = a + ratio * (b - a);
    double f1 = obj(c1), f2 = obj(c2);
    double fmin = std::min(f1, f2), fmax = std::max(f1, f2);
    for (int it = 0; it < 24; ++it) {
        if (f1 < f2) {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + ratio * (b - a);
            f2 = obj(c2);
            fmin = std::min(fmin, f2);
            fmax = std::max(fmax, f2);
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - ratio * (b - a);
            f1 = obj(c1);
            fmin = std::min(fmin, f1);
            fmax = std::max(fmax, f1);
        }
    }
    if (fmax - fmin <= 1e-9 * std::max(fmax, 1e-300)) return anchor;
    return 0.5 * (a + b);
}

}  // namespace detail

// Location-assisted alignment pipeline: perturb both endpoint positions,
// derive the AoD/AoA windows, synthesize the windowed measurement beams,
// sweep noisy measurements, recover the path support with OMP on the
// factored problem, then point the data beams at the strongest recovered
// path. The recovered angle is folded through the ULA front-back mirror
// into the window when applicable, polished off-grid against the
// measurements, and mapped to the data beam with maximum response there.
// An empty recovery falls back to the window-center beams (flagged).
inline BeamSelection align_location_based(const Eigen::MatrixXcd& H,
                                          const ChannelRealization& ch,
                                          const LocalizationService& svc_ap,
                                          const LocalizationService& svc_ue,
                                          const AlignmentConfig& cfg,
                                          RandomStream& rng) {
    svc_ap.validate();
    svc_ue.validate();
    if (!cfg.data_tx || !cfg.data_rx || !cfg.design_ap || !cfg.design_ue)
        throw std::invalid_argument("align_location_based: config incomplete");
    const int n = cfg.grid.n_points;
    const double delta = cfg.grid.spacing();

    // (1) localization estimates
    const Point2D est_ap = perturb_position(ch.ap_position, svc_ap.sigma_m, rng);
    const Point2D est_ue = perturb_position(ch.ue_position, svc_ue.sigma_m, rng);

    // (2) angular windows
    const IndexWindow win_tx = angular_window(est_ap, est_ue, svc_ap.sigma_m,
                                              svc_ue.sigma_m, cfg.grid,
                                              WindowSide::aod);
    const IndexWindow win_rx = angular_window(est_ap, est_ue, svc_ap.sigma_m,
                                              svc_ue.sigma_m, cfg.grid,
                                              WindowSide::aoa);

    // (3) windowed measurement codebooks
    const int m_tx = measurement_beam_count(win_tx, cfg.beamwidth_deg);
    const int m_rx = measurement_beam_count(win_rx, cfg.beamwidth_deg);
    const Codebook meas_tx = design_measurement_beams(win_tx, m_tx, *cfg.design_ap);
    const Codebook meas_rx = design_measurement_beams(win_rx, m_rx, *cfg.design_ue);

    // (4) sweep + factored sparse recovery
    const Eigen::MatrixXcd Y = sweep_measurements(
        H, meas_tx, meas_rx, cfg.tx_power, cfg.noise_stddev, rng);
    SensingProblem problem;
    problem.grid = cfg.grid;
    problem.tx_power = cfg.tx_power;
    problem.phi_tx_factor =
        meas_tx.weights.transpose() * cfg.design_ap->grid_dict.conjugate();
    problem.phi_rx_factor = meas_rx.weights.adjoint() * cfg.design_ue->grid_dict;
    problem.y_v = vectorize(Y);
    SparseSolution sol = solve_omp(problem, cfg.omp);

    // (5) strongest path -> data beams; refinement anchored to the
    // continuous window interval [center - half, center + half]
    const double center_tx = bearing(est_ap, est_ue);
    const double center_rx = bearing(est_ue, est_ap);
    const double reach = window_reach(svc_ap.sigma_m, svc_ue.sigma_m);
    const double d_hat = distance(est_ap, est_ue);
    double half_w = M_PI;
    if (d_hat > 1e-12 && reach < d_hat)
        half_w = std::asin(std::min(1.0, reach / d_hat));

    BeamSelection sel;
    sel.estimated_paths = sol;
    sel.tx_beams_used = m_tx;
    sel.rx_beams_used = m_rx;
    sel.total_switchings = static_cast<long long>(m_tx) * m_rx;

    double theta_tx, theta_rx;
    if (sol.support.empty()) {
        sel.fallback_used = true;
        theta_tx = (win_tx.full_circle())
                       ? bearing(est_ap, est_ue)
                       : cfg.grid.angle(win_tx.point(win_tx.count / 2));
        theta_rx = (win_rx.full_circle())
                       ? bearing(est_ue, est_ap)
                       : cfg.grid.angle(win_rx.point(win_rx.count / 2));
    } else {
        int best = 0;
        for (int i = 1; i < static_cast<int>(sol.support.size()); ++i)
            if (std::abs(sol.gains[i]) > std::abs(sol.gains[best])) best = i;
        int u = sol.support[best].first;
        int v = sol.support[best].second;

        // fold the ULA front-back twin into the window (identical columns)
        if (n % 2 == 0) {
            const int um = ((n / 2 - u) % n + n) % n;
            const int vm = ((n / 2 - v) % n + n) % n;
            if (!win_tx.contains(u) && win_tx.contains(um)) u = um;
            if (!win_rx.contains(v) && win_rx.contains(vm)) v = vm;
        }

        const detail::Interval iv_tx =
            detail::window_cell_intersect(center_tx, half_w, u, delta);
        const detail::Interval iv_rx =
            detail::window_cell_intersect(center_rx, half_w, v, delta);
        const double anchor_tx = detail::clamp_into(u * delta, iv_tx);
        const double anchor_rx = detail::clamp_into(v * delta, iv_rx);

        const Eigen::Map<const Eigen::MatrixXcd> R(problem.y_v.data(),
                                                   m_rx, m_tx);
        const auto corr_tx = [&](const Eigen::VectorXcd& f_rx, double th) {
            const Eigen::VectorXcd f_tx =
                meas_tx.weights.transpose() *
                array_response(th, cfg.ap_cfg).conjugate();
            const double nn = f_tx.norm() * f_rx.norm();
            if (nn < 1e-14) return 0.0;
            const cxd c = (f_rx.adjoint() * R * f_tx.conjugate())(0, 0);
            return std::abs(c) / nn;
        };
        const auto corr_rx = [&](const Eigen::VectorXcd& f_tx, double th) {
            const Eigen::VectorXcd f_rx =
                meas_rx.weights.adjoint() * array_response(th, cfg.ue_cfg);
            const double nn = f_tx.norm() * f_rx.norm();
            if (nn < 1e-14) return 0.0;
            const cxd c = (f_rx.adjoint() * R * f_tx.conjugate())(0, 0);
            return std::abs(c) / nn;
        };

        Eigen::VectorXcd f_rx0 =
            meas_rx.weights.adjoint() * array_response(v * delta, cfg.ue_cfg);
        theta_tx = detail::refine_angle(
            [&](double th) { return corr_tx(f_rx0, th); }, iv_tx, anchor_tx);
        Eigen::VectorXcd f_tx1 =
            meas_tx.weights.transpose() *
            array_response(theta_tx, cfg.ap_cfg).conjugate();
        theta_rx = detail::refine_angle(
            [&](double th) { return corr_rx(f_tx1, th); }, iv_rx, anchor_rx);
        Eigen::VectorXcd f_rx2 =
            meas_rx.weights.adjoint() * array_response(theta_rx, cfg.ue_cfg);
        theta_tx = detail::refine_angle(
            [&](double th) { return corr_tx(f_rx2, th); }, iv_tx, anchor_tx);
    }

    // data beams with maximum response at the estimated angles
    const Eigen::VectorXd resp_tx =
        (cfg.data_tx->weights.adjoint() *
         array_response(wrap_angle(theta_tx), cfg.ap_cfg))
            .cwiseAbs();
    const Eigen::VectorXd resp_rx =
        (cfg.data_rx->weights.adjoint() *
         array_response(wrap_angle(theta_rx), cfg.ue_cfg))
            .cwiseAbs();
    Eigen::Index bt = 0, br = 0;
    resp_tx.maxCoeff(&bt);
    resp_rx.maxCoeff(&br);
    sel.b_tx_star = static_cast<int>(bt);
    sel.b_rx_star = static_cast<int>(br);
    return sel;
}

}  // namespace locbeam
