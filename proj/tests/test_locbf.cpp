#include <catch2/catch_amalgamated.hpp>

#include "locbeam/locbf.hpp"
#include "locbeam/metrics.hpp"

using namespace locbeam;
using Catch::Matchers::WithinAbs;

namespace {

struct Rig {
    AngleGrid grid;
    ArrayConfig ap, ue;
    Codebook data_tx, data_rx;
    BeamDesignContext design_ap, design_ue;

    Rig(int n_grid, int n_ap, int n_ue)
        : grid{n_grid},
          ap{n_ap, 0.5},
          ue{n_ue, 0.5},
          data_tx(quantized_codebook(n_ap, n_grid)),
          data_rx(quantized_codebook(n_ue, n_grid)),
          design_ap(grid, ap),
          design_ue(grid, ue) {}

    AlignmentConfig config(double power, double noise, int max_atoms) const {
        AlignmentConfig c;
        c.grid = grid;
        c.ap_cfg = ap;
        c.ue_cfg = ue;
        c.beamwidth_deg = 360.0 / grid.n_points;
        c.tx_power = power;
        c.noise_stddev = noise;
        c.omp.max_atoms = max_atoms;
        c.data_tx = &data_tx;
        c.data_rx = &data_rx;
        c.design_ap = &design_ap;
        c.design_ue = &design_ue;
        return c;
    }
};

double selection_se(const Eigen::MatrixXcd& h, const Rig& rig,
                    const BeamSelection& sel, double power) {
    return spectral_efficiency(h, rig.data_tx.weights.col(sel.b_tx_star),
                               rig.data_rx.weights.col(sel.b_rx_star), power,
                               1.0);
}

}  // namespace

TEST_CASE("position perturbation bounds and zero-noise identity") {
    RandomStream rng(3);
    const Point2D p{12.0, -4.0};
    const Point2D same = perturb_position(p, 0.0, rng);
    CHECK(same.x == p.x);
    CHECK(same.y == p.y);

    const double sigma = 3.0;
    for (int i = 0; i < 2000; ++i) {
        const Point2D q = perturb_position(p, sigma, rng);
        CHECK(std::abs(q.x - p.x) <= 2.0 * sigma);
        CHECK(std::abs(q.y - p.y) <= 2.0 * sigma);
    }
}

TEST_CASE("angular window reference cases") {
    const AngleGrid grid{72};

    const IndexWindow w1 = angular_window({0, 0}, {10, 0}, 0.0, 0.0, grid,
                                          WindowSide::aod);
    CHECK(w1.lo == 0);
    CHECK(w1.hi() == 0);
    CHECK(w1.count == 1);

    const IndexWindow w2 = angular_window({0, 0}, {0, 10}, 0.0, 0.0, grid,
                                          WindowSide::aod);
    CHECK(w2.lo == 18);
    CHECK(w2.hi() == 18);

    // 2*sigma sums to 8 >= distance 5: full circle
    const IndexWindow w3 = angular_window({0, 0}, {5, 0}, 2.0, 2.0, grid,
                                          WindowSide::aod);
    CHECK(w3.full_circle());
    CHECK(w3.lo == 0);
    CHECK(w3.hi() == 71);

    // coincident estimates degenerate to the full circle
    const IndexWindow w4 = angular_window({1, 1}, {1, 1}, 0.0, 0.0, grid,
                                          WindowSide::aoa);
    CHECK(w4.full_circle());
}

TEST_CASE("true LOS bearing lies inside the window") {
    const AngleGrid grid{72};
    int misses = 0;
    for (int t = 0; t < 10000; ++t) {
        RandomStream rng = RandomStream::derive(77, {(std::uint64_t)t});
        const double sigma = (t % 3 == 0) ? 5.0 : (t % 3 == 1) ? 10.0 : 40.0;
        const double r = rng.uniform(600.0, 1000.0);
        const double a = rng.uniform(0.0, 2 * M_PI);
        const Point2D ap{0, 0};
        const Point2D ue{r * std::cos(a), r * std::sin(a)};
        const Point2D est_ap = perturb_position(ap, sigma, rng);
        const Point2D est_ue = perturb_position(ue, sigma, rng);
        const IndexWindow win = angular_window(est_ap, est_ue, sigma, sigma,
                                               grid, WindowSide::aod);
        if (win.full_circle()) continue;
        // coverage of the window's grid cells
        const double delta = grid.spacing();
        const double lo_edge = win.lo * delta - 0.5 * delta;
        const double off = wrap_angle(bearing(ap, ue) - lo_edge);
        if (off > win.count * delta) ++misses;
    }
    CHECK(misses == 0);
}

TEST_CASE("window and beam count grow with sigma") {
    const AngleGrid grid{72};
    const Point2D ap{0, 0}, ue{700.0, 150.0};
    int prev_count = 0;
    int prev_beams = 0;
    for (double sigma : {0.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 200.0}) {
        const IndexWindow w =
            angular_window(ap, ue, sigma, sigma, grid, WindowSide::aod);
        const int m = measurement_beam_count(w, 5.0);
        CHECK(w.count >= prev_count);
        CHECK(m >= prev_beams);
        prev_count = w.count;
        prev_beams = m;
    }
}

TEST_CASE("beam count follows the window width") {
    const AngleGrid grid{72};
    // sigma = 0 window: single point, one beam
    CHECK(measurement_beam_count({10, 1, 72}, 5.0) == 1);
    // 10-cell window covers 50 degrees: ten 5-degree beams
    CHECK(measurement_beam_count({4, 10, 72}, 5.0) == 10);
    // full circle: ceil(360/5) = 72
    CHECK(measurement_beam_count({0, 72, 72}, 5.0) == 72);
    // never more beams than grid points
    CHECK(measurement_beam_count({0, 3, 72}, 1.0) == 3);
}

TEST_CASE("sub-ranges tile the window exactly") {
    for (int w : {2, 5, 7, 12}) {
        for (int m = 1; m <= w; ++m) {
            int covered = 0;
            int prev_end = 0;
            for (int i = 0; i < m; ++i) {
                const int a = (i * w) / m;
                const int b = ((i + 1) * w) / m;
                CHECK(a == prev_end);  // contiguous, disjoint
                CHECK(b > a);          // non-empty
                covered += b - a;
                prev_end = b;
            }
            CHECK(covered == w);  // union is the whole window
        }
    }
}

TEST_CASE("single-point window gives the matched steering beam") {
    const AngleGrid grid{72};
    const ArrayConfig cfg{64, 0.5};
    const BeamDesignContext ctx(grid, cfg);
    const Codebook cb = design_measurement_beams({7, 1, 72}, 1, ctx);
    REQUIRE(cb.n_beams() == 1);
    CHECK_THAT(cb.weights.col(0).norm(), WithinAbs(1.0, 1e-12));
    const cxd g = beam_gain(cb.weights.col(0), grid.angle(7), cfg);
    CHECK_THAT(std::abs(g), WithinAbs(8.0, 1e-9));
}

TEST_CASE("designed beams are flat in range and quiet outside") {
    const AngleGrid grid{72};
    const ArrayConfig cfg{64, 0.5};
    const BeamDesignContext ctx(grid, cfg);
    const IndexWindow window{30, 12, 72};
    const Codebook cb = design_measurement_beams(window, 3, ctx);
    REQUIRE(cb.n_beams() == 3);
    for (int i = 0; i < 3; ++i) {
        const int a = (i * 12) / 3;
        const int b = ((i + 1) * 12) / 3;
        double in_sum = 0.0, out_sum = 0.0;
        int in_n = 0, out_n = 0;
        for (int u = 0; u < 72; ++u) {
            const int off = ((u - window.lo) % 72 + 72) % 72;
            const bool own = off < window.count && off >= a && off < b;
            const double mag =
                std::abs(beam_gain(cb.weights.col(i), grid.angle(u), cfg));
            if (own) {
                in_sum += mag;
                ++in_n;
            } else {
                out_sum += mag;
                ++out_n;
            }
        }
        CHECK(out_sum / out_n <= 0.15 * (in_sum / in_n));
    }
}

TEST_CASE("exhaustive search degenerate cases") {
    Codebook one;
    one.weights = Eigen::MatrixXcd::Ones(2, 1) / std::sqrt(2.0);
    const BeamSelection sel =
        exhaustive_search(Eigen::MatrixXcd::Ones(2, 2), one, one);
    CHECK(sel.b_tx_star == 0);
    CHECK(sel.b_rx_star == 0);
    CHECK(sel.total_switchings == 1);

    const Codebook cb = quantized_codebook(8, 8);
    const BeamSelection zero =
        exhaustive_search(Eigen::MatrixXcd::Zero(8, 8), cb, cb);
    CHECK(zero.b_tx_star == 0);  // tie-break on the all-zero channel
    CHECK(zero.b_rx_star == 0);
    CHECK(zero.total_switchings == 64);
}

TEST_CASE("exhaustive search finds an exactly aligned beam pair") {
    const ArrayConfig cfg{8, 0.5};
    const Codebook cb = quantized_codebook(8, 8);
    // beam 6 of the B=8 codebook steers to sin(theta) = 2*mod(6+4,8)/8 = 0.5
    const double theta = std::asin(0.5);
    const Eigen::MatrixXcd H =
        array_response(theta, cfg) * array_response(theta, cfg).adjoint();
    const BeamSelection sel = exhaustive_search(H, cb, cb);
    CHECK(sel.b_tx_star == 6);
    CHECK(sel.b_rx_star == 6);
}

TEST_CASE("zero-error single-path alignment matches exhaustive search") {
    const Rig rig(72, 64, 64);
    const Geometry geo{600.0, 1000.0, 3.0};
    const LocalizationService exact{"exact", 0.0};
    int equal = 0;
    const int trials = 25;
    for (int t = 0; t < trials; ++t) {
        RandomStream ch_rng = RandomStream::derive(101, {1, (std::uint64_t)t});
        const ChannelRealization ch = sample_channel(geo, 1, ch_rng);
        const Eigen::MatrixXcd h =
            normalize_channel(channel_matrix(ch, rig.ap, rig.ue));
        RandomStream rng = RandomStream::derive(101, {2, (std::uint64_t)t});
        const AlignmentConfig cfg = rig.config(1.0, 0.0, 1);
        const BeamSelection loc =
            align_location_based(h, ch, exact, exact, cfg, rng);
        const BeamSelection exh = exhaustive_search(h, rig.data_tx, rig.data_rx);
        CHECK(loc.tx_beams_used == 1);
        CHECK(loc.total_switchings == 1);
        CHECK_FALSE(loc.fallback_used);
        const double gap = selection_se(h, rig, exh, 1.0) -
                           selection_se(h, rig, loc, 1.0);
        CHECK(gap >= -1e-9);
        CHECK(gap <= 0.1);
        if (loc.b_tx_star == exh.b_tx_star && loc.b_rx_star == exh.b_rx_star)
            ++equal;
    }
    CHECK(equal >= trials - 2);  // rare sin-degenerate flips have ~equal SE
}

TEST_CASE("saturated windows probe the whole codebook") {
    const Rig rig(72, 32, 32);
    const Geometry geo{600.0, 1000.0, 3.0};
    RandomStream ch_rng = RandomStream::derive(5, {1});
    const ChannelRealization ch = sample_channel(geo, 3, ch_rng);
    const Eigen::MatrixXcd h =
        normalize_channel(channel_matrix(ch, rig.ap, rig.ue));
    RandomStream rng = RandomStream::derive(5, {2});
    const LocalizationService coarse{"coarse", 1e6};
    const BeamSelection sel = align_location_based(
        h, ch, coarse, coarse, rig.config(1.0, 1.0, 3), rng);
    CHECK(sel.tx_beams_used == 72);
    CHECK(sel.total_switchings == 72LL * 72LL);
}

TEST_CASE("alignment is deterministic under the same stream") {
    const Rig rig(36, 16, 16);
    const Geometry geo{600.0, 1000.0, 3.0};
    RandomStream ch_rng = RandomStream::derive(9, {1});
    const ChannelRealization ch = sample_channel(geo, 2, ch_rng);
    const Eigen::MatrixXcd h =
        normalize_channel(channel_matrix(ch, rig.ap, rig.ue));
    const LocalizationService svc{"wifi", 10.0};
    const AlignmentConfig cfg = rig.config(0.5, 1.0, 2);

    RandomStream r1 = RandomStream::derive(9, {2});
    RandomStream r2 = RandomStream::derive(9, {2});
    const BeamSelection a = align_location_based(h, ch, svc, svc, cfg, r1);
    const BeamSelection b = align_location_based(h, ch, svc, svc, cfg, r2);
    CHECK(a.b_tx_star == b.b_tx_star);
    CHECK(a.b_rx_star == b.b_rx_star);
    CHECK(a.tx_beams_used == b.tx_beams_used);
    CHECK(a.total_switchings == b.total_switchings);
    CHECK(a.fallback_used == b.fallback_used);
    CHECK(a.estimated_paths.support == b.estimated_paths.support);
}

TEST_CASE("exhaustive search dominates location-based selection") {
    const Rig rig(72, 32, 32);
    const Geometry geo{600.0, 1000.0, 3.0};
    const LocalizationService svc{"wifi", 10.0};
    for (int t = 0; t < 40; ++t) {
        RandomStream ch_rng = RandomStream::derive(301, {1, (std::uint64_t)t});
        const ChannelRealization ch = sample_channel(geo, 3, ch_rng);
        const Eigen::MatrixXcd h =
            normalize_channel(channel_matrix(ch, rig.ap, rig.ue));
        RandomStream rng = RandomStream::derive(301, {2, (std::uint64_t)t});
        const BeamSelection loc = align_location_based(
            h, ch, svc, svc, rig.config(1.0, 1.0, 3), rng);
        const BeamSelection exh = exhaustive_search(h, rig.data_tx, rig.data_rx);
        CHECK(selection_se(h, rig, exh, 1.0) >=
              selection_se(h, rig, loc, 1.0) - 1e-9);
    }
}

TEST_CASE("empty recovery falls back to window-center beams") {
    const Rig rig(72, 16, 16);
    ChannelRealization ch;
    ch.ap_position = {0.0, 0.0};
    ch.ue_position = {900.0, 0.0};
    ch.path_loss = 1.0;
    ch.paths = {{cxd(0.0, 0.0), 0.0, M_PI}};
    const Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(16, 16);
    const LocalizationService svc{"gps", 5.0};
    RandomStream rng = RandomStream::derive(55, {2});
    const BeamSelection sel =
        align_location_based(h, ch, svc, svc, rig.config(1.0, 0.0, 3), rng);
    CHECK(sel.fallback_used);
    CHECK(sel.estimated_paths.support.empty());
}

TEST_CASE("angular window pairs expose the grid index bounds") {
    const AngleGrid grid{72};
    const Point2D ap{0, 0}, ue{900.0, 300.0};
    AngularWindow win;
    win.aod = angular_window(ap, ue, 10.0, 10.0, grid, WindowSide::aod);
    win.aoa = angular_window(ap, ue, 10.0, 10.0, grid, WindowSide::aoa);
    CHECK(win.q1() == win.aod.lo);
    CHECK(win.q2() == win.aod.hi());
    CHECK(win.g1() == win.aoa.lo);
    CHECK(win.g2() == win.aoa.hi());
    // the AoA window sits on the reverse bearing, half a circle away
    const int n = 72;
    const int center_aod = (win.aod.lo + win.aod.count / 2) % n;
    const int center_aoa = (win.aoa.lo + win.aoa.count / 2) % n;
    CHECK(((center_aoa - center_aod) % n + n) % n == n / 2);
}

TEST_CASE("beam design overload matches the context form") {
    const AngleGrid grid{36};
    const ArrayConfig cfg{16, 0.5};
    const BeamDesignContext ctx(grid, cfg);
    const IndexWindow window{5, 4, 36};
    const Codebook a = design_measurement_beams(window, 2, ctx);
    const Codebook b = design_measurement_beams(window, 2, grid, cfg);
    CHECK((a.weights - b.weights).norm() < 1e-12);
}
