#pragma once

#include <atomic>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "locbeam/channel.hpp"
#include "locbeam/locbf.hpp"
#include "locbeam/metrics.hpp"

namespace locbeam {

// Full Monte Carlo scenario description. Carrier and bandwidth are metadata
// (the model is narrowband single-tap); they are echoed into the manifest.
struct ScenarioConfig {
    int n_ap = 64;
    int n_ue = 64;
    int grid_n = 72;
    int n_paths = 3;
    double pathloss_exp = 3.0;
    double beamwidth_deg = 5.0;
    double carrier_ghz = 28.0;
    double bandwidth_mhz = 100.0;
    double cell_min_m = 800.0;
    double cell_max_m = 1400.0;
    std::vector<double> snr_db_sweep = {-40, -35, -30, -25, -20, -15, -10, -5, 0};
    std::vector<LocalizationService> services = {
        {"gps", 5.0}, {"wifi", 10.0}, {"lte", 40.0}};
    std::vector<std::string> methods = {"location_cs", "exhaustive"};
    int trials = 100;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_ap < 1) throw std::invalid_argument("config: n_ap must be >= 1");
        if (n_ue < 1) throw std::invalid_argument("config: n_ue must be >= 1");
        if (grid_n < 2 || grid_n % 2 != 0)
            throw std::invalid_argument(
                "config: grid_n must be even and >= 2 (it sizes the data "
                "codebook)");
        if (n_paths < 1) throw std::invalid_argument("config: n_paths must be >= 1");
        if (!(beamwidth_deg > 0.0))
            throw std::invalid_argument("config: beamwidth_deg must be > 0");
        if (!(cell_min_m > 0.0) || !(cell_min_m < cell_max_m))
            throw std::invalid_argument(
                "config: need 0 < cell_min_m < cell_max_m");
        if (snr_db_sweep.empty())
            throw std::invalid_argument("config: snr_db_sweep must be non-empty");
        if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
        if (methods.empty())
            throw std::invalid_argument("config: methods must be non-empty");
        for (const auto& m : methods)
            if (m != "location_cs" && m != "exhaustive")
                throw std::invalid_argument("config: unknown method '" + m + "'");
        bool needs_services = false;
        for (const auto& m : methods) needs_services |= (m == "location_cs");
        if (needs_services && services.empty())
            throw std::invalid_argument(
                "config: services must be non-empty for location_cs");
        for (const auto& s : services) s.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument(where + ": invalid number '" + v + "'");
    }
}

inline long long parse_int(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument(where + ": invalid integer '" + v + "'");
    }
}

inline double default_service_sigma(const std::string& name) {
    if (name == "gps") return 5.0;
    if (name == "wifi") return 10.0;
    if (name == "lte") return 40.0;
    return -1.0;
}

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_short(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace detail

// Key = value text format, '#' comments, full default fallback for missing
// keys. Unknown keys and malformed values are rejected with the line number.
inline ScenarioConfig parse_config(std::istream& in,
                                   const std::string& source_name) {
    using detail::parse_double;
    using detail::parse_int;
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(where + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));

        if (key == "n_ap") cfg.n_ap = static_cast<int>(parse_int(val, where));
        else if (key == "n_ue") cfg.n_ue = static_cast<int>(parse_int(val, where));
        else if (key == "grid_n") cfg.grid_n = static_cast<int>(parse_int(val, where));
        else if (key == "n_paths") cfg.n_paths = static_cast<int>(parse_int(val, where));
        else if (key == "pathloss_exp") cfg.pathloss_exp = parse_double(val, where);
        else if (key == "beamwidth_deg") cfg.beamwidth_deg = parse_double(val, where);
        else if (key == "carrier_ghz") cfg.carrier_ghz = parse_double(val, where);
        else if (key == "bandwidth_mhz") cfg.bandwidth_mhz = parse_double(val, where);
        else if (key == "cell_min_m") cfg.cell_min_m = parse_double(val, where);
        else if (key == "cell_max_m") cfg.cell_max_m = parse_double(val, where);
        else if (key == "trials") cfg.trials = static_cast<int>(parse_int(val, where));
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(parse_int(val, where));
        else if (key == "snr_db_sweep") {
            cfg.snr_db_sweep.clear();
            for (const auto& item : detail::split(val, ','))
                cfg.snr_db_sweep.push_back(parse_double(item, where));
        } else if (key == "services") {
            cfg.services.clear();
            for (const auto& item : detail::split(val, ',')) {
                const auto colon = item.find(':');
                LocalizationService svc;
                if (colon == std::string::npos) {
                    svc.name = item;
                    svc.sigma_m = detail::default_service_sigma(item);
                    if (svc.sigma_m < 0.0)
                        throw std::invalid_argument(
                            where + ": unknown service '" + item +
                            "' (use name:sigma_m)");
                } else {
                    svc.name = detail::trim(item.substr(0, colon));
                    svc.sigma_m =
                        parse_double(detail::trim(item.substr(colon + 1)), where);
                }
                cfg.services.push_back(svc);
            }
        } else if (key == "methods") {
            cfg.methods = detail::split(val, ',');
        } else {
            throw std::invalid_argument(where + ": unknown field '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot read '" + path + "'");
    return parse_config(in, path);
}

// Manifest in the same key = value format; reloading it reproduces the
// resolved configuration exactly.
inline std::string config_to_text(const ScenarioConfig& cfg) {
    using detail::format_double;
    std::ostringstream out;
    out << "n_ap = " << cfg.n_ap << "\n";
    out << "n_ue = " << cfg.n_ue << "\n";
    out << "grid_n = " << cfg.grid_n << "\n";
    out << "n_paths = " << cfg.n_paths << "\n";
    out << "pathloss_exp = " << format_double(cfg.pathloss_exp) << "\n";
    out << "beamwidth_deg = " << format_double(cfg.beamwidth_deg) << "\n";
    out << "carrier_ghz = " << format_double(cfg.carrier_ghz) << "\n";
    out << "bandwidth_mhz = " << format_double(cfg.bandwidth_mhz) << "\n";
    out << "cell_min_m = " << format_double(cfg.cell_min_m) << "\n";
    out << "cell_max_m = " << format_double(cfg.cell_max_m) << "\n";
    out << "snr_db_sweep = ";
    for (std::size_t i = 0; i < cfg.snr_db_sweep.size(); ++i)
        out << (i ? "," : "") << format_double(cfg.snr_db_sweep[i]);
    out << "\n";
    out << "services = ";
    for (std::size_t i = 0; i < cfg.services.size(); ++i)
        out << (i ? "," : "") << cfg.services[i].name << ":"
            << format_double(cfg.services[i].sigma_m);
    out << "\n";
    out << "methods = ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        out << (i ? "," : "") << cfg.methods[i];
    out << "\n";
    out << "trials = " << cfg.trials << "\n";
    out << "seed = " << cfg.seed << "\n";
    return out.str();
}

struct ScenarioResult {
    std::vector<TrialRecord> records;
    std::vector<SummaryRow> summary;
};

// Seeded Monte Carlo sweep. Each trial draws one channel realization and
// evaluates every (method, service, SNR) cell on it (paired comparison).
// Per-trial substreams derive from (seed, purpose, trial, service), so the
// record stream is independent of the worker count and of the trial count.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, int threads = 0) {
    cfg.validate();
    const ArrayConfig ap_cfg{cfg.n_ap, 0.5};
    const ArrayConfig ue_cfg{cfg.n_ue, 0.5};
    const AngleGrid grid{cfg.grid_n};
    const Geometry geometry{cfg.cell_min_m, cfg.cell_max_m, cfg.pathloss_exp};

    // data codebooks: phase-quantized, one beam per grid direction
    const Codebook data_tx = quantized_codebook(cfg.n_ap, cfg.grid_n);
    const Codebook data_rx = quantized_codebook(cfg.n_ue, cfg.grid_n);
    const BeamDesignContext design_ap(grid, ap_cfg);
    const BeamDesignContext design_ue(grid, ue_cfg);

    bool run_exhaustive = false, run_location = false;
    for (const auto& m : cfg.methods) {
        run_exhaustive |= (m == "exhaustive");
        run_location |= (m == "location_cs");
    }

    const double noise_power = 1.0;  // SNR = P / rho^2 with rho^2 = 1

    std::vector<std::vector<TrialRecord>> per_trial(cfg.trials);
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        try {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= cfg.trials) return;
                std::vector<TrialRecord>& rows = per_trial[t];

                RandomStream ch_rng = RandomStream::derive(cfg.seed, {1, (std::uint64_t)t});
                const ChannelRealization ch =
                    sample_channel(geometry, cfg.n_paths, ch_rng);
                const Eigen::MatrixXcd H =
                    normalize_channel(channel_matrix(ch, ap_cfg, ue_cfg));

                if (run_exhaustive) {
                    const BeamSelection sel = exhaustive_search(H, data_tx, data_rx);
                    for (double snr : cfg.snr_db_sweep) {
                        TrialRecord r;
                        r.trial = t;
                        r.service = "-";
                        r.method = "exhaustive";
                        r.snr_db = snr;
                        r.spectral_efficiency = spectral_efficiency(
                            H, data_tx.weights.col(sel.b_tx_star),
                            data_rx.weights.col(sel.b_rx_star),
                            std::pow(10.0, snr / 10.0), noise_power);
                        r.tx_beams_used = sel.tx_beams_used;
                        r.total_switchings = sel.total_switchings;
                        rows.push_back(r);
                    }
                }
                if (run_location) {
                    for (std::size_t si = 0; si < cfg.services.size(); ++si) {
                        const LocalizationService& svc = cfg.services[si];
                        for (double snr : cfg.snr_db_sweep) {
                            // one substream per (trial, service): identical
                            // error and noise draws across the SNR sweep
                            RandomStream rng = RandomStream::derive(
                                cfg.seed, {2, (std::uint64_t)t, (std::uint64_t)si});
                            AlignmentConfig acfg;
                            acfg.grid = grid;
                            acfg.ap_cfg = ap_cfg;
                            acfg.ue_cfg = ue_cfg;
                            acfg.beamwidth_deg = cfg.beamwidth_deg;
                            acfg.tx_power = std::pow(10.0, snr / 10.0);
                            acfg.noise_stddev = std::sqrt(noise_power);
                            acfg.omp.max_atoms = cfg.n_paths;
                            acfg.omp.residual_tol = 1e-6;
                            acfg.data_tx = &data_tx;
                            acfg.data_rx = &data_rx;
                            acfg.design_ap = &design_ap;
                            acfg.design_ue = &design_ue;
                            const BeamSelection sel = align_location_based(
                                H, ch, svc, svc, acfg, rng);
                            TrialRecord r;
                            r.trial = t;
                            r.service = svc.name;
                            r.method = "location_cs";
                            r.snr_db = snr;
                            r.spectral_efficiency = spectral_efficiency(
                                H, data_tx.weights.col(sel.b_tx_star),
                                data_rx.weights.col(sel.b_rx_star),
                                acfg.tx_power, noise_power);
                            r.tx_beams_used = sel.tx_beams_used;
                            r.total_switchings = sel.total_switchings;
                            r.fallback_used = sel.fallback_used;
                            rows.push_back(r);
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    int n_threads = threads > 0
                        ? threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, cfg.trials);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    ScenarioResult result;
    for (auto& rows : per_trial)
        result.records.insert(result.records.end(), rows.begin(), rows.end());
    result.summary = aggregate(result.records);
    return result;
}

inline std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "trial,service,method,snr_db,spectral_eff_bps_hz,tx_beams,"
           "total_switchings,fallback\n";
    for (const auto& r : records) {
        out << r.trial << ',' << r.service << ',' << r.method << ','
            << detail::format_short(r.snr_db) << ','
            << detail::format_short(r.spectral_efficiency) << ','
            << r.tx_beams_used << ',' << r.total_switchings << ','
            << (r.fallback_used ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
    std::ostringstream out;
    out << "service,method,snr_db,n_trials,mean_spectral_eff_bps_hz,"
           "tx_beams_p50,tx_beams_p95,tx_beams_p100,mean_total_switchings,"
           "fallback_rate\n";
    for (const auto& s : summary) {
        out << s.service << ',' << s.method << ','
            << detail::format_short(s.snr_db) << ',' << s.n_trials << ','
            << detail::format_short(s.mean_spectral_efficiency) << ','
            << detail::format_short(s.tx_beams_p50) << ','
            << detail::format_short(s.tx_beams_p95) << ','
            << detail::format_short(s.tx_beams_p100) << ','
            << detail::format_short(s.mean_total_switchings) << ','
            << detail::format_short(s.fallback_rate) << '\n';
    }
    return out.str();
}

// trials.csv + summary.csv + manifest.txt under out_dir.
inline void write_results(const std::vector<TrialRecord>& records,
                          const std::vector<SummaryRow>& summary,
                          const ScenarioConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "trials.csv", std::ios::binary);
        if (!f) throw std::runtime_error("write_results: cannot write trials.csv");
        f << records_to_csv(records);
    }
    {
        std::ofstream f(fs::path(out_dir) / "summary.csv", std::ios::binary);
        if (!f) throw std::runtime_error("write_results: cannot write summary.csv");
        f << summary_to_csv(summary);
    }
    {
        std::ofstream f(fs::path(out_dir) / "manifest.txt", std::ios::binary);
        if (!f) throw std::runtime_error("write_results: cannot write manifest.txt");
        f << config_to_text(cfg);
    }
}

}  // namespace locbeam
