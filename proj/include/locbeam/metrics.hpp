#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace locbeam {

struct TrialRecord {
    int trial = 0;
    std::string service;  // "-" for methods without a localization service
    std::string method;   // "location_cs" or "exhaustive"
    double snr_db = 0.0;
    double spectral_efficiency = 0.0;  // bits/s/Hz
    int tx_beams_used = 0;
    long long total_switchings = 0;
    bool fallback_used = false;
};

// R = log2(1 + P |w_rx^H H w_tx|^2 / rho^2)
inline double spectral_efficiency(const Eigen::MatrixXcd& H,
                                  const Eigen::VectorXcd& w_tx,
                                  const Eigen::VectorXcd& w_rx,
                                  double tx_power, double noise_power) {
    if (!(noise_power > 0.0))
        throw std::invalid_argument("spectral_efficiency: noise_power must be > 0");
    const std::complex<double> g = w_rx.dot(H * w_tx);
    return std::log2(1.0 + tx_power * std::norm(g) / noise_power);
}

// Right-continuous empirical step CDF: (value, P[X <= value]) per distinct
// sorted value; last probability is 1.
inline std::vector<std::pair<double, double>> empirical_cdf(
    std::vector<double> samples) {
    if (samples.empty())
        throw std::invalid_argument("empirical_cdf: empty sample set");
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
        cdf.emplace_back(samples[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

// Nearest-rank percentile of a sorted sample (p in [0, 100]).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty())
        throw std::invalid_argument("percentile_sorted: empty sample set");
    const auto n = static_cast<long long>(sorted.size());
    long long rank = static_cast<long long>(std::ceil(p / 100.0 * n));
    rank = std::clamp(rank, 1LL, n);
    return sorted[static_cast<std::size_t>(rank - 1)];
}

struct SummaryRow {
    std::string service;
    std::string method;
    double snr_db = 0.0;
    int n_trials = 0;
    double mean_spectral_efficiency = 0.0;
    double tx_beams_p50 = 0.0;
    double tx_beams_p95 = 0.0;
    double tx_beams_p100 = 0.0;
    double mean_total_switchings = 0.0;
    double fallback_rate = 0.0;
};

// Grouped means and beam-count percentiles per (service, method, snr_db),
// deterministically ordered by the group key.
inline std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::map<std::tuple<std::string, std::string, double>,
             std::vector<const TrialRecord*>>
        groups;
    for (const auto& r : records)
        groups[{r.service, r.method, r.snr_db}].push_back(&r);

    std::vector<SummaryRow> out;
    out.reserve(groups.size());
    for (const auto& [key, rows] : groups) {
        SummaryRow s;
        std::tie(s.service, s.method, s.snr_db) = key;
        s.n_trials = static_cast<int>(rows.size());
        std::vector<double> beams;
        beams.reserve(rows.size());
        for (const TrialRecord* r : rows) {
            s.mean_spectral_efficiency += r->spectral_efficiency;
            s.mean_total_switchings += static_cast<double>(r->total_switchings);
            s.fallback_rate += r->fallback_used ? 1.0 : 0.0;
            beams.push_back(static_cast<double>(r->tx_beams_used));
        }
        s.mean_spectral_efficiency /= s.n_trials;
        s.mean_total_switchings /= s.n_trials;
        s.fallback_rate /= s.n_trials;
        std::sort(beams.begin(), beams.end());
        s.tx_beams_p50 = percentile_sorted(beams, 50.0);
        s.tx_beams_p95 = percentile_sorted(beams, 95.0);
        s.tx_beams_p100 = percentile_sorted(beams, 100.0);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace locbeam
