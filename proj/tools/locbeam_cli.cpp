// locbeam command-line runner.
//
//   locbeam run --config scenario.cfg --out results/ [--seed N] [--trials N]
//               [--services gps,wifi,lte] [--threads N]
//   locbeam cdf --in results/trials.csv --metric tx_beams [--out cdf.csv]
//
// `run` executes the seeded Monte Carlo sweep and writes trials.csv,
// summary.csv and manifest.txt. `cdf` post-processes a per-trial CSV into
// empirical CDF points per (service, method) group.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "locbeam/locbeam.hpp"

namespace {

struct CdfOptions {
    std::string in_path;
    std::string metric = "tx_beams";
    std::string out_path;  // empty = stdout
};

int run_cdf(const CdfOptions& opt) {
    std::ifstream in(opt.in_path);
    if (!in) {
        std::cerr << "error: cannot read '" << opt.in_path << "'\n";
        return 1;
    }
    std::string header;
    std::getline(in, header);
    const auto cols = locbeam::detail::split(header, ',');
    int metric_col = -1;
    const std::string wanted =
        (opt.metric == "tx_beams") ? "tx_beams" : "spectral_eff_bps_hz";
    if (opt.metric != "tx_beams" && opt.metric != "spectral_eff") {
        std::cerr << "error: unknown metric '" << opt.metric
                  << "' (expected tx_beams or spectral_eff)\n";
        return 1;
    }
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == wanted) metric_col = static_cast<int>(i);
    if (metric_col < 0) {
        std::cerr << "error: column '" << wanted << "' not found in "
                  << opt.in_path << "\n";
        return 1;
    }

    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (locbeam::detail::trim(line).empty()) continue;
        const auto f = locbeam::detail::split(line, ',');
        if (f.size() != cols.size()) {
            std::cerr << "error: " << opt.in_path << ":" << lineno
                      << ": malformed row\n";
            return 1;
        }
        groups[{f[1], f[2]}].push_back(
            locbeam::detail::parse_double(f[metric_col], opt.in_path));
    }
    if (groups.empty()) {
        std::cerr << "error: no data rows in " << opt.in_path << "\n";
        return 1;
    }

    std::ostringstream out;
    out << "service,method,value,probability\n";
    for (auto& [key, samples] : groups) {
        for (const auto& [value, prob] : locbeam::empirical_cdf(samples))
            out << key.first << ',' << key.second << ','
                << locbeam::detail::format_short(value) << ','
                << locbeam::detail::format_short(prob) << '\n';
    }
    if (opt.out_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(opt.out_path, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write '" << opt.out_path << "'\n";
            return 1;
        }
        f << out.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave location-assisted beam alignment simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute a Monte Carlo scenario");
    std::string config_path, out_dir;
    std::string services_override;
    int trials_override = -1;
    int threads = 0;
    std::int64_t seed_override = -1;
    run->add_option("--config", config_path, "scenario config file (key = value)");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed_override, "override RNG seed");
    run->add_option("--trials", trials_override, "override trial count");
    run->add_option("--services", services_override,
                    "override services (name[:sigma_m],...)");
    run->add_option("--threads", threads, "worker threads (default: hardware)");

    // cdf
    auto* cdf = app.add_subcommand("cdf", "empirical CDF from a trials.csv");
    CdfOptions cdf_opt;
    cdf->add_option("--in", cdf_opt.in_path, "per-trial CSV")->required();
    cdf->add_option("--metric", cdf_opt.metric, "tx_beams or spectral_eff");
    cdf->add_option("--out", cdf_opt.out_path, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            locbeam::ScenarioConfig cfg;
            if (!config_path.empty()) cfg = locbeam::load_config(config_path);
            if (seed_override >= 0)
                cfg.seed = static_cast<std::uint64_t>(seed_override);
            if (trials_override > 0) cfg.trials = trials_override;
            if (!services_override.empty()) {
                std::istringstream ss("services = " + services_override);
                // reuse the config parser for the service list syntax
                locbeam::ScenarioConfig tmp = locbeam::parse_config(ss, "--services");
                cfg.services = tmp.services;
            }
            cfg.validate();
            const locbeam::ScenarioResult result = locbeam::run_scenario(cfg, threads);
            locbeam::write_results(result.records, result.summary, cfg, out_dir);
            std::cout << "wrote " << result.records.size() << " records to "
                      << out_dir << "\n";
            return 0;
        }
        if (cdf->parsed()) return run_cdf(cdf_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
