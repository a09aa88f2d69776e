#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "locbeam/scenario.hpp"

using namespace locbeam;
using Catch::Matchers::WithinAbs;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.n_ap = 16;
    cfg.n_ue = 16;
    cfg.grid_n = 36;
    cfg.n_paths = 2;
    cfg.snr_db_sweep = {-10.0, 0.0};
    cfg.services = {{"gps", 5.0}, {"lte", 40.0}};
    cfg.trials = 4;
    cfg.seed = 12345;
    return cfg;
}

}  // namespace

TEST_CASE("empty config file yields the defaults") {
    std::istringstream empty("");
    const ScenarioConfig cfg = parse_config(empty, "empty.cfg");
    CHECK(cfg.n_ap == 64);
    CHECK(cfg.n_ue == 64);
    CHECK(cfg.grid_n == 72);
    CHECK(cfg.n_paths == 3);
    CHECK(cfg.pathloss_exp == 3.0);
    CHECK(cfg.beamwidth_deg == 5.0);
    CHECK(cfg.carrier_ghz == 28.0);
    CHECK(cfg.bandwidth_mhz == 100.0);
    CHECK(cfg.snr_db_sweep.size() == 9);
    REQUIRE(cfg.services.size() == 3);
    CHECK(cfg.services[0].name == "gps");
    CHECK(cfg.services[0].sigma_m == 5.0);
    CHECK(cfg.services[1].sigma_m == 10.0);
    CHECK(cfg.services[2].sigma_m == 40.0);
}

TEST_CASE("unknown fields are rejected by name and line") {
    std::istringstream in("trials = 5\nwibble = 3\n");
    try {
        parse_config(in, "bad.cfg");
        FAIL("expected parse error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("wibble") != std::string::npos);
        CHECK(msg.find("bad.cfg:2") != std::string::npos);
    }
}

TEST_CASE("malformed values are rejected with location") {
    std::istringstream in("trials = soon\n");
    CHECK_THROWS_AS(parse_config(in, "bad.cfg"), std::invalid_argument);

    std::istringstream in2("services = teleport\n");
    CHECK_THROWS_AS(parse_config(in2, "bad.cfg"), std::invalid_argument);

    std::istringstream in3("trials = 0\n");
    CHECK_THROWS_AS(parse_config(in3, "bad.cfg"), std::invalid_argument);
}

TEST_CASE("config text round-trips through the parser") {
    ScenarioConfig cfg = small_config();
    cfg.services = {{"gps", 5.0}, {"custom", 17.25}};
    const std::string text = config_to_text(cfg);
    std::istringstream in(text);
    const ScenarioConfig back = parse_config(in, "manifest.txt");
    CHECK(back.n_ap == cfg.n_ap);
    CHECK(back.n_ue == cfg.n_ue);
    CHECK(back.grid_n == cfg.grid_n);
    CHECK(back.n_paths == cfg.n_paths);
    CHECK(back.pathloss_exp == cfg.pathloss_exp);
    CHECK(back.beamwidth_deg == cfg.beamwidth_deg);
    CHECK(back.cell_min_m == cfg.cell_min_m);
    CHECK(back.cell_max_m == cfg.cell_max_m);
    CHECK(back.snr_db_sweep == cfg.snr_db_sweep);
    CHECK(back.methods == cfg.methods);
    CHECK(back.trials == cfg.trials);
    CHECK(back.seed == cfg.seed);
    REQUIRE(back.services.size() == cfg.services.size());
    for (std::size_t i = 0; i < back.services.size(); ++i) {
        CHECK(back.services[i].name == cfg.services[i].name);
        CHECK(back.services[i].sigma_m == cfg.services[i].sigma_m);
    }
}

TEST_CASE("exhaustive-only scenario emits one record per SNR point") {
    ScenarioConfig cfg = small_config();
    cfg.methods = {"exhaustive"};
    cfg.trials = 1;
    const ScenarioResult res = run_scenario(cfg, 1);
    CHECK(res.records.size() == cfg.snr_db_sweep.size());
    for (const auto& r : res.records) {
        CHECK(r.method == "exhaustive");
        CHECK(r.service == "-");
        CHECK(r.tx_beams_used == cfg.grid_n);
        CHECK(r.total_switchings ==
              static_cast<long long>(cfg.grid_n) * cfg.grid_n);
    }
}

TEST_CASE("identical seeds give byte-identical CSV output") {
    const ScenarioConfig cfg = small_config();
    const ScenarioResult a = run_scenario(cfg, 2);
    const ScenarioResult b = run_scenario(cfg, 2);
    CHECK(records_to_csv(a.records) == records_to_csv(b.records));
    CHECK(summary_to_csv(a.summary) == summary_to_csv(b.summary));
}

TEST_CASE("records are independent of the worker count") {
    const ScenarioConfig cfg = small_config();
    const ScenarioResult a = run_scenario(cfg, 1);
    const ScenarioResult b = run_scenario(cfg, 4);
    CHECK(records_to_csv(a.records) == records_to_csv(b.records));
}

TEST_CASE("extending the trial count preserves earlier trials") {
    ScenarioConfig cfg = small_config();
    cfg.trials = 3;
    const ScenarioResult small = run_scenario(cfg, 2);
    cfg.trials = 5;
    const ScenarioResult big = run_scenario(cfg, 2);
    const std::string csv_small = records_to_csv(small.records);
    const std::string csv_big = records_to_csv(big.records);
    CHECK(csv_big.substr(0, csv_small.size()) == csv_small);
}

TEST_CASE("mean TX beam count orders by service accuracy") {
    ScenarioConfig cfg;
    cfg.snr_db_sweep = {0.0};
    cfg.methods = {"location_cs"};
    cfg.trials = 500;
    cfg.seed = 2024;
    const ScenarioResult res = run_scenario(cfg);
    double mean_gps = 0, mean_wifi = 0, mean_lte = 0;
    for (const auto& s : res.summary) {
        if (s.service == "gps") mean_gps = s.mean_total_switchings;
        if (s.service == "wifi") mean_wifi = s.mean_total_switchings;
        if (s.service == "lte") mean_lte = s.mean_total_switchings;
    }
    double beams_gps = 0, beams_wifi = 0, beams_lte = 0;
    int n = 0;
    for (const auto& r : res.records) {
        if (r.service == "gps") beams_gps += r.tx_beams_used;
        if (r.service == "wifi") beams_wifi += r.tx_beams_used;
        if (r.service == "lte") beams_lte += r.tx_beams_used;
    }
    n = cfg.trials;
    beams_gps /= n;
    beams_wifi /= n;
    beams_lte /= n;
    CHECK(beams_gps < beams_wifi);
    CHECK(beams_wifi < beams_lte);
    CHECK(mean_gps < mean_wifi);
    CHECK(mean_wifi < mean_lte);
}

TEST_CASE("results land on disk with the manifest") {
    namespace fs = std::filesystem;
    const ScenarioConfig cfg = small_config();
    const ScenarioResult res = run_scenario(cfg, 2);
    const fs::path dir = fs::temp_directory_path() / "locbeam_test_out";
    fs::remove_all(dir);
    write_results(res.records, res.summary, cfg, dir.string());
    CHECK(fs::exists(dir / "trials.csv"));
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "manifest.txt"));
    const ScenarioConfig back = load_config((dir / "manifest.txt").string());
    CHECK(back.seed == cfg.seed);
    CHECK(back.trials == cfg.trials);
    fs::remove_all(dir);
}

TEST_CASE("services share the channel realization within a trial") {
    ScenarioConfig cfg = small_config();
    cfg.methods = {"location_cs"};
    cfg.snr_db_sweep = {0.0};
    cfg.services = {{"a", 0.0}, {"b", 0.0}};
    cfg.trials = 10;
    const ScenarioResult res = run_scenario(cfg, 2);
    // with zero localization error the pipelines coincide except for the
    // measurement noise substream, which cannot move the selection at 0 dB
    std::map<int, std::map<std::string, double>> se;
    for (const auto& r : res.records) se[r.trial][r.service] = r.spectral_efficiency;
    for (const auto& [trial, per_service] : se) {
        REQUIRE(per_service.size() == 2);
        CHECK_THAT(per_service.at("a"),
                   WithinAbs(per_service.at("b"), 1e-9));
    }
}

TEST_CASE("odd grid sizes are rejected") {
    std::istringstream in("grid_n = 71\n");
    CHECK_THROWS_AS(parse_config(in, "bad.cfg"), std::invalid_argument);
}
