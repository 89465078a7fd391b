#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "magsim/config.hpp"
#include "magsim/dataset_io.hpp"
#include "magsim/errors.hpp"
#include "magsim/hash.hpp"
#include "magsim/quantity.hpp"
#include "magsim/runner.hpp"

using namespace magsim;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("magsim_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

#ifdef MAGSIM_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(MAGSIM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}
#endif

}  // namespace

TEST_CASE("quantities parse with micro-scale suffixes") {
    CHECK(parse_quantity("283 uT", "T") == doctest::Approx(283e-6).epsilon(1e-15));
    CHECK(parse_quantity("283\xc2\xb5T", "T") == doctest::Approx(283e-6).epsilon(1e-15));
    CHECK(parse_quantity("7um", "m") == doctest::Approx(7e-6).epsilon(1e-15));
    CHECK(parse_quantity("0.42 us", "s") == doctest::Approx(0.42e-6).epsilon(1e-15));
    CHECK(parse_quantity("38.7 kHz", "Hz") == doctest::Approx(38.7e3).epsilon(1e-15));
    CHECK(parse_quantity("0.6 MHz", "Hz") == doctest::Approx(0.6e6).epsilon(1e-15));
    CHECK(parse_quantity("77.3 nT/um", "T/m") == doctest::Approx(77.3e-3).epsilon(1e-12));
    CHECK(parse_quantity("100 nm", "m") == doctest::Approx(100e-9).epsilon(1e-15));
    CHECK(parse_quantity("1 mT", "T") == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(parse_quantity("42", "T") == 42.0);  // bare numbers are SI
    CHECK(parse_quantity("0.2 mK", "K") == doctest::Approx(0.2e-3).epsilon(1e-15));
    CHECK(std::isinf(parse_quantity("inf", "s")));

    CHECK_THROWS_AS(parse_quantity("42 parsec", "m"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("42 uT", "m"), ConfigError);  // wrong dimension
    CHECK_THROWS_AS(parse_quantity("", "m"), ConfigError);
    CHECK_THROWS_AS(parse_quantity("fast", "s"), ConfigError);
}

TEST_CASE("config round-trips losslessly and reports bad keys by path") {
    const RunConfig def;
    const std::string text = config_to_json_text(def);
    const RunConfig back = config_from_json_text(text);
    CHECK(config_to_json_text(back) == text);
    CHECK(config_hash(back) == config_hash(def));

    // Unit-suffixed values normalize to the SI defaults (to an ulp) and the
    // suffixed config itself round-trips exactly once normalized.
    const RunConfig suffixed = config_from_json_text(R"({
        "grid": {"pitch": "7 um"},
        "scene": {"quantization": {"magnitude": "283 uT"}},
        "ramsey": {"reference_detuning": "38.7 kHz", "pulse_duration": "0.42 us"},
        "plan": {"t_min": "2 us", "t_max": "110 us"}
    })");
    CHECK(suffixed.grid.pitch == doctest::Approx(7e-6).epsilon(1e-15));
    CHECK(suffixed.scene.quantization.magnitude == doctest::Approx(283e-6).epsilon(1e-15));
    CHECK(suffixed.reference_detuning_hz == doctest::Approx(38.7e3).epsilon(1e-15));
    CHECK(suffixed.pulse_duration == doctest::Approx(0.42e-6).epsilon(1e-15));
    const std::string normalized = config_to_json_text(suffixed);
    CHECK(config_to_json_text(config_from_json_text(normalized)) == normalized);

    try {
        config_from_json_text(R"({"detection": {"true_positive": 1.7}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config.detection.true_positive") != std::string::npos);
    }
    try {
        config_from_json_text(R"({"grid": {"pitchh": 7e-6}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("config.grid.pitchh") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json_text("{not json"), ConfigError);
}

TEST_CASE("derived experiment parameters implement the paper presets") {
    const RunConfig config;
    const auto params = config.experiment_params();
    // Delta_12 sits 2pi x 38.7 kHz above the 283 uT transition.
    const double delta = effective_detuning(params.ramsey.two_photon_difference, 283e-6, 0.0,
                                            params.states, params.constants);
    CHECK(delta == doctest::Approx(si::two_pi * 38.7e3).epsilon(1e-9));
    CHECK(params.ramsey.rabi_frequency == doctest::Approx(si::two_pi * 0.6e6));
    CHECK(params.p_load == 0.5);
    CHECK(params.prep.p_prepare_up == doctest::Approx(0.30));

    const auto plan = config.cycle_plan();
    CHECK(plan.t_values.size() == 55);
    CHECK(plan.t_values.front() == doctest::Approx(2e-6));
    CHECK(plan.t_values.back() == doctest::Approx(110e-6));
    CHECK(plan.repetitions == 44);
}

TEST_CASE("datasets round-trip through the tabular file exactly") {
    RunConfig config;
    config.grid.rows = 2;
    config.grid.cols = 3;
    config.repetitions = 2;
    config.seed = 99;
    Dataset ds = run_experiment(config.experiment_params(), config.cycle_plan(), 1);
    ds.config_hash = config_hash(config);

    const auto dir = temp_dir("roundtrip");
    const std::string path = (dir / "dataset.tsv").string();
    write_dataset(path, ds, true);
    const Dataset back = read_dataset(path);
    CHECK(back.mode == ds.mode);
    CHECK(back.master_seed == ds.master_seed);
    CHECK(back.config_hash == ds.config_hash);
    CHECK(back.grid.rows == 2);
    CHECK(back.grid.cols == 3);
    CHECK(back.p_load == ds.p_load);
    CHECK(back.p_prepare == ds.p_prepare);
    CHECK(back.timing.exposure_time == ds.timing.exposure_time);
    CHECK(back.timing.trap_depth_load == ds.timing.trap_depth_load);
    CHECK(back.timing.trap_depth_sequence == ds.timing.trap_depth_sequence);
    CHECK(back.records == ds.records);
    CHECK(back.t_values == ds.t_values);
    CHECK(back.truth_light_shift.size() == ds.truth_light_shift.size());
    for (size_t i = 0; i < ds.truth_light_shift.size(); ++i)
        CHECK(back.truth_light_shift[i] == ds.truth_light_shift[i]);

    // Without the diagnostic flag the hidden-truth columns stay hidden.
    write_dataset(path, ds, false);
    const Dataset plain = read_dataset(path);
    for (const auto& r : plain.records) CHECK(!r.prepared);
    CHECK(plain.truth_light_shift.empty());
    CHECK(!std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("corrupt datasets report the offending line") {
    const auto dir = temp_dir("corrupt");
    const std::string path = (dir / "bad.tsv").string();

    {
        std::ofstream out(path);
        out << "# magsim-dataset v1\n# mode array\n";
        out << "# columns cycle site_or_position T_seconds test_on occupied_before detected_after\n";
        out << "0 0 2e-06 0 1 0\n";
        out << "1 0 2e-06 0 1\n";  // truncated record on line 5
    }
    try {
        read_dataset(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "not a dataset\n";
    }
    CHECK_THROWS_AS(read_dataset(path), DataError);

    {
        std::ofstream out(path);
        out << "# magsim-dataset v1\n# mode array\n";
        out << "0 0 2e-06 0 1 maybe\n";
    }
    try {
        read_dataset(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    CHECK_THROWS_AS(read_dataset((dir / "missing.tsv").string()), DataError);
}

TEST_CASE("simulate writes byte-identical datasets regardless of jobs") {
    RunConfig config;
    config.grid.rows = 4;
    config.grid.cols = 5;
    config.repetitions = 3;
    config.seed = 31337;
    const auto dir1 = temp_dir("jobs1");
    const auto dir2 = temp_dir("jobs4");
    const auto r1 = simulate_command(config, dir1.string(), 1, false);
    const auto r2 = simulate_command(config, dir2.string(), 4, false);
    CHECK(r1.records == r2.records);
    CHECK(slurp(r1.dataset_path) == slurp(r2.dataset_path));
    CHECK(fnv1a64_file(r1.dataset_path) == fnv1a64_file(r2.dataset_path));
}

TEST_CASE("estimate command writes provenance-chained reports") {
    RunConfig config;
    config.grid.rows = 2;
    config.grid.cols = 4;
    config.seed = 4711;
    const auto dir = temp_dir("reports");
    const auto sim = simulate_command(config, dir.string(), 1, false);
    const auto est = estimate_command(sim.dataset_path, dir.string());
    // Estimation is jobs-invariant too.
    const auto est4 = estimate_command(sim.dataset_path, dir.string(), 10.0, 4);
    REQUIRE(est.map.sites.size() == est4.map.sites.size());
    for (size_t i = 0; i < est.map.sites.size(); ++i) {
        CHECK(est.map.sites[i].valid == est4.map.sites[i].valid);
        CHECK(est.map.sites[i].delta_b == est4.map.sites[i].delta_b);
    }

    const std::string input_hash = hex64(fnv1a64_file(sim.dataset_path));
    for (const std::string& path :
         {est.field_map_path, est.gradients_path, est.summary_path}) {
        const std::string content = slurp(path);
        CHECK(content.find(input_hash) != std::string::npos);
    }
    const std::string summary = slurp(est.summary_path);
    CHECK(summary.find("resolution") != std::string::npos);
    CHECK(summary.find("nT/sqrt(Hz)") != std::string::npos);
}

TEST_CASE("rearrange and scan commands produce their artifacts") {
    RunConfig config;
    config.seed = 5;
    config.max_rounds = 40;
    const auto dir = temp_dir("modes");
    const auto rear = rearrange_command(config, dir.string());
    CHECK(rear.stats.rounds == 40);
    CHECK(rear.stats.duty_cycle > 0.3);
    CHECK(slurp(rear.trace_path).find("duty_cycle") != std::string::npos);

    // Probe line across the gradient at 1 um pitch recovers the slope.
    RunConfig scan_config;
    scan_config.seed = 6;
    scan_config.scan.line_steps = 21;
    scan_config.scan.line_from = Eigen::Vector2d(50e-6, 49e-6);
    scan_config.scan.line_to = Eigen::Vector2d(70e-6, 49e-6);
    const auto scan = scan_command(scan_config, dir.string(), 1, false);
    CHECK(scan.map.sites.size() == 21);
    CHECK(slurp(scan.map_path).find("magsim-scan-map") != std::string::npos);
    const Dataset back = read_dataset(scan.dataset_path);
    CHECK(back.mode == "scan");
    CHECK(back.positions.size() == 21);
    CHECK((back.positions[1] - back.positions[0]).norm() == doctest::Approx(1e-6));

    double sw = 0, swx = 0, swxx = 0, swy = 0, swxy = 0;
    int used = 0;
    for (const auto& s : scan.map.sites) {
        if (!s.valid) continue;
        const double w = 1.0 / (s.sigma_delta_b * s.sigma_delta_b);
        sw += w;
        swx += w * s.position.x();
        swxx += w * s.position.x() * s.position.x();
        swy += w * s.delta_b;
        swxy += w * s.position.x() * s.delta_b;
        ++used;
    }
    REQUIRE(used >= 18);
    const double det = sw * swxx - swx * swx;
    const double slope = (sw * swxy - swx * swy) / det;
    const double sigma_slope = std::sqrt(sw / det);
    CHECK(std::abs(slope - 0.0773) < 3.0 * sigma_slope);
}

#ifdef MAGSIM_CLI_PATH
TEST_CASE("CLI subcommands run end to end with spec exit codes") {
    const auto dir = temp_dir("cli");
    const std::string cfg = (dir / "config.json").string();
    {
        RunConfig small;
        small.grid.rows = 2;
        small.grid.cols = 4;
        small.repetitions = 44;
        std::ofstream out(cfg);
        out << config_to_json_text(small);
    }

    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("simulate --config " + cfg + " --seed 7 --jobs 3 --out " +
                  (dir / "b").string()) == 0);
    CHECK(slurp((dir / "a/dataset.tsv").string()) == slurp((dir / "b/dataset.tsv").string()));

    CHECK(run_cli("estimate " + (dir / "a/dataset.tsv").string() + " --out " +
                  (dir / "a").string()) == 0);
    CHECK(std::filesystem::exists(dir / "a/summary.txt"));
    CHECK(std::filesystem::exists(dir / "a/field_map.tsv"));
    CHECK(std::filesystem::exists(dir / "a/gradients.tsv"));

    CHECK(run_cli("rearrange --seed 3 --out " + (dir / "r").string()) == 0);
    CHECK(std::filesystem::exists(dir / "r/rearrange_trace.txt"));

    // Config error -> 2.
    const std::string bad = (dir / "bad.json").string();
    {
        std::ofstream out(bad);
        out << R"({"load": {"p_load": 2.5}})";
    }
    CHECK(run_cli("simulate --config " + bad + " --out " + (dir / "c").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);

    // Data error -> 3.
    CHECK(run_cli("estimate " + (dir / "missing.tsv").string()) == 3);
    const std::string trunc = (dir / "trunc.tsv").string();
    {
        std::ofstream out(trunc);
        out << "# magsim-dataset v1\n# mode array\n0 0 2e-06 0 1\n";
    }
    CHECK(run_cli("estimate " + trunc) == 3);

    // Header-only dataset (repetitions = 0) is a data error -> 3.
    const std::string empty = (dir / "empty.tsv").string();
    {
        std::ofstream out(empty);
        out << "# magsim-dataset v1\n# mode array\n# master_seed 1\n";
    }
    CHECK(run_cli("estimate " + empty) == 3);

    // Estimation non-convergence -> 4: too few T values for any fringe fit.
    const std::string sparse_cfg = (dir / "sparse.json").string();
    {
        RunConfig sparse;
        sparse.grid.rows = 1;
        sparse.grid.cols = 2;
        sparse.t_steps = 4;
        std::ofstream out(sparse_cfg);
        out << config_to_json_text(sparse);
    }
    CHECK(run_cli("simulate --config " + sparse_cfg + " --out " + (dir / "s").string()) == 0);
    CHECK(run_cli("estimate " + (dir / "s/dataset.tsv").string() + " --out " +
                  (dir / "s").string()) == 4);
}
#endif
