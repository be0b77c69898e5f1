#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kkrx/experiment.hpp"

using namespace kkrx;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny() {
    ExperimentConfig cfg = default_experiment();
    cfg.link.tx.sequence_length = 1 << 13;
    cfg.link.buffers = 2;
    cfg.link.training_symbols = 2000;
    return cfg;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kkrx_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("default experiment") {
    const auto cfg = default_experiment();
    CHECK(cfg.link.tx.sequence_length == 1u << 16);
    CHECK(cfg.link.buffers == 4);
    CHECK(cfg.link.tx.baud == 1e9);
    CHECK(cfg.link.tx.dac_rate == 12e9);
    CHECK(cfg.link.channel.adc_rate == 4e9);
    CHECK(cfg.link.channel.adc_bits == 12);
    ExperimentConfig full = cfg;
    apply_full_scale(full);
    CHECK(full.link.tx.sequence_length == 1u << 20);
    CHECK(full.link.buffers == 98);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config parsing") {
    const auto j = nlohmann::json::parse(R"({
        "formats": ["QAM16", "QAM64"],
        "osnr_db": {"start": 10, "stop": 14, "step": 2},
        "cspr_db": [6, 10],
        "dc_factors": [0.9, 1.0, 1.1],
        "osnr_extra": 1,
        "buffers": 3,
        "seed": 42,
        "link": {"channel": {"adc_bits": 10, "adc_bandwidth": "inf"}},
        "shaping": {"start": "QAM8", "snr_db": {"start": 5, "stop": 14, "step": 1}, "max_iterations": 50}
    })");
    const auto cfg = experiment_from_json(j);
    CHECK(cfg.formats == std::vector<std::string>{"QAM16", "QAM64"});
    CHECK(cfg.osnr_db == std::vector<double>{10, 12, 14});
    CHECK(cfg.cspr_db == std::vector<double>{6, 10});
    CHECK(cfg.dc_factors.size() == 3);
    CHECK(cfg.link.buffers == 3);
    CHECK(cfg.link.tx.seed == 42);
    CHECK(cfg.shaping.optimizer.seed == 42);
    CHECK(cfg.link.channel.adc_bits == 10);
    CHECK(std::isinf(cfg.link.channel.adc_bandwidth));
    CHECK(cfg.shaping.snr_db.size() == 10);
    CHECK(cfg.shaping.optimizer.max_iterations == 50);

    const auto inf = experiment_from_json(nlohmann::json::parse(R"({"osnr_db": ["inf", 20]})"));
    CHECK(std::isinf(inf.osnr_db[0]));

    // Round trip through JSON.
    const auto again = experiment_from_json(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));

    CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"formats": []})")), Error);
    CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"buffers": "many"})")), Error);
    CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"cspr_db": ["high"]})")), Error);
    CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"dc_factors": [-1]})")), Error);
    CHECK_THROWS_AS(experiment_from_json(nlohmann::json::parse(R"({"osnr_db": {"start": 1, "stop": 5, "step": 0}})")),
                    Error);
    CHECK_THROWS_AS(resolve_format("QAM12"), Error);
}

TEST_CASE("single-cell sweep and determinism") {
    ExperimentConfig cfg = tiny();
    cfg.formats = {"QAM16"};
    cfg.cspr_db = {10};
    cfg.osnr_db = {14};
    const auto a = run_sweep(cfg);
    REQUIRE(a.cells.size() == 1);
    CHECK(a.cells[0].error.empty());
    const std::string csv = sweep_csv(a);
    const auto rows = parse_sweep_csv(csv);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].format == "QAM16");
    CHECK(rows[0].osnr_db == 14);
    CHECK(rows[0].ber > 0);
    CHECK(rows[0].buffers == 2);
    CHECK(sweep_csv(run_sweep(cfg)) == csv);
    cfg.workers = 2;
    cfg.cspr_db = {10, 12};
    const auto b = run_sweep(cfg);
    REQUIRE(b.cells.size() == 2);
    CHECK(format_sweep_row(b.cells[0].row()) == format_sweep_row(a.cells[0].row()));
}

TEST_CASE("dc-offset grid keeps the best cell") {
    ExperimentConfig cfg = tiny();
    cfg.dc_factors = {1.0};
    const auto one = run_cell(cfg, "QAM16", 8, 16);
    cfg.dc_factors = {0.8, 1.0, 1.2};
    const auto best = run_cell(cfg, "QAM16", 8, 16);
    REQUIRE(one.error.empty());
    REQUIRE(best.error.empty());
    CHECK(best.report.q_rank() >= one.report.q_rank());
    CHECK(best.report.config["dc_factor"].get<double>() == best.dc_factor);
}

TEST_CASE("failed cells are recorded") {
    ExperimentConfig cfg = tiny();
    cfg.link.clamp = false;
    const auto cell = run_cell(cfg, "QAM16", -3, 10);
    CHECK_FALSE(cell.error.empty());
    CHECK(cell.row().flag == "failed");
    const auto missing = run_cell(cfg, "no-such-format.txt", 10, 10);
    CHECK_FALSE(missing.error.empty());
}

TEST_CASE("post-processing") {
    std::vector<SweepRow> rows;
    for (double o : {8.0, 10.0, 12.0, 14.0}) {
        rows.push_back({"QAM64", 6, o, 0.01, 0.5 * o, 4, ""});
        rows.push_back({"QAM64", 10, o, 0.01, o - 4.0, 4, ""});
        rows.push_back({"QAM128", 10, o, 0.1, 3.0, 4, ""});
    }
    rows.push_back({"QAM64", 10, kInfinity, 0, std::nullopt, 4, "error-free"});
    const auto p = postprocess(rows, 1e9);
    CHECK(p.envelope_csv.find("QAM64,8,4\n") != std::string::npos);
    CHECK(p.envelope_csv.find("QAM64,14,10\n") != std::string::npos);
    CHECK(p.envelope_csv.find("inf") == std::string::npos);
    // 20% threshold 6.70 dB: envelope (12, 8) above, (10, 6) below -> 10.7.
    CHECK(p.crossings_csv.find("QAM64,HD-FEC 20%,0.2,6.7,10.7,reached") != std::string::npos);
    CHECK(p.crossings_csv.find("QAM128,HD-FEC 20%,0.2,6.7,,not-reached") != std::string::npos);
    CHECK(p.crossings_csv.find("QAM128,HD-FEC 6.7%,0.067,8.35,,not-reached") != std::string::npos);
    CHECK(p.throughput_csv.find("QAM64,HD-FEC 20%,10.7,5\n") != std::string::npos);
    CHECK(p.throughput_csv.find("QAM128") == std::string::npos);
}

TEST_CASE("shaping runs write one file per SNR") {
    ShapingRunConfig cfg;
    cfg.start = "QAM8";
    cfg.optimizer.max_iterations = 20;
    cfg.snr_db = {5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    const auto dir = scratch_dir("gs8");
    const auto out = run_shaping(cfg, 2);
    const auto files = write_shaping(out, dir);
    CHECK(files.size() == 10);
    std::size_t txt = 0;
    for (const auto& e : fs::directory_iterator(dir)) txt += e.path().extension() == ".txt";
    CHECK(txt == 10);
    CHECK(fs::exists(dir / "GS-8_5dB.txt"));
    CHECK(fs::exists(dir / "GS-8_14dB_trace.csv"));
    const Constellation back = load_constellation(dir / "GS-8_14dB.txt");
    CHECK(back.size() == 8);

    const auto dir2 = scratch_dir("gs8b");
    write_shaping(run_shaping(cfg, 1), dir2);
    for (const auto& f : files) CHECK(slurp(f) == slurp(dir2 / f.filename()));

    ShapingRunConfig big;
    big.start = "QAM128";
    big.snr_db = {17, 18, 19, 20, 21, 22, 23};
    big.optimizer.max_iterations = 2;
    big.optimizer.symmetry = Symmetry::Quadrant;
    big.optimizer.gmi.hermite_order = 3;
    const auto d3 = scratch_dir("gs128");
    CHECK(write_shaping(run_shaping(big, 2), d3).size() == 7);
    fs::remove_all(dir);
    fs::remove_all(dir2);
    fs::remove_all(d3);
}
