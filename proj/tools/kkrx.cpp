#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kkrx/experiment.hpp"
#include "kkrx/io.hpp"

namespace fs = std::filesystem;
using namespace kkrx;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

struct Common {
    std::string config;
    std::string out;
    long long seed = -1;
    std::size_t workers = 0;
    bool full = false;
};

ExperimentConfig load_config(const Common& c) {
    nlohmann::json j = nlohmann::json::object();
    if (!c.config.empty()) {
        try {
            j = nlohmann::json::parse(slurp(c.config));
        } catch (const nlohmann::json::exception& e) {
            throw Error("config " + c.config + ": " + e.what());
        }
    }
    if (c.seed >= 0) j["seed"] = static_cast<std::uint64_t>(c.seed);
    ExperimentConfig cfg = experiment_from_json(j);
    if (c.full) apply_full_scale(cfg);
    if (c.workers > 0) cfg.workers = c.workers;
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

int cmd_sweep(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    fs::create_directories(cfg.output_dir);
    spit(fs::path(cfg.output_dir) / "config.json", to_json(cfg).dump(2) + "\n");
    const SweepResult r = run_sweep(cfg, [](const CellResult& cell) {
        std::cerr << cell.format << " cspr " << cell.cspr_db << " osnr " << cell.osnr_db << ": ";
        if (!cell.error.empty()) std::cerr << "failed: " << cell.error << "\n";
        else
            std::cerr << "ber " << cell.report.ber << " q "
                      << (cell.report.q_db ? std::to_string(*cell.report.q_db) : std::string("-")) << " "
                      << cell.report.flag << "\n";
    });
    spit(fs::path(cfg.output_dir) / "sweep.csv", sweep_csv(r));
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& cell : r.cells) {
        nlohmann::json j = to_json(cell.report);
        if (!cell.error.empty()) j["error"] = cell.error;
        reports.push_back(j);
    }
    spit(fs::path(cfg.output_dir) / "reports.json", reports.dump(2) + "\n");
    spit(fs::path(cfg.output_dir) / "stats.json", to_json(r.stats, cfg.link.channel.adc_rate).dump(2) + "\n");
    std::cout << sweep_csv(r);
    std::size_t failed = 0;
    for (const auto& cell : r.cells) failed += !cell.error.empty();
    if (failed) std::cerr << failed << " cell(s) failed\n";
    return 0;
}

int cmd_post(const Common& c, const std::string& csv, double baud) {
    const auto rows = parse_sweep_csv(slurp(csv));
    const PostResult p = postprocess(rows, baud);
    const fs::path dir = c.out.empty() ? fs::path(csv).parent_path() : fs::path(c.out);
    if (!dir.empty()) fs::create_directories(dir);
    spit(dir / "envelope.csv", p.envelope_csv);
    spit(dir / "crossings.csv", p.crossings_csv);
    spit(dir / "throughput.csv", p.throughput_csv);
    std::cout << p.crossings_csv << "\n" << p.throughput_csv;
    return 0;
}

int cmd_shape(const Common& c) {
    const ExperimentConfig cfg = load_config(c);
    const auto outputs = run_shaping(cfg.shaping, cfg.workers);
    write_shaping(outputs, cfg.output_dir);
    for (const auto& r : outputs) {
        std::cout << r.name << ": GMI " << r.result.start_gmi << " -> " << r.result.final_gmi << " at "
                  << r.snr_db << " dB\n";
    }
    return 0;
}

int cmd_loopback(const Common& c, std::vector<std::string> formats, double cspr) {
    ExperimentConfig cfg = load_config(c);
    cfg.link.channel.osnr_db = kInfinity;
    cfg.link.channel.adc_bits = 0;
    cfg.link.channel.adc_bandwidth = kInfinity;
    cfg.formats = std::move(formats);
    cfg.osnr_db = {kInfinity};
    cfg.cspr_db = {cspr};
    cfg.dc_factors = {1.0};
    bool ok = true;
    for (const auto& f : cfg.formats) {
        const CellResult cell = run_cell(cfg, f, cspr, kInfinity);
        const bool pass = cell.error.empty() && cell.report.errors == 0 && cell.report.bits > 0;
        ok = ok && pass;
        std::cout << f << ": " << (pass ? "PASS" : "FAIL") << " errors " << cell.report.errors << " of "
                  << cell.report.bits << " bits" << (cell.error.empty() ? "" : " (" + cell.error + ")") << "\n";
    }
    return ok ? 0 : 1;
}

int cmd_export(const Common& c, const std::string& dir_arg) {
    const fs::path dir = dir_arg.empty() ? fs::path(c.out.empty() ? "." : c.out) : fs::path(dir_arg);
    fs::create_directories(dir);
    for (const auto& name : standard_format_names()) save_constellation(make_standard(name), dir / (name + ".txt"));
    std::cout << "wrote " << standard_format_names().size() << " constellations to " << dir << "\n";
    return 0;
}

int cmd_capture(const Common& c, const std::string& format, double cspr, double osnr, std::size_t index,
                const std::string& path, bool raw) {
    ExperimentConfig cfg = load_config(c);
    LinkConfig lc = cfg.link;
    lc.tx.cspr_db = cspr;
    lc.channel.osnr_db = osnr;
    const LinkSimulator link(resolve_format(format), lc);
    const SampleBuffer cap = link.capture(index);
    if (raw) save_adc_codes(path, cap);
    else save_waveform(path, cap);
    std::cout << "capture " << index << ": " << cap.size() << " samples, nominal dc offset " << link.nominal_dc()
              << " codes\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kramers-Kronig receiver link simulator and experiment runner"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config, "experiment config (JSON)");
        sub->add_option("-o,--out", common.out, "output directory");
        sub->add_option("-s,--seed", common.seed, "base seed for transmitter, channel and shaping");
        sub->add_option("-j,--workers", common.workers, "worker threads");
        sub->add_flag("--full", common.full, "98 buffers of 2^20 symbols per cell");
    };

    auto* sweep = app.add_subcommand("sweep", "OSNR x CSPR x format sweep, best over the dc-offset grid");
    add_common(sweep);

    std::string csv;
    double baud = 1e9;
    auto* post = app.add_subcommand("post", "envelope, FEC crossings and net throughput from a sweep CSV");
    add_common(post);
    post->add_option("csv", csv, "sweep CSV")->required();
    post->add_option("--baud", baud, "symbol rate for the throughput table");

    auto* shape = app.add_subcommand("shape", "geometric shaping over the configured SNR grid");
    add_common(shape);

    std::vector<std::string> loop_formats{"QAM4", "QAM64"};
    double loop_cspr = 20.0;
    auto* loop = app.add_subcommand("loopback-test", "noiseless ideal-ADC loopback; exit 1 on any bit error");
    add_common(loop);
    loop->add_option("--formats", loop_formats, "formats to test");
    loop->add_option("--cspr", loop_cspr, "CSPR in dB");

    std::string export_dir;
    auto* exp = app.add_subcommand("constellations", "write the standard constellation files");
    add_common(exp);
    exp->add_option("dir", export_dir, "target directory");

    std::string cap_format = "QAM16", cap_path = "capture.bin";
    double cap_cspr = 12.0, cap_osnr = kInfinity;
    std::size_t cap_index = 0;
    bool cap_raw = false;
    auto* cap = app.add_subcommand("capture", "dump one ADC capture of a simulated link");
    add_common(cap);
    cap->add_option("--format", cap_format, "format name or constellation file");
    cap->add_option("--cspr", cap_cspr, "CSPR in dB");
    cap->add_option("--osnr", cap_osnr, "OSNR in dB");
    cap->add_option("--index", cap_index, "capture index");
    cap->add_option("--path", cap_path, "output file");
    cap->add_flag("--raw", cap_raw, "raw little-endian int16 codes instead of the waveform dump");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sweep) return cmd_sweep(common);
        if (*post) return cmd_post(common, csv, baud);
        if (*shape) return cmd_shape(common);
        if (*loop) return cmd_loopback(common, loop_formats, loop_cspr);
        if (*exp) return cmd_export(common, export_dir);
        if (*cap) return cmd_capture(common, cap_format, cap_cspr, cap_osnr, cap_index, cap_path, cap_raw);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
