#include "kkrx/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "kkrx/rng.hpp"

namespace kkrx {

namespace {

using nlohmann::json;

double number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "Infinity" || s == "+inf") return kInfinity;
    }
    if (v.is_null()) return kInfinity;
    throw Error("expected a number or \"inf\" in config, got " + v.dump());
}

json number_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_num(const json& j, const char* key, double& out) {
    if (j.contains(key)) out = number(j.at(key));
}

std::vector<double> grid(const json& j) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(number(v));
        return out;
    }
    if (j.is_object()) {
        const double start = number(j.at("start")), stop = number(j.at("stop")), step = number(j.at("step"));
        if (!(step > 0)) throw Error("grid step must be positive");
        for (int k = 0; start + k * step <= stop + 1e-9; ++k) out.push_back(start + k * step);
        return out;
    }
    return {number(j)};
}

json grid_json(const std::vector<double>& g) {
    json a = json::array();
    for (double v : g) a.push_back(number_json(v));
    return a;
}

Symmetry symmetry_from(const std::string& s) {
    if (s == "none") return Symmetry::None;
    if (s == "quadrant") return Symmetry::Quadrant;
    throw Error("unknown symmetry '" + s + "'");
}

std::string csv_num(double v) {
    std::ostringstream s;
    s.precision(10);
    if (std::isinf(v)) s << "inf";
    else s << v;
    return s.str();
}

unsigned bits_for_format(const std::string& name) {
    try {
        return resolve_format(name).bits_per_symbol();
    } catch (const Error&) {
    }
    // Fall back to the cardinality written in the name, e.g. GS-128.
    std::string digits;
    for (char ch : name) {
        if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
        else if (!digits.empty()) break;
    }
    if (digits.empty()) throw Error("cannot determine the cardinality of format '" + name + "'");
    const unsigned long m = std::stoul(digits);
    unsigned b = 0;
    while ((1ul << b) < m) ++b;
    if ((1ul << b) != m) throw Error("format '" + name + "' has a cardinality that is not a power of two");
    return b;
}

}  // namespace

void ExperimentConfig::validate() const {
    link.validate();
    if (formats.empty() || osnr_db.empty() || cspr_db.empty() || dc_factors.empty())
        throw Error("experiment grids must be non-empty");
    if (workers == 0) throw Error("workers must be at least 1");
    for (double f : dc_factors)
        if (!(f > 0)) throw Error("dc factors must be positive");
    shaping.optimizer.validate();
}

ExperimentConfig default_experiment() {
    ExperimentConfig cfg;
    cfg.link.tx.sequence_length = std::size_t{1} << 16;
    cfg.link.buffers = 4;
    cfg.link.clamp = true;
    return cfg;
}

void apply_full_scale(ExperimentConfig& cfg) {
    cfg.link.tx.sequence_length = std::size_t{1} << 20;
    cfg.link.buffers = 98;
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig cfg = default_experiment();
    try {
        if (j.contains("link")) {
            const json& l = j.at("link");
            if (l.contains("tx")) {
                const json& t = l.at("tx");
                read_num(t, "baud", cfg.link.tx.baud);
                read_num(t, "rolloff", cfg.link.tx.rolloff);
                read_num(t, "dac_rate", cfg.link.tx.dac_rate);
                read_num(t, "tone_frequency", cfg.link.tx.tone_frequency);
                read(t, "sequence_length", cfg.link.tx.sequence_length);
                read(t, "seed", cfg.link.tx.seed);
                read(t, "dac_bits", cfg.link.tx.dac_bits);
                read(t, "rrc_span", cfg.link.tx.rrc_span);
            }
            if (l.contains("channel")) {
                const json& c = l.at("channel");
                read_num(c, "reference_bandwidth", cfg.link.channel.reference_bandwidth);
                read_num(c, "bpf_bandwidth", cfg.link.channel.bpf_bandwidth);
                read_num(c, "bpf_center", cfg.link.channel.bpf_center);
                read_num(c, "pd_bandwidth", cfg.link.channel.pd_bandwidth);
                read_num(c, "adc_rate", cfg.link.channel.adc_rate);
                read_num(c, "adc_bandwidth", cfg.link.channel.adc_bandwidth);
                read(c, "adc_bits", cfg.link.channel.adc_bits);
                read_num(c, "dispersion_ps_nm", cfg.link.channel.dispersion_ps_nm);
                read_num(c, "wavelength", cfg.link.channel.wavelength);
                read(c, "seed", cfg.link.channel.seed);
            }
            if (l.contains("receiver")) {
                const json& r = l.at("receiver");
                read(r, "clamp", cfg.link.clamp);
                read_num(r, "ddlms_step", cfg.link.ddlms_step);
                read(r, "training_symbols", cfg.link.training_symbols);
                read_num(r, "ridge", cfg.link.static_eq.ridge);
                read_num(r, "sync_threshold", cfg.link.static_eq.sync_threshold);
            }
            read(l, "buffers", cfg.link.buffers);
        }
        if (j.contains("formats")) cfg.formats = j.at("formats").get<std::vector<std::string>>();
        if (j.contains("osnr_db")) cfg.osnr_db = grid(j.at("osnr_db"));
        if (j.contains("cspr_db")) cfg.cspr_db = grid(j.at("cspr_db"));
        if (j.contains("dc_factors")) cfg.dc_factors = grid(j.at("dc_factors"));
        read(j, "buffers", cfg.link.buffers);
        if (j.contains("buffer_symbols")) cfg.link.tx.sequence_length = j.at("buffer_symbols").get<std::size_t>();
        read(j, "training_format", cfg.training_format);
        read(j, "workers", cfg.workers);
        read(j, "output_dir", cfg.output_dir);
        if (j.contains("seed")) {
            const auto seed = j.at("seed").get<std::uint64_t>();
            cfg.link.tx.seed = seed;
            cfg.link.channel.seed = derive_seed(seed, 1);
            cfg.shaping.optimizer.seed = seed;
        }
        if (j.contains("shaping")) {
            const json& s = j.at("shaping");
            read(s, "start", cfg.shaping.start);
            if (s.contains("snr_db")) cfg.shaping.snr_db = grid(s.at("snr_db"));
            read(s, "max_iterations", cfg.shaping.optimizer.max_iterations);
            read_num(s, "perturbation_stddev", cfg.shaping.optimizer.perturbation_stddev);
            read(s, "shrink_after", cfg.shaping.optimizer.shrink_after);
            read(s, "patience", cfg.shaping.optimizer.patience);
            read(s, "seed", cfg.shaping.optimizer.seed);
            read(s, "hermite_order", cfg.shaping.optimizer.gmi.hermite_order);
            if (s.contains("symmetry")) cfg.shaping.optimizer.symmetry = symmetry_from(s.at("symmetry").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(std::string("invalid experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    const auto& t = cfg.link.tx;
    const auto& c = cfg.link.channel;
    return {
        {"link",
         {{"tx",
           {{"baud", t.baud},
            {"rolloff", t.rolloff},
            {"dac_rate", t.dac_rate},
            {"tone_frequency", t.tone_frequency},
            {"sequence_length", t.sequence_length},
            {"seed", t.seed},
            {"dac_bits", t.dac_bits},
            {"rrc_span", t.rrc_span}}},
          {"channel",
           {{"reference_bandwidth", c.reference_bandwidth},
            {"bpf_bandwidth", number_json(c.bpf_bandwidth)},
            {"bpf_center", c.bpf_center},
            {"pd_bandwidth", number_json(c.pd_bandwidth)},
            {"adc_rate", c.adc_rate},
            {"adc_bandwidth", number_json(c.adc_bandwidth)},
            {"adc_bits", c.adc_bits},
            {"dispersion_ps_nm", c.dispersion_ps_nm},
            {"wavelength", c.wavelength},
            {"seed", c.seed}}},
          {"receiver",
           {{"clamp", cfg.link.clamp},
            {"ddlms_step", cfg.link.ddlms_step},
            {"training_symbols", cfg.link.training_symbols},
            {"ridge", cfg.link.static_eq.ridge},
            {"sync_threshold", cfg.link.static_eq.sync_threshold}}},
          {"buffers", cfg.link.buffers}}},
        {"formats", cfg.formats},
        {"osnr_db", grid_json(cfg.osnr_db)},
        {"cspr_db", grid_json(cfg.cspr_db)},
        {"dc_factors", grid_json(cfg.dc_factors)},
        {"training_format", cfg.training_format},
        {"workers", cfg.workers},
        {"output_dir", cfg.output_dir},
        {"shaping",
         {{"start", cfg.shaping.start},
          {"snr_db", grid_json(cfg.shaping.snr_db)},
          {"max_iterations", cfg.shaping.optimizer.max_iterations},
          {"perturbation_stddev", cfg.shaping.optimizer.perturbation_stddev},
          {"shrink_after", cfg.shaping.optimizer.shrink_after},
          {"patience", cfg.shaping.optimizer.patience},
          {"seed", cfg.shaping.optimizer.seed},
          {"hermite_order", cfg.shaping.optimizer.gmi.hermite_order},
          {"symmetry", cfg.shaping.optimizer.symmetry == Symmetry::Quadrant ? "quadrant" : "none"}}},
    };
}

Constellation resolve_format(const std::string& name) {
    for (const auto& s : standard_format_names())
        if (s == name) return make_standard(name);
    if (std::filesystem::exists(name)) return load_constellation(name);
    throw Error("unknown format '" + name + "' (neither a standard name nor a constellation file)");
}

SweepRow CellResult::row() const {
    SweepRow r;
    r.format = format;
    r.cspr_db = cspr_db;
    r.osnr_db = osnr_db;
    r.ber = report.ber;
    r.q_db = report.q_db;
    r.buffers = report.buffers_processed;
    r.flag = error.empty() ? report.flag : "failed";
    return r;
}

CellResult run_cell(const ExperimentConfig& cfg, const std::string& format, double cspr_db, double osnr_db,
                    StageTimes* times) {
    CellResult cell;
    cell.format = format;
    cell.cspr_db = cspr_db;
    cell.osnr_db = osnr_db;
    try {
        LinkConfig lc = cfg.link;
        lc.tx.cspr_db = cspr_db;
        lc.channel.osnr_db = osnr_db;
        const LinkSimulator link(resolve_format(format), lc);
        std::optional<LinkSimulator> trainer;
        if (!cfg.training_format.empty() && cfg.training_format != format)
            trainer.emplace(resolve_format(cfg.training_format), lc);
        const LinkSimulator& tl = trainer ? *trainer : link;

        std::vector<SampleBuffer> captures;
        for (std::size_t b = 0; b < lc.buffers; ++b) captures.push_back(link.capture(b));
        const SampleBuffer training_capture = trainer ? tl.capture(0) : captures.front();

        bool have = false;
        for (double f : cfg.dc_factors) {
            KkConfig kk = link.kk_config();
            kk.dc_offset = f * link.nominal_dc();
            KkConfig tk = tl.kk_config();
            tk.dc_offset = f * tl.nominal_dc();
            RunReport report;
            try {
                const StaticEqualizer eq = train_on_link(tl, training_capture, tk);
                ChainConfig chain = ChainConfig::from_link(link);
                chain.kk = kk;
                StreamContext ctx;
                ctx.state = link.initial_state(eq);
                VectorSource src(captures);
                report = run_stream(src, ctx, chain);
                if (times) *times += ctx.times;
            } catch (const Error& e) {
                if (cfg.dc_factors.size() == 1) throw;
                continue;
            }
            report.config = {{"format", format},
                             {"cspr_db", cspr_db},
                             {"osnr_db", std::isinf(osnr_db) ? json("inf") : json(osnr_db)},
                             {"dc_factor", f},
                             {"dc_offset", kk.dc_offset},
                             {"training_format", cfg.training_format.empty() ? format : cfg.training_format},
                             {"buffers", lc.buffers},
                             {"buffer_symbols", lc.tx.sequence_length}};
            if (!have || report.q_rank() > cell.report.q_rank()) {
                cell.report = report;
                cell.dc_factor = f;
                have = true;
            }
        }
        if (!have) throw Error("every dc offset failed");
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return cell;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::function<void(const CellResult&)>& progress) {
    cfg.validate();
    struct Key {
        std::string format;
        double cspr, osnr;
    };
    std::vector<Key> keys;
    for (const auto& f : cfg.formats)
        for (double c : cfg.cspr_db)
            for (double o : cfg.osnr_db) keys.push_back({f, c, o});
    SweepResult out;
    out.cells.resize(keys.size());
    std::vector<StageTimes> times(keys.size());
    std::mutex report_mutex;
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(keys.size(), cfg.workers, [&](std::size_t i) {
        out.cells[i] = run_cell(cfg, keys[i].format, keys[i].cspr, keys[i].osnr, &times[i]);
        if (progress) {
            std::lock_guard lock(report_mutex);
            progress(out.cells[i]);
        }
    });
    out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.stats.streams = keys.size();
    out.stats.workers = cfg.workers;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        out.stats.stage_seconds += times[i];
        out.stats.buffers += out.cells[i].report.buffers_processed;
        out.stats.samples += out.cells[i].report.buffers_processed * cfg.link.tx.sequence_length * 4;
    }
    return out;
}

std::string sweep_csv(const SweepResult& r) {
    std::string s = sweep_csv_header() + "\n";
    for (const auto& c : r.cells) s += format_sweep_row(c.row()) + "\n";
    return s;
}

PostResult postprocess(const std::vector<SweepRow>& rows, double baud) {
    std::vector<std::string> formats;
    for (const auto& r : rows)
        if (std::find(formats.begin(), formats.end(), r.format) == formats.end()) formats.push_back(r.format);
    PostResult out;
    out.envelope_csv = "format,osnr_db,q_db\n";
    out.crossings_csv = "format,fec,overhead,q_threshold_db,osnr_db,status\n";
    out.throughput_csv = "format,fec,osnr_db,net_gbps\n";
    for (const auto& f : formats) {
        std::vector<SweepPoint> pts;
        for (const auto& r : rows)
            if (r.format == f && r.q_db && std::isfinite(r.osnr_db)) pts.push_back({r.cspr_db, r.osnr_db, *r.q_db});
        const auto env = best_q_envelope(pts);
        for (const auto& p : env) out.envelope_csv += f + "," + csv_num(p.osnr_db) + "," + csv_num(p.q_db) + "\n";
        const unsigned bits = bits_for_format(f);
        for (const auto& fec : standard_fec_profiles()) {
            std::optional<double> x;
            if (env.size() >= 2) x = threshold_crossing(env, fec);
            out.crossings_csv += f + "," + fec.name + "," + csv_num(fec.overhead) + "," + csv_num(fec.q_threshold_db) +
                                 "," + (x ? csv_num(*x) : std::string()) + "," + (x ? "reached" : "not-reached") + "\n";
            if (x)
                out.throughput_csv += f + "," + fec.name + "," + csv_num(*x) + "," +
                                      csv_num(net_throughput(bits, baud, fec.overhead) / 1e9) + "\n";
        }
    }
    return out;
}

std::vector<ShapingOutput> run_shaping(const ShapingRunConfig& cfg, std::size_t workers) {
    const Constellation start = resolve_format(cfg.start);
    std::vector<std::optional<ShapingOutput>> slots(cfg.snr_db.size());
    parallel_for(cfg.snr_db.size(), workers, [&](std::size_t i) {
        ShapingConfig sc = cfg.optimizer;
        sc.target_snr_db = cfg.snr_db[i];
        sc.seed = derive_seed(cfg.optimizer.seed, static_cast<std::uint64_t>(std::llround(cfg.snr_db[i] * 10.0)));
        std::ostringstream name;
        name << "GS-" << start.size() << "_" << csv_num(cfg.snr_db[i]) << "dB";
        slots[i].emplace(ShapingOutput{cfg.snr_db[i], name.str(), optimize_shaping(start, sc)});
    });
    std::vector<ShapingOutput> out;
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<std::filesystem::path> write_shaping(const std::vector<ShapingOutput>& outputs,
                                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (const auto& r : outputs) {
        files.push_back(dir / (r.name + ".txt"));
        save_constellation(r.result.constellation, files.back());
        const auto trace = dir / (r.name + "_trace.csv");
        std::ofstream f(trace);
        if (!f) throw Error("cannot write " + trace.string());
        f << format_trace_csv(r.result.trace);
    }
    return files;
}

}  // namespace kkrx
