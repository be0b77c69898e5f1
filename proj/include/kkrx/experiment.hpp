#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kkrx/link.hpp"
#include "kkrx/metrics.hpp"
#include "kkrx/pipeline.hpp"
#include "kkrx/shaping.hpp"

namespace kkrx {

struct ShapingRunConfig {
    std::string start = "QAM8";
    std::vector<double> snr_db{14.0};
    ShapingConfig optimizer;
};

struct ExperimentConfig {
    LinkConfig link;
    std::vector<std::string> formats{"QAM4"};   // standard names or constellation files
    std::vector<double> osnr_db{kInfinity};
    std::vector<double> cspr_db{12.0};
    std::vector<double> dc_factors{1.0};
    std::string training_format;                // empty: train with the traffic's format
    std::size_t workers = 1;
    std::string output_dir = "out";
    ShapingRunConfig shaping;

    void validate() const;
};

// Defaults: the experimental setup at desk scale (4 buffers of 2^16 symbols).
ExperimentConfig default_experiment();
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
// 98 buffers of 2^20 symbols.
void apply_full_scale(ExperimentConfig& cfg);

Constellation resolve_format(const std::string& name);

struct CellResult {
    std::string format;
    double cspr_db = 0.0;
    double osnr_db = 0.0;
    double dc_factor = 1.0;
    RunReport report;
    std::string error;

    SweepRow row() const;
};

struct SweepResult {
    std::vector<CellResult> cells;
    PipelineStats stats;
};

// One (format, cspr, osnr) cell, best over the dc-offset grid.
CellResult run_cell(const ExperimentConfig& cfg, const std::string& format, double cspr_db, double osnr_db,
                    StageTimes* times = nullptr);
SweepResult run_sweep(const ExperimentConfig& cfg, const std::function<void(const CellResult&)>& progress = {});
std::string sweep_csv(const SweepResult& r);

struct PostResult {
    std::string envelope_csv;    // format,osnr_db,q_db
    std::string crossings_csv;   // format,fec,overhead,q_threshold_db,osnr_db,status
    std::string throughput_csv;  // format,fec,osnr_db,net_gbps
};

PostResult postprocess(const std::vector<SweepRow>& rows, double baud);

struct ShapingOutput {
    double snr_db;
    std::string name;
    ShapingResult result;
};

std::vector<ShapingOutput> run_shaping(const ShapingRunConfig& cfg, std::size_t workers = 1);
// <name>.txt and <name>_trace.csv per output; returns the constellation files.
std::vector<std::filesystem::path> write_shaping(const std::vector<ShapingOutput>& outputs,
                                                 const std::filesystem::path& dir);

}  // namespace kkrx
