#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kkrx/constellation.hpp"
#include "kkrx/types.hpp"

namespace kkrx {

struct ErrorCount {
    std::uint64_t errors = 0;
    std::uint64_t total = 0;
    double ber = 0.0;
    bool anomaly = false;  // BER above 1/2: the streams are probably misaligned or inverted
};

ErrorCount count_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

// Cyclic offset o such that decided symbol k belongs to transmitted symbol
// (k + o) mod L, found by circular cross-correlation. Throws when the
// normalized peak is below min_peak.
long long align_symbols(std::span<const cplx> decided, std::span<const cplx> reference, double min_peak = 0.5);

// Bit errors between decided point indices and the periodic transmitted
// index sequence with the given offset.
ErrorCount count_symbol_errors(std::span<const std::uint32_t> decided, std::span<const std::uint32_t> tx_indices,
                               long long offset, const Constellation& c);

double erfcinv(double y);
std::optional<double> q_from_ber(double ber);
double ber_from_q(double q_db);

struct FecProfile {
    std::string name;
    double overhead = 0.0;
    double q_threshold_db = 0.0;

    void validate() const;
};

FecProfile fec_hd_7();   // 6.7% overhead, 8.35 dB
FecProfile fec_hd_20();  // 20% overhead, 6.70 dB
std::vector<FecProfile> standard_fec_profiles();

double net_throughput(unsigned bits_per_symbol, double baud, double overhead);
double net_throughput(const Constellation& c, double baud, const FecProfile& fec);

struct CurvePoint {
    double osnr_db;
    double q_db;
};

// OSNR at which the Q curve first rises through the threshold, by linear
// interpolation; nullopt when the threshold is never reached.
std::optional<double> threshold_crossing(std::vector<CurvePoint> curve, const FecProfile& fec);

struct SweepPoint {
    double cspr_db;
    double osnr_db;
    double q_db;
};

std::vector<CurvePoint> best_q_envelope(std::span<const SweepPoint> runs);

struct BufferReport {
    std::size_t index = 0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    double ber = 0.0;
    std::optional<double> q_db;
};

struct RunReport {
    std::vector<BufferReport> buffers;
    std::uint64_t errors = 0;     // over buffers with at least one error
    std::uint64_t bits = 0;       // over all counted buffers
    double ber = 0.0;
    std::optional<double> q_db;
    std::uint64_t symbols = 0;
    std::size_t buffers_processed = 0;
    std::size_t clamped = 0;
    bool diverged = false;
    bool anomaly = false;
    std::string flag;             // "", "error-free", "few-errors", "anomaly", "diverged"
    nlohmann::json config;

    // Aggregate over buffers: zero-error buffers are excluded from the mean
    // BER; fewer than min_errors total flags the Q value.
    void aggregate(std::uint64_t min_errors = 100);
    bool error_free() const { return errors == 0 && bits > 0; }
    // Q for ordering comparisons: error-free runs rank above any finite Q.
    double q_rank() const;
};

nlohmann::json to_json(const RunReport& r);

struct SweepRow {
    std::string format;
    double cspr_db = 0.0;
    double osnr_db = 0.0;
    double ber = 0.0;
    std::optional<double> q_db;
    std::size_t buffers = 0;
    std::string flag;
};

std::string sweep_csv_header();
std::string format_sweep_row(const SweepRow& row);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

}  // namespace kkrx
