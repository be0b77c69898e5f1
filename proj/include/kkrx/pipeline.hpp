#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "kkrx/link.hpp"
#include "kkrx/metrics.hpp"
#include "kkrx/rxdsp.hpp"

namespace kkrx {

struct Buffer {
    std::uint64_t sequence = 0;
    SampleBuffer samples;
};

class BufferSource {
public:
    virtual ~BufferSource() = default;
    virtual std::optional<Buffer> next() = 0;
};

// Buffers held in memory, numbered from zero.
class VectorSource : public BufferSource {
public:
    explicit VectorSource(std::vector<SampleBuffer> buffers);
    std::optional<Buffer> next() override;

private:
    std::vector<SampleBuffer> buffers_;
    std::size_t pos_ = 0;
};

// Captures 0..count-1 of a link, generated on demand.
class LinkSource : public BufferSource {
public:
    LinkSource(const LinkSimulator& link, std::size_t count);
    std::optional<Buffer> next() override;

private:
    const LinkSimulator& link_;
    std::size_t count_;
    std::size_t pos_ = 0;
};

// Everything a stream needs besides its buffers; shared read-only.
struct ChainConfig {
    KkConfig kk;
    Constellation constellation = make_standard("QAM4");
    std::vector<std::uint32_t> tx_indices;  // one period of transmitted indices
    CVec training;                          // known points for DDLMS training (may be empty)
    std::size_t warmup_symbols = 10000;     // not counted
    std::size_t tail_symbols = 512;         // not counted at the end of a stream
    std::uint64_t min_errors = 100;
    bool keep_decisions = false;

    static ChainConfig from_link(const LinkSimulator& link);
};

struct StreamContext {
    std::size_t id = 0;
    EqualizerState state;
    std::uint64_t next_sequence = 0;
    StageTimes times;
    std::uint64_t samples = 0;
    std::vector<std::uint32_t> decisions;  // filled when keep_decisions
};

RunReport run_stream(BufferSource& source, StreamContext& ctx, const ChainConfig& chain);

struct PipelineStats {
    StageTimes stage_seconds;
    double wall_seconds = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t buffers = 0;
    std::size_t streams = 0;
    std::size_t workers = 0;
    double samples_per_second() const { return wall_seconds > 0 ? static_cast<double>(samples) / wall_seconds : 0.0; }
};

nlohmann::json to_json(const PipelineStats& s, double reference_rate = 4e9);

struct StreamJob {
    std::unique_ptr<BufferSource> source;
    StreamContext context;
    const ChainConfig* chain = nullptr;
};

struct ParallelResult {
    std::vector<RunReport> reports;
    std::vector<StreamContext> contexts;
    PipelineStats stats;
};

// Calls body(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

// Streams run concurrently on `workers` threads; each stream stays on one
// worker and its buffers are processed in order.
ParallelResult run_parallel(std::vector<StreamJob> jobs, std::size_t workers);

}  // namespace kkrx
