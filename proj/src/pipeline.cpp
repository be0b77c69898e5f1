#include "kkrx/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace kkrx {

VectorSource::VectorSource(std::vector<SampleBuffer> buffers) : buffers_(std::move(buffers)) {}

std::optional<Buffer> VectorSource::next() {
    if (pos_ >= buffers_.size()) return std::nullopt;
    Buffer b{pos_, buffers_[pos_]};
    ++pos_;
    return b;
}

LinkSource::LinkSource(const LinkSimulator& link, std::size_t count) : link_(link), count_(count) {}

std::optional<Buffer> LinkSource::next() {
    if (pos_ >= count_) return std::nullopt;
    Buffer b{pos_, link_.capture(pos_)};
    ++pos_;
    return b;
}

ChainConfig ChainConfig::from_link(const LinkSimulator& link) {
    ChainConfig c;
    c.kk = link.kk_config();
    c.constellation = link.constellation();
    c.tx_indices = link.tx().indices;
    c.training = link.tx_points();
    c.warmup_symbols = std::max<std::size_t>(link.config().training_symbols, 2048);
    return c;
}

namespace {

// Decisions of one stream, counted per buffer once the symbol offset is known.
class ErrorCounter {
public:
    explicit ErrorCounter(const ChainConfig& chain) : chain_(chain) {
        for (auto i : chain.tx_indices) tx_points_.push_back(chain.constellation.points()[i]);
    }

    void add(std::size_t buffer, const ReceiveResult& r) {
        for (std::size_t k = 0; k < r.decisions.size(); ++k) {
            decisions_.push_back(r.decisions[k]);
            owner_.push_back(buffer);
        }
    }

    void finish(RunReport& report, std::size_t buffers) {
        report.buffers.assign(buffers, BufferReport{});
        for (std::size_t b = 0; b < buffers; ++b) report.buffers[b].index = b;
        report.symbols = decisions_.size();
        const std::size_t lo = chain_.warmup_symbols;
        const std::size_t hi = decisions_.size() > chain_.tail_symbols ? decisions_.size() - chain_.tail_symbols : 0;
        if (hi <= lo) {
            report.aggregate(chain_.min_errors);
            return;
        }
        const std::size_t span_len = std::min(hi - lo, tx_points_.size());
        CVec decided(span_len);
        for (std::size_t k = 0; k < span_len; ++k) decided[k] = chain_.constellation.points()[decisions_[lo + k]];
        long long offset = 0;
        try {
            offset = align_symbols(decided, tx_points_) - static_cast<long long>(lo);
        } catch (const Error&) {
            report.anomaly = true;
            offset = -static_cast<long long>(lo);
        }
        const auto& labels = chain_.constellation.labels();
        const long long period = static_cast<long long>(chain_.tx_indices.size());
        const unsigned m = chain_.constellation.bits_per_symbol();
        for (std::size_t k = lo; k < hi; ++k) {
            long long q = (static_cast<long long>(k) + offset) % period;
            if (q < 0) q += period;
            auto& br = report.buffers[owner_[k]];
            br.errors += static_cast<std::uint64_t>(
                std::popcount(labels[decisions_[k]] ^ labels[chain_.tx_indices[static_cast<std::size_t>(q)]]));
            br.bits += m;
        }
        report.aggregate(chain_.min_errors);
    }

    const std::vector<std::uint32_t>& decisions() const { return decisions_; }

private:
    const ChainConfig& chain_;
    CVec tx_points_;
    std::vector<std::uint32_t> decisions_;
    std::vector<std::size_t> owner_;
};

}  // namespace

RunReport run_stream(BufferSource& source, StreamContext& ctx, const ChainConfig& chain) {
    if (chain.tx_indices.empty()) throw Error("chain has no transmitted reference sequence");
    Receiver rx(chain.kk, chain.constellation, ctx.state, chain.training);
    ErrorCounter counter(chain);
    RunReport report;
    std::size_t buffers = 0;
    while (auto buf = source.next()) {
        if (buf->sequence != ctx.next_sequence)
            throw Error("stream " + std::to_string(ctx.id) + ": buffer " + std::to_string(buf->sequence) +
                        " out of order, expected " + std::to_string(ctx.next_sequence));
        ++ctx.next_sequence;
        ctx.samples += buf->samples.size();
        ReceiveResult r = rx.process(buf->samples);
        report.clamped += r.clamped;
        report.diverged = report.diverged || r.diverged;
        counter.add(buffers, r);
        ++buffers;
    }
    if (buffers == 0) throw Error("stream has no buffers");
    ReceiveResult tail = rx.finish();
    report.diverged = report.diverged || tail.diverged;
    counter.add(buffers - 1, tail);
    ctx.state = rx.state();
    ctx.times += rx.times();
    counter.finish(report, buffers);
    if (chain.keep_decisions) ctx.decisions = counter.decisions();
    return report;
}

nlohmann::json to_json(const PipelineStats& s, double reference_rate) {
    const double total = s.stage_seconds.total();
    const auto per_buffer = [&](double t) { return s.buffers ? t / static_cast<double>(s.buffers) : 0.0; };
    nlohmann::json stages = nlohmann::json::array();
    const std::pair<const char*, double> rows[] = {
        {"kk_frontend", s.stage_seconds.frontend},   {"hilbert", s.stage_seconds.hilbert},
        {"reconstruct", s.stage_seconds.reconstruct}, {"static_eq_resample", s.stage_seconds.static_eq},
        {"ddlms", s.stage_seconds.ddlms},             {"demap", s.stage_seconds.demap},
    };
    for (const auto& [name, t] : rows)
        stages.push_back({{"stage", name},
                          {"seconds", t},
                          {"mean_seconds_per_buffer", per_buffer(t)},
                          {"fraction", total > 0 ? t / total : 0.0}});
    return {{"stages", stages},
            {"wall_seconds", s.wall_seconds},
            {"samples", s.samples},
            {"buffers", s.buffers},
            {"streams", s.streams},
            {"workers", s.workers},
            {"samples_per_second", s.samples_per_second()},
            {"fraction_of_realtime", s.samples_per_second() / reference_rate}};
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    if (workers == 0) throw Error("worker count must be at least 1");
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ParallelResult run_parallel(std::vector<StreamJob> jobs, std::size_t workers) {
    ParallelResult out;
    out.reports.resize(jobs.size());
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        if (!jobs[i].chain || !jobs[i].source) throw Error("stream job is incomplete");
        out.reports[i] = run_stream(*jobs[i].source, jobs[i].context, *jobs[i].chain);
    });
    out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.stats.streams = jobs.size();
    out.stats.workers = workers;
    for (auto& j : jobs) {
        out.stats.stage_seconds += j.context.times;
        out.stats.samples += j.context.samples;
        out.stats.buffers += j.context.next_sequence;
        out.contexts.push_back(std::move(j.context));
    }
    return out;
}

}  // namespace kkrx
