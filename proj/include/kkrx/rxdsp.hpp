#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kkrx/constellation.hpp"
#include "kkrx/overlap_save.hpp"
#include "kkrx/types.hpp"

namespace kkrx {

struct KkConfig {
    double dc_offset = 0.0;              // added to the ADC codes
    std::size_t fft_size = 1024;
    std::size_t overlap_discard = 256;   // per block edge
    double tone_frequency = 0.516e9;     // as transmitted (already period-quantized)
    double adc_rate = 4e9;
    double baud = 1e9;
    bool clamp = false;                  // floor non-positive samples instead of failing
    double clamp_floor = 1e-3;           // floor as a fraction of dc_offset
    std::size_t carrier_block = 16384;   // samples per carrier estimate
    double kaiser_beta = 10.0;

    void validate() const;
    int samples_per_symbol() const;
};

struct KkFrontend {
    RVec amplitude;
    RVec log_amplitude;
    std::size_t clamped = 0;
};

KkFrontend kk_frontend(const SampleBuffer& adc, const KkConfig& cfg);

// Block frequency response of the windowed Hilbert kernel (2*discard-1 taps).
CVec hilbert_response(const KkConfig& cfg);
RVec hilbert_phase(const RVec& log_amplitude, const KkConfig& cfg);

// Tone-frame field a*exp(-i phi), divided by its carrier estimate (mean over
// each carrier_block) minus one, shifted back to baseband. Output has unit
// carrier scale: samples equal signal/carrier amplitude.
SampleBuffer reconstruct_and_downconvert(const RVec& amplitude, const RVec& phase, const KkConfig& cfg);

inline constexpr std::size_t kStaticTaps = 203;

struct StaticEqualizer {
    CVec taps;              // FIR at 4 sps, taps[k] weights x[n + 101 - k]
    bool trained = false;
    long long timing = 0;   // 4-sps index of training symbol 0 (multiple of 4)
    std::size_t period = 0; // training sequence length in symbols
    double correlation = 0; // normalized correlation peak found during alignment

    void validate() const;
    // n-point DFT-grid response of the taps.
    CVec response(std::size_t n) const;
    static StaticEqualizer identity();
};

struct StaticEqConfig {
    double ridge = 1e-6;             // times the trace of the normal matrix
    double sync_threshold = 0.3;     // minimum normalized correlation peak
    std::size_t edge_guard = 2048;   // 4-sps samples ignored at each capture edge
    double rolloff = 0.01;
    int rrc_span = 256;
};

// rx: baseband at 4 sps; known: the transmitted symbol sequence (one period).
StaticEqualizer train_static_eq(const SampleBuffer& rx, const CVec& known, const StaticEqConfig& cfg = {});
SampleBuffer apply_static_eq_and_resample(const SampleBuffer& rx, const StaticEqualizer& eq);

inline constexpr std::size_t kStaticBlock = 1024;
inline constexpr std::size_t kStaticMargin = 128;

enum class DdlmsMode { Training, DecisionDirected };

struct AdaptiveEqualizer {
    std::array<cplx, 4> w{};
    std::array<cplx, 4> g{};
    double step_size = 1e-3;
    DdlmsMode mode = DdlmsMode::DecisionDirected;
    std::size_t training_symbols = 10000;  // then switch to decision-directed
    bool widely_linear = true;

    // Carried across buffers.
    std::array<cplx, 4> line{};            // x_n, x_{n-1}, x_{n-2}, x_{n-3}
    std::uint64_t samples_seen = 0;
    std::uint64_t symbols_out = 0;

    double divergence_threshold = 1.0;     // mean |e|^2
    std::size_t divergence_window = 1024;
    double window_error = 0.0;
    std::size_t window_count = 0;
    std::size_t diverged_windows = 0;

    void validate() const;
    static AdaptiveEqualizer center_spike(double step_size = 1e-3);
};

struct DdlmsOutput {
    CVec symbols;
    std::vector<std::uint32_t> decisions;  // constellation point indices
};

// One output symbol per two input samples (on odd input indices). In training
// mode the decision for output symbol s is known[(s + known_offset) mod L].
DdlmsOutput ddlms(std::span<const cplx> rx, const Constellation& c, AdaptiveEqualizer& state,
                  std::span<const cplx> known = {}, long long known_offset = 0);

struct EqualizerState {
    StaticEqualizer static_eq;
    AdaptiveEqualizer adaptive;
};

struct StageTimes {
    double frontend = 0, hilbert = 0, reconstruct = 0, static_eq = 0, ddlms = 0, demap = 0;
    double total() const { return frontend + hilbert + reconstruct + static_eq + ddlms + demap; }
    StageTimes& operator+=(const StageTimes& o);
};

struct ReceiveResult {
    Bits bits;
    std::vector<std::uint32_t> decisions;
    CVec symbols;
    std::uint64_t first_symbol = 0;   // stream index of decisions[0]
    std::size_t clamped = 0;
    bool diverged = false;
};

// Streaming receiver for one stream of ADC buffers. All block and carrier
// boundaries are fixed relative to the stream start, so decisions do not
// depend on buffer boundaries.
class Receiver {
public:
    Receiver(const KkConfig& cfg, Constellation c, EqualizerState state, CVec training = {});
    ~Receiver();
    Receiver(Receiver&&) noexcept;

    ReceiveResult process(const SampleBuffer& adc);
    ReceiveResult finish();

    const EqualizerState& state() const { return state_; }
    const StageTimes& times() const { return times_; }

private:
    ReceiveResult run(const RVec* log_amp, bool final);

    struct Streams;
    KkConfig cfg_;
    Constellation c_;
    EqualizerState state_;
    CVec training_;
    std::unique_ptr<Streams> s_;
    StageTimes times_;
    std::uint64_t symbols_emitted_ = 0;
    bool finished_ = false;
};

// Single-buffer receive: a fresh stream over `adc`, flushed at the end.
ReceiveResult receive(const SampleBuffer& adc, const KkConfig& cfg, const Constellation& c, EqualizerState& state,
                      const CVec& training = {});

}  // namespace kkrx
