#include "kkrx/rxdsp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kkrx/fft.hpp"
#include "kkrx/txdsp.hpp"

namespace kkrx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

cplx tone_rotation(double cycles_per_sample, std::uint64_t n) {
    const double frac = std::fmod(cycles_per_sample * static_cast<double>(n), 1.0);
    return std::polar(1.0, 2.0 * kPi * frac);
}

// Reconstruct the tone-frame field and normalize by per-block carrier means.
class CarrierNormalizer {
public:
    explicit CarrierNormalizer(const KkConfig& cfg)
        : block_(cfg.carrier_block), cycles_(cfg.tone_frequency / cfg.adc_rate), steps_(cfg.carrier_block) {
        for (std::size_t i = 0; i < block_; ++i) steps_[i] = tone_rotation(cycles_, i);
    }

    void push(std::span<const double> amp, std::span<const double> phase) {
        for (std::size_t i = 0; i < amp.size(); ++i) pending_.push_back(std::polar(amp[i], -phase[i]));
    }

    void drain(CVec& out, bool final) {
        std::size_t pos = 0;
        while (pending_.size() - pos >= block_ || (final && pos < pending_.size())) {
            const std::size_t len = std::min(block_, pending_.size() - pos);
            cplx sum = 0.0;
            for (std::size_t i = 0; i < len; ++i) sum += pending_[pos + i];
            const cplx carrier = sum / static_cast<double>(len);
            if (std::abs(carrier) == 0.0) throw Error("carrier estimate is zero; no carrier present");
            const cplx inv = 1.0 / carrier;
            const cplx start = tone_rotation(cycles_, index_);
            for (std::size_t i = 0; i < len; ++i) out.push_back((pending_[pos + i] * inv - 1.0) * (start * steps_[i]));
            pos += len;
            index_ += len;
        }
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
    }

private:
    std::size_t block_;
    double cycles_;
    CVec steps_;
    CVec pending_;
    std::uint64_t index_ = 0;
};

}  // namespace

void KkConfig::validate() const {
    if (fft_size < 4 || (fft_size & (fft_size - 1)) != 0) throw Error("KK fft_size must be a power of two");
    if (overlap_discard == 0 || 2 * overlap_discard >= fft_size)
        throw Error("KK overlap_discard must satisfy 0 < discard < fft_size/2");
    if (!(adc_rate > 0) || !(baud > 0)) throw Error("KK rates must be positive");
    if (samples_per_symbol() != 4) throw Error("KK receiver expects 4 samples per symbol at the ADC");
    if (!(tone_frequency > 0) || tone_frequency >= adc_rate / 2) throw Error("tone frequency outside the ADC band");
    if (carrier_block == 0) throw Error("carrier_block must be positive");
    if (clamp && !(clamp_floor > 0)) throw Error("clamp_floor must be positive");
}

int KkConfig::samples_per_symbol() const {
    const double r = adc_rate / baud;
    const long v = std::lround(r);
    if (std::abs(r - static_cast<double>(v)) > 1e-9) return -1;
    return static_cast<int>(v);
}

KkFrontend kk_frontend(const SampleBuffer& adc, const KkConfig& cfg) {
    adc.validate();
    if (!adc.is_real()) throw Error("KK front end needs a real ADC buffer");
    KkFrontend fe;
    const std::size_t n = adc.size();
    fe.amplitude.resize(n);
    fe.log_amplitude.resize(n);
    const double floor = cfg.clamp_floor * std::max(cfg.dc_offset, std::numeric_limits<double>::min());
    double lowest = std::numeric_limits<double>::infinity();
    bool bad = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double code = adc.samples[i].real();
        double v = code + cfg.dc_offset;
        if (!(v > 0.0)) {
            if (!cfg.clamp) {
                bad = true;
                lowest = std::min(lowest, code);
                continue;
            }
            v = floor;
            ++fe.clamped;
        }
        fe.amplitude[i] = std::sqrt(v);
        fe.log_amplitude[i] = 0.5 * std::log(v);
    }
    if (bad) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "KK front end: sample + dc_offset <= 0 (dc_offset " << cfg.dc_offset
            << "); the minimal valid dc offset is any value above " << -lowest;
        throw Error(msg.str());
    }
    return fe;
}

CVec hilbert_response(const KkConfig& cfg) {
    const long half = static_cast<long>(cfg.overlap_discard) - 1;
    RVec taps(static_cast<std::size_t>(2 * half + 1), 0.0);
    const double i0b = std::cyl_bessel_i(0.0, cfg.kaiser_beta);
    for (long k = -half; k <= half; ++k) {
        if (k % 2 == 0) continue;
        const double r = static_cast<double>(k) / static_cast<double>(half);
        const double w = std::cyl_bessel_i(0.0, cfg.kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        taps[static_cast<std::size_t>(k + half)] = 2.0 / (kPi * static_cast<double>(k)) * w;
    }
    return centered_response(taps, cfg.fft_size);
}

RVec hilbert_phase(const RVec& log_amplitude, const KkConfig& cfg) {
    cfg.validate();
    RealOverlapSaveFilter f(cfg.fft_size, cfg.overlap_discard, hilbert_response(cfg));
    RVec out;
    out.reserve(log_amplitude.size());
    f.push(log_amplitude, out);
    f.finish(out);
    return out;
}

SampleBuffer reconstruct_and_downconvert(const RVec& amplitude, const RVec& phase, const KkConfig& cfg) {
    cfg.validate();
    if (amplitude.size() != phase.size()) throw Error("amplitude and phase lengths differ");
    CarrierNormalizer norm(cfg);
    norm.push(amplitude, phase);
    SampleBuffer out;
    out.samples.reserve(amplitude.size());
    norm.drain(out.samples, true);
    out.rate = cfg.adc_rate;
    out.domain = Domain::BasebandComplex;
    return out;
}

void StaticEqualizer::validate() const {
    if (taps.size() != kStaticTaps) throw Error("static equalizer must have 203 taps");
    for (const auto& t : taps)
        if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) throw Error("static equalizer has non-finite taps");
}

CVec StaticEqualizer::response(std::size_t n) const {
    validate();
    CVec h(n, cplx{});
    const long half = static_cast<long>(kStaticTaps / 2);
    for (long j = 0; j < static_cast<long>(kStaticTaps); ++j) {
        const long k = j - half;
        h[static_cast<std::size_t>(((k % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n))] +=
            taps[static_cast<std::size_t>(j)];
    }
    return fft(h);
}

StaticEqualizer StaticEqualizer::identity() {
    StaticEqualizer eq;
    eq.taps.assign(kStaticTaps, cplx{});
    eq.taps[kStaticTaps / 2] = 1.0;
    eq.trained = true;
    return eq;
}

StaticEqualizer train_static_eq(const SampleBuffer& rx, const CVec& known, const StaticEqConfig& cfg) {
    rx.validate();
    if (known.empty()) throw Error("static equalizer training needs known symbols");
    const std::size_t period = 4 * known.size();
    const std::size_t n = rx.size();
    if (n < 4 * kStaticTaps) throw Error("training capture too short");
    const CVec ref = rc_reference(known, 4, cfg.rolloff, cfg.rrc_span);

    // Alignment: circular cross-correlation of the capture start with the
    // periodic reference.
    const std::size_t seg = std::min(n, period);
    CVec X(period, cplx{});
    std::copy(rx.samples.begin(), rx.samples.begin() + static_cast<std::ptrdiff_t>(seg), X.begin());
    X = fft(X);
    const CVec R = fft(ref);
    for (std::size_t k = 0; k < period; ++k) X[k] *= std::conj(R[k]);
    const CVec corr = ifft(X);
    std::size_t tau = 0;
    for (std::size_t k = 1; k < period; ++k)
        if (std::abs(corr[k]) > std::abs(corr[tau])) tau = k;
    double ex = 0.0, er = 0.0;
    for (std::size_t m = 0; m < seg; ++m) {
        ex += std::norm(rx.samples[m]);
        er += std::norm(ref[(m + period - tau) % period]);
    }
    const double peak = (ex > 0 && er > 0) ? std::abs(corr[tau]) / std::sqrt(ex * er) : 0.0;
    if (!(peak >= cfg.sync_threshold)) {
        std::ostringstream msg;
        msg << "static equalizer training: synchronization failure (correlation peak " << peak << " below "
            << cfg.sync_threshold << ")";
        throw Error(msg.str());
    }
    const long long timing =
        (static_cast<long long>(std::llround(static_cast<double>(tau) / 4.0)) * 4) % static_cast<long long>(period);

    // Least squares by the autocorrelation method over the guarded segment.
    std::size_t guard = cfg.edge_guard;
    if (n <= 2 * guard + 4 * kStaticTaps) guard = 0;
    const std::size_t len = n - 2 * guard;
    const std::size_t nfft = len + 2 * kStaticTaps;
    CVec xs(nfft, cplx{}), ds(nfft, cplx{});
    for (std::size_t i = 0; i < len; ++i) {
        const std::size_t m = guard + i;
        xs[i] = rx.samples[m];
        const long long idx = (static_cast<long long>(m) - timing) % static_cast<long long>(period);
        ds[i] = ref[static_cast<std::size_t>(idx < 0 ? idx + static_cast<long long>(period) : idx)];
    }
    CVec XS = fft(xs), DS = fft(ds);
    CVec auto_spec(nfft), cross_spec(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        auto_spec[k] = std::conj(XS[k]) * XS[k];
        cross_spec[k] = std::conj(XS[k]) * DS[k];
    }
    // ifft(conj(X) Y)[l] = sum_i conj(x[i]) y[i + l] / nfft; the common scale cancels.
    const CVec racf = ifft(auto_spec);
    const CVec xc = ifft(cross_spec);
    const long half = static_cast<long>(kStaticTaps / 2);
    auto lag = [&](const CVec& v, long l) { return v[static_cast<std::size_t>((l + static_cast<long>(nfft)) % static_cast<long>(nfft))]; };

    const int t = static_cast<int>(kStaticTaps);
    Eigen::MatrixXcd A(t, t);
    Eigen::VectorXcd b(t);
    for (int a = 0; a < t; ++a) {
        for (int c = 0; c < t; ++c) A(a, c) = lag(racf, static_cast<long>(a - c));
        b(a) = lag(xc, static_cast<long>(a) - half);
    }
    const double trace = A.trace().real();
    if (!(trace > 0)) throw Error("static equalizer training: capture has no energy");
    for (int a = 0; a < t; ++a) A(a, a) += cfg.ridge * trace;
    const Eigen::VectorXcd h = A.ldlt().solve(b);

    StaticEqualizer eq;
    eq.taps.resize(kStaticTaps);
    for (int a = 0; a < t; ++a) eq.taps[static_cast<std::size_t>(a)] = h(a);
    eq.trained = true;
    eq.timing = timing;
    eq.period = known.size();
    eq.correlation = peak;
    eq.validate();
    return eq;
}

SampleBuffer apply_static_eq_and_resample(const SampleBuffer& rx, const StaticEqualizer& eq) {
    if (!eq.trained) throw Error("static equalizer is not trained");
    rx.validate();
    OverlapSaveFilter f(kStaticBlock, kStaticMargin, eq.response(kStaticBlock), 2);
    SampleBuffer out;
    out.samples.reserve(rx.size() / 2 + 1);
    f.push(rx.samples, out.samples);
    f.finish(out.samples);
    out.rate = rx.rate / 2.0;
    out.domain = Domain::BasebandComplex;
    return out;
}

void AdaptiveEqualizer::validate() const {
    if (!(step_size >= 0) || !std::isfinite(step_size)) throw Error("DDLMS step size must be non-negative");
    if (divergence_window == 0) throw Error("divergence window must be positive");
}

AdaptiveEqualizer AdaptiveEqualizer::center_spike(double mu) {
    AdaptiveEqualizer a;
    a.step_size = mu;
    a.w[1] = 1.0;
    return a;
}

DdlmsOutput ddlms(std::span<const cplx> rx, const Constellation& c, AdaptiveEqualizer& st,
                  std::span<const cplx> known, long long known_offset) {
    st.validate();
    DdlmsOutput out;
    out.symbols.reserve(rx.size() / 2 + 1);
    out.decisions.reserve(rx.size() / 2 + 1);
    const auto& pts = c.points();
    const long long period = static_cast<long long>(known.size());
    for (const cplx x : rx) {
        st.line[3] = st.line[2];
        st.line[2] = st.line[1];
        st.line[1] = st.line[0];
        st.line[0] = x;
        const std::uint64_t n = st.samples_seen++;
        if (n % 2 == 0) continue;
        cplx y = 0.0;
        for (int k = 0; k < 4; ++k) y += st.w[k] * st.line[k] + st.g[k] * std::conj(st.line[k]);
        const std::uint32_t idx = demap_hard(y, c).index;
        cplx d = pts[idx];
        if (st.mode == DdlmsMode::Training) {
            if (period > 0 && st.symbols_out < st.training_symbols) {
                long long q = (static_cast<long long>(st.symbols_out) + known_offset) % period;
                if (q < 0) q += period;
                d = known[static_cast<std::size_t>(q)];
            } else {
                st.mode = DdlmsMode::DecisionDirected;
            }
        }
        const cplx e = d - y;
        const cplx mu_e = st.step_size * e;
        for (int k = 0; k < 4; ++k) {
            st.w[k] += mu_e * std::conj(st.line[k]);
            if (st.widely_linear) st.g[k] += mu_e * st.line[k];
        }
        st.window_error += std::norm(e);
        if (++st.window_count == st.divergence_window) {
            if (st.window_error / static_cast<double>(st.window_count) > st.divergence_threshold) ++st.diverged_windows;
            st.window_error = 0.0;
            st.window_count = 0;
        }
        ++st.symbols_out;
        out.symbols.push_back(y);
        out.decisions.push_back(idx);
    }
    return out;
}

StageTimes& StageTimes::operator+=(const StageTimes& o) {
    frontend += o.frontend;
    hilbert += o.hilbert;
    reconstruct += o.reconstruct;
    static_eq += o.static_eq;
    ddlms += o.ddlms;
    demap += o.demap;
    return *this;
}

struct Receiver::Streams {
    Streams(const KkConfig& cfg, const StaticEqualizer& eq)
        : hilbert(cfg.fft_size, cfg.overlap_discard, hilbert_response(cfg)),
          carrier(cfg),
          equalizer(kStaticBlock, kStaticMargin, eq.response(kStaticBlock), 2) {}

    RealOverlapSaveFilter hilbert;
    CarrierNormalizer carrier;
    OverlapSaveFilter equalizer;
    RVec amp;
    std::size_t amp_head = 0;
};

Receiver::Receiver(const KkConfig& cfg, Constellation c, EqualizerState state, CVec training)
    : cfg_(cfg), c_(std::move(c)), state_(std::move(state)), training_(std::move(training)) {
    cfg_.validate();
    if (!state_.static_eq.trained) throw Error("receiver needs a trained static equalizer");
    state_.adaptive.validate();
    s_ = std::make_unique<Streams>(cfg_, state_.static_eq);
}

Receiver::~Receiver() = default;
Receiver::Receiver(Receiver&&) noexcept = default;

ReceiveResult Receiver::process(const SampleBuffer& adc) {
    if (finished_) throw Error("receiver stream already finished");
    auto t0 = Clock::now();
    KkFrontend fe = kk_frontend(adc, cfg_);
    times_.frontend += seconds_since(t0);
    if (s_->amp_head > 0 && s_->amp_head * 2 > s_->amp.size()) {
        s_->amp.erase(s_->amp.begin(), s_->amp.begin() + static_cast<std::ptrdiff_t>(s_->amp_head));
        s_->amp_head = 0;
    }
    s_->amp.insert(s_->amp.end(), fe.amplitude.begin(), fe.amplitude.end());
    ReceiveResult r = run(&fe.log_amplitude, false);
    r.clamped = fe.clamped;
    return r;
}

ReceiveResult Receiver::finish() {
    if (finished_) return {};
    ReceiveResult r = run(nullptr, true);
    finished_ = true;
    return r;
}

ReceiveResult Receiver::run(const RVec* log_amp, bool final) {
    auto t0 = Clock::now();
    RVec phase;
    if (log_amp) s_->hilbert.push(*log_amp, phase);
    if (final) s_->hilbert.finish(phase);
    times_.hilbert += seconds_since(t0);

    t0 = Clock::now();
    s_->carrier.push(std::span<const double>(s_->amp.data() + s_->amp_head, phase.size()), phase);
    s_->amp_head += phase.size();
    CVec base;
    s_->carrier.drain(base, final);
    times_.reconstruct += seconds_since(t0);

    t0 = Clock::now();
    CVec two_sps;
    s_->equalizer.push(base, two_sps);
    if (final) s_->equalizer.finish(two_sps);
    times_.static_eq += seconds_since(t0);

    t0 = Clock::now();
    const std::size_t diverged_before = state_.adaptive.diverged_windows;
    const long long offset = -state_.static_eq.timing / 4;
    DdlmsOutput eq = ddlms(two_sps, c_, state_.adaptive, training_, offset);
    times_.ddlms += seconds_since(t0);

    t0 = Clock::now();
    ReceiveResult r;
    r.first_symbol = symbols_emitted_;
    r.bits.reserve(eq.decisions.size() * c_.bits_per_symbol());
    for (const auto idx : eq.decisions) append_label_bits(c_.labels()[idx], c_.bits_per_symbol(), r.bits);
    symbols_emitted_ += eq.decisions.size();
    r.decisions = std::move(eq.decisions);
    r.symbols = std::move(eq.symbols);
    r.diverged = state_.adaptive.diverged_windows > diverged_before;
    times_.demap += seconds_since(t0);
    return r;
}

ReceiveResult receive(const SampleBuffer& adc, const KkConfig& cfg, const Constellation& c, EqualizerState& state,
                      const CVec& training) {
    Receiver rx(cfg, c, state, training);
    ReceiveResult a = rx.process(adc);
    ReceiveResult b = rx.finish();
    a.bits.insert(a.bits.end(), b.bits.begin(), b.bits.end());
    a.decisions.insert(a.decisions.end(), b.decisions.begin(), b.decisions.end());
    a.symbols.insert(a.symbols.end(), b.symbols.begin(), b.symbols.end());
    a.diverged = a.diverged || b.diverged;
    state = rx.state();
    return a;
}

}  // namespace kkrx
