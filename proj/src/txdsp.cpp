#include "kkrx/txdsp.hpp"

#include <algorithm>
#include <cmath>

#include "kkrx/fft.hpp"
#include "kkrx/rng.hpp"

namespace kkrx {

void TxConfig::validate() const {
    if (!(baud > 0.0) || !(dac_rate > 0.0)) throw Error("baud and DAC rate must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw Error("rolloff must be in [0, 1]");
    if (sequence_length < 1) throw Error("sequence length must be >= 1");
    if (!(tone_frequency > band_edge()))
        throw Error("tone frequency must lie above the signal band edge");
    if (dac_rate < 2.0 * tone_frequency) throw Error("DAC rate must be at least twice the tone frequency");
    const double ratio = dac_rate / baud;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw Error("DAC rate must be an integer multiple of the baud rate");
    if (dac_bits < 0 || dac_bits > 16) throw Error("DAC bits must be in [0, 16]");
    if (rrc_span < 2 || rrc_span % 2 != 0) throw Error("RRC span must be an even number of symbols");
    if (!std::isfinite(cspr_db)) throw Error("CSPR must be finite");
}

int TxConfig::samples_per_symbol() const {
    return static_cast<int>(std::lround(dac_rate / baud));
}

double TxConfig::effective_tone_frequency() const {
    const double period = static_cast<double>(sequence_length) / baud;
    return std::round(tone_frequency * period) / period;
}

std::vector<std::uint32_t> gen_symbols(const Constellation& c, std::size_t n, std::uint64_t seed) {
    Pcg64 rng(seed);
    std::vector<std::uint32_t> out(n);
    for (auto& v : out) v = static_cast<std::uint32_t>(rng.next_bits(c.bits_per_symbol()));
    return out;
}

CVec symbol_points(const std::vector<std::uint32_t>& indices, const Constellation& c) {
    CVec out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = c.points()[indices[i]];
    return out;
}

Bits symbol_bits(const std::vector<std::uint32_t>& indices, const Constellation& c) {
    Bits out;
    out.reserve(indices.size() * c.bits_per_symbol());
    for (auto i : indices) append_label_bits(c.labels()[i], c.bits_per_symbol(), out);
    return out;
}

RVec rrc_taps(double rolloff, int sps, int span) {
    const int half = span * sps / 2;
    RVec h(2 * half + 1);
    const double b = rolloff;
    for (int n = -half; n <= half; ++n) {
        const double t = static_cast<double>(n) / sps;
        double v;
        if (n == 0) {
            v = 1.0 - b + 4.0 * b / kPi;
        } else if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
            v = b / std::sqrt(2.0) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double x = 4.0 * b * t;
            v = (std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b))) /
                (kPi * t * (1.0 - x * x));
        }
        h[n + half] = v;
    }
    double e = 0.0;
    for (double v : h) e += v * v;
    const double s = 1.0 / std::sqrt(e);
    for (double& v : h) v *= s;
    return h;
}

CVec centered_response(const RVec& taps, std::size_t n) {
    // Taps longer than the transform are folded (circular aliasing).
    const std::size_t half = taps.size() / 2;
    const std::size_t offset = n * (half / n + 1) - half;
    CVec x(n, 0.0);
    for (std::size_t k = 0; k < taps.size(); ++k) x[(k + offset) % n] += taps[k];
    return fft(x);
}

namespace {
CVec upsample(const CVec& symbols, int sps) {
    CVec up(symbols.size() * static_cast<std::size_t>(sps), 0.0);
    for (std::size_t i = 0; i < symbols.size(); ++i) up[i * sps] = symbols[i];
    return up;
}

CVec periodic_filter(const CVec& x, const RVec& taps, int times) {
    CVec X = fft(x);
    const CVec H = centered_response(taps, x.size());
    for (std::size_t k = 0; k < X.size(); ++k)
        for (int t = 0; t < times; ++t) X[k] *= H[k];
    return ifft(X);
}
}  // namespace

SampleBuffer rrc_shape(const CVec& symbols, const TxConfig& cfg) {
    cfg.validate();
    if (symbols.empty()) throw Error("no symbols to shape");
    const int sps = cfg.samples_per_symbol();
    RVec taps = rrc_taps(cfg.rolloff, sps, cfg.rrc_span);
    const double g = std::sqrt(static_cast<double>(sps));
    for (double& v : taps) v *= g;
    SampleBuffer out;
    out.samples = periodic_filter(upsample(symbols, sps), taps, 1);
    out.rate = cfg.dac_rate;
    out.domain = Domain::BasebandComplex;
    return out;
}

CVec rc_reference(const CVec& symbols, int sps, double rolloff, int span) {
    return periodic_filter(upsample(symbols, sps), rrc_taps(rolloff, sps, span), 2);
}

SampleBuffer insert_carrier(const SampleBuffer& signal, const TxConfig& cfg) {
    cfg.validate();
    signal.validate();
    if (signal.domain != Domain::BasebandComplex) throw Error("carrier insertion needs a baseband-complex signal");
    const std::size_t n = signal.size();
    const double f = cfg.effective_tone_frequency();

    // Remove the signal's component on the tone bin so the two are orthogonal
    // over the period.
    CVec S = fft(signal.samples);
    const double bin = f * static_cast<double>(n) / signal.rate;
    const auto kb = static_cast<long long>(std::llround(bin));
    if (std::abs(bin - static_cast<double>(kb)) < 1e-6) S[static_cast<std::size_t>((kb % static_cast<long long>(n) + n) % n)] = 0.0;
    SampleBuffer out = signal;
    out.samples = ifft(S);

    const double ps = mean_power(out.samples);
    const double a = std::sqrt(ps * db_to_lin(cfg.cspr_db));
    const double w = 2.0 * kPi * f / signal.rate;
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = std::fmod(w * static_cast<double>(i), 2.0 * kPi);
        out.samples[i] += a * cplx(std::cos(ph), std::sin(ph));
    }
    return out;
}

void dac_quantize(CVec& samples, int bits) {
    if (bits <= 0 || samples.empty()) return;
    double fs = 0.0;
    for (const auto& v : samples) fs = std::max({fs, std::abs(v.real()), std::abs(v.imag())});
    if (fs == 0.0) return;
    const double levels = std::ldexp(1.0, bits - 1) - 1.0;
    const double q = fs / levels;
    for (auto& v : samples) v = cplx(std::round(v.real() / q) * q, std::round(v.imag() / q) * q);
}

double check_minimum_phase(const SampleBuffer& buffer, double tone_frequency) {
    buffer.validate();
    const std::size_t n = buffer.size();
    const double w = 2.0 * kPi * tone_frequency / buffer.rate;
    cplx carrier = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        carrier += buffer.samples[i] * std::polar(1.0, -std::fmod(w * static_cast<double>(i), 2.0 * kPi));
    carrier /= static_cast<double>(n);
    const double amp = std::abs(carrier);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx tone = carrier * std::polar(1.0, std::fmod(w * static_cast<double>(i), 2.0 * kPi));
        if (std::abs(buffer.samples[i] - tone) > amp) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(n);
}

TxWaveform transmit(const Constellation& c, const TxConfig& cfg) {
    cfg.validate();
    TxWaveform tx;
    tx.indices = gen_symbols(c, cfg.sequence_length, cfg.seed);
    const SampleBuffer shaped = rrc_shape(symbol_points(tx.indices, c), cfg);
    tx.field = insert_carrier(shaped, cfg);
    tx.signal_power = mean_power(tx.field.samples) / (1.0 + db_to_lin(cfg.cspr_db));
    tx.carrier_amplitude = std::sqrt(tx.signal_power * db_to_lin(cfg.cspr_db));
    dac_quantize(tx.field.samples, cfg.dac_bits);
    return tx;
}

}  // namespace kkrx
