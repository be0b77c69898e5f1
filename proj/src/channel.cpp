#include "kkrx/channel.hpp"

#include <algorithm>
#include <cmath>

#include "kkrx/fft.hpp"
#include "kkrx/rng.hpp"

namespace kkrx {

void ChannelConfig::validate() const {
    if (!(reference_bandwidth > 0.0) || !(bpf_bandwidth > 0.0) || !(pd_bandwidth > 0.0) ||
        !(adc_bandwidth > 0.0) || !(adc_rate > 0.0))
        throw Error("channel bandwidths and ADC rate must be positive");
    if (std::isnan(osnr_db)) throw Error("OSNR must not be NaN");
    if (adc_bits < 0 || adc_bits > 16) throw Error("ADC bits must be in [0, 16]");
    if (!std::isfinite(dispersion_ps_nm)) throw Error("dispersion must be finite");
}

NoiseModel noise_model(double total_power, double osnr_db, double reference_bandwidth) {
    NoiseModel m;
    m.reference_bandwidth = reference_bandwidth;
    m.ase_psd = std::isinf(osnr_db) ? 0.0 : total_power * db_to_lin(-osnr_db) / reference_bandwidth;
    return m;
}

SampleBuffer load_noise(const SampleBuffer& signal, const ChannelConfig& cfg, std::uint64_t seed) {
    signal.validate();
    cfg.validate();
    if (std::isinf(cfg.osnr_db) && cfg.osnr_db > 0) return signal;
    const NoiseModel nm = noise_model(mean_power(signal.samples), cfg.osnr_db, cfg.reference_bandwidth);
    const double variance = nm.ase_psd * signal.rate;
    Pcg64 rng(seed);
    SampleBuffer out = signal;
    for (auto& v : out.samples) v += rng.complex_gaussian(variance);
    return out;
}

double measure_osnr(const SampleBuffer& clean, const SampleBuffer& noisy, double reference_bandwidth) {
    if (clean.size() != noisy.size()) throw Error("OSNR measurement needs equal-length buffers");
    double pn = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) pn += std::norm(noisy.samples[i] - clean.samples[i]);
    pn /= static_cast<double>(clean.size());
    const double in_ref = pn * reference_bandwidth / clean.rate;
    return lin_to_db(mean_power(clean.samples) / in_ref);
}

namespace {

constexpr double kBpfEdge = 0.1;

template <typename Fn>
SampleBuffer apply_response(const SampleBuffer& in, Fn&& response) {
    CVec X = fft(in.samples);
    const std::size_t n = X.size();
    for (std::size_t k = 0; k < n; ++k) X[k] *= response(bin_frequency(k, n, in.rate));
    SampleBuffer out = in;
    out.samples = ifft(X);
    if (in.is_real())
        for (auto& v : out.samples) v = cplx(v.real(), 0.0);
    return out;
}

double bessel_norm_3db() {
    // |H(j w)| = 1/sqrt(2) for H(s) = 105 / (s^4 + 10 s^3 + 45 s^2 + 105 s + 105).
    static const double w3 = [] {
        auto mag2 = [](double w) {
            const cplx s(0.0, w);
            const cplx den = s * s * s * s + 10.0 * s * s * s + 45.0 * s * s + 105.0 * s + 105.0;
            return std::norm(105.0 / den);
        };
        double lo = 0.5, hi = 5.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (mag2(mid) > 0.5 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return w3;
}

}  // namespace

double bpf_response(double f, double center, double bandwidth) {
    const double d = std::abs(f - center);
    const double inner = bandwidth * (1.0 - kBpfEdge) / 2.0;
    const double outer = bandwidth * (1.0 + kBpfEdge) / 2.0;
    if (d <= inner) return 1.0;
    if (d >= outer) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (d - inner) / (outer - inner)));
}

SampleBuffer optical_bpf(const SampleBuffer& signal, const ChannelConfig& cfg) {
    signal.validate();
    return apply_response(signal, [&](double f) {
        return cplx(bpf_response(f, cfg.bpf_center, cfg.bpf_bandwidth), 0.0);
    });
}

namespace {
// beta2 * L in s^2 for accumulated dispersion D (ps/nm).
double beta2_length(double dispersion_ps_nm, double wavelength) {
    const double d_si = dispersion_ps_nm * 1e-3;  // s/m
    return -d_si * wavelength * wavelength / (2.0 * kPi * kSpeedOfLight);
}
}  // namespace

cplx dispersion_response(double f, double dispersion_ps_nm, double wavelength) {
    const double w = 2.0 * kPi * f;
    return std::polar(1.0, 0.5 * beta2_length(dispersion_ps_nm, wavelength) * w * w);
}

double dispersion_group_delay(double f, double dispersion_ps_nm, double wavelength) {
    return beta2_length(dispersion_ps_nm, wavelength) * 2.0 * kPi * f;
}

SampleBuffer dispersion_apply(const SampleBuffer& signal, const ChannelConfig& cfg) {
    signal.validate();
    if (cfg.dispersion_ps_nm == 0.0) return signal;
    return apply_response(signal, [&](double f) {
        return dispersion_response(f, cfg.dispersion_ps_nm, cfg.wavelength);
    });
}

cplx bessel4_response(double f, double bandwidth) {
    if (std::isinf(bandwidth)) return 1.0;
    const cplx s(0.0, bessel_norm_3db() * f / bandwidth);
    const cplx den = s * s * s * s + 10.0 * s * s * s + 45.0 * s * s + 105.0 * s + 105.0;
    return 105.0 / den;
}

SampleBuffer photodiode(const SampleBuffer& signal, const ChannelConfig& cfg) {
    signal.validate();
    if (signal.domain != Domain::BasebandComplex) throw Error("photodiode needs an optical field");
    SampleBuffer out;
    out.rate = signal.rate;
    out.domain = Domain::Intensity;
    out.samples.resize(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) out.samples[i] = std::norm(signal.samples[i]);
    if (!std::isinf(cfg.pd_bandwidth)) {
        out = apply_response(out, [&](double f) { return bessel4_response(f, cfg.pd_bandwidth); });
        for (auto& v : out.samples) v = cplx(std::max(0.0, v.real()), 0.0);
    }
    return out;
}

CVec resample_periodic(const CVec& x, double rate_in, double rate_out) {
    const std::size_t n = x.size();
    const double exact = static_cast<double>(n) * rate_out / rate_in;
    const auto m = static_cast<std::size_t>(std::llround(exact));
    if (m == 0 || std::abs(exact - static_cast<double>(m)) > 1e-6)
        throw Error("resampling ratio does not give an integer output length");
    if (m == n) return x;
    const CVec X = fft(x);
    CVec Y(m, 0.0);
    const std::size_t keep = std::min(n, m);
    // Bins strictly below the smaller Nyquist frequency; the Nyquist bin itself
    // is dropped.
    const std::size_t pos = (keep - 1) / 2;
    for (std::size_t k = 0; k <= pos; ++k) Y[k] = X[k];
    for (std::size_t k = 1; k <= pos; ++k) Y[m - k] = X[n - k];
    CVec y = ifft(Y);
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    for (auto& v : y) v *= scale;
    return y;
}

AdcResult adc_convert(const SampleBuffer& intensity, const ChannelConfig& cfg, double full_scale) {
    intensity.validate();
    cfg.validate();
    SampleBuffer filtered = intensity;
    if (!std::isinf(cfg.adc_bandwidth))
        filtered = apply_response(intensity, [&](double f) { return bessel4_response(f, cfg.adc_bandwidth); });

    RVec v;
    {
        const CVec r = resample_periodic(filtered.samples, intensity.rate, cfg.adc_rate);
        v.resize(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) v[i] = r[i].real();
    }
    AdcResult res;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    res.removed_mean = mean;
    for (double& x : v) x -= mean;

    if (cfg.adc_bits > 0) {
        const double top = std::ldexp(1.0, cfg.adc_bits - 1) - 1.0;
        if (!(full_scale > 0.0)) {
            for (double x : v) full_scale = std::max(full_scale, std::abs(x));
            if (!(full_scale > 0.0)) full_scale = 1.0;
        }
        res.gain = top / full_scale;
        for (double& x : v) {
            double c = std::round(x * res.gain);
            if (c > top || c < -top - 1.0) {
                c = std::clamp(c, -top - 1.0, top);
                ++res.clipped;
            }
            x = c;
        }
    }
    res.codes = SampleBuffer::from_real(v, cfg.adc_rate, Domain::Intensity);
    return res;
}

SampleBuffer adc(const SampleBuffer& intensity, const ChannelConfig& cfg) {
    return adc_convert(intensity, cfg).codes;
}

}  // namespace kkrx
