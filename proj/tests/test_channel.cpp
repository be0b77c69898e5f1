#include <doctest.h>

#include <cmath>
#include <random>

#include "kkrx/channel.hpp"
#include "kkrx/fft.hpp"

using namespace kkrx;

namespace {
SampleBuffer tone(std::size_t n, double rate, double f, double amp = 1.0) {
    SampleBuffer b;
    b.rate = rate;
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.samples[i] = std::polar(amp, 2 * kPi * f * double(i) / rate);
    return b;
}
SampleBuffer random_field(std::size_t n, double rate, unsigned seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> nd;
    SampleBuffer b;
    b.rate = rate;
    b.samples.resize(n);
    for (auto& v : b.samples) v = cplx(nd(g), nd(g)) / std::sqrt(2.0);
    return b;
}
}  // namespace

TEST_CASE("noise model scales with OSNR") {
    const auto m = noise_model(2.0, 10.0, 12.5e9);
    CHECK(m.ase_psd == doctest::Approx(2.0 * 0.1 / 12.5e9));
    CHECK(noise_model(2.0, kInfinity, 12.5e9).ase_psd == 0.0);
}

TEST_CASE("ASE loading hits the requested OSNR") {
    const SampleBuffer s = tone(1 << 17, 12e9, 0.5e9);
    for (double osnr = 5; osnr <= 35; osnr += 5) {
        ChannelConfig cfg;
        cfg.osnr_db = osnr;
        const auto noisy = load_noise(s, cfg, 11);
        CHECK(std::abs(measure_osnr(s, noisy, cfg.reference_bandwidth) - osnr) < 0.1);
    }
    ChannelConfig inf;
    const auto same = load_noise(s, inf, 11);
    CHECK(same.samples == s.samples);
    ChannelConfig cfg;
    cfg.osnr_db = 10;
    CHECK(load_noise(s, cfg, 3).samples == load_noise(s, cfg, 3).samples);
    CHECK(load_noise(s, cfg, 3).samples != load_noise(s, cfg, 4).samples);
}

TEST_CASE("noise is white and circular") {
    SampleBuffer zero;
    zero.rate = 12e9;
    zero.samples.assign(1 << 16, cplx(1.0, 0.0));
    ChannelConfig cfg;
    cfg.osnr_db = 0;
    auto n = load_noise(zero, cfg, 5);
    double re = 0, im = 0, cross = 0;
    for (auto& v : n.samples) {
        const cplx d = v - 1.0;
        re += d.real() * d.real();
        im += d.imag() * d.imag();
        cross += d.real() * d.imag();
    }
    const double var = 12e9 / 12.5e9;
    const double N = double(n.size());
    CHECK(re / N == doctest::Approx(var / 2).epsilon(0.03));
    CHECK(im / N == doctest::Approx(var / 2).epsilon(0.03));
    CHECK(std::abs(cross / N) < 0.02 * var);
}

TEST_CASE("optical BPF shape") {
    const double bw = 5e9;
    CHECK(bpf_response(0, 0, bw) == 1.0);
    CHECK(bpf_response(2.2e9, 0, bw) == 1.0);
    CHECK(bpf_response(2.5e9, 0, bw) == doctest::Approx(0.5));
    CHECK(bpf_response(-2.5e9, 0, bw) == doctest::Approx(0.5));
    CHECK(bpf_response(2.76e9, 0, bw) == 0.0);
    CHECK(bpf_response(1e9 + 2.2e9, 1e9, bw) == 1.0);

    ChannelConfig cfg;
    const auto in_band = optical_bpf(tone(4096, 12e9, 1.5e9), cfg);
    CHECK(mean_power(in_band.samples) == doctest::Approx(1.0).epsilon(1e-9));
    const auto out_band = optical_bpf(tone(4096, 12e9, 1400 * 12e9 / 4096), cfg);
    CHECK(lin_to_db(mean_power(out_band.samples)) < -60);

    const auto white = random_field(1 << 16, 12e9, 2);
    const double ratio = mean_power(optical_bpf(white, cfg).samples) / mean_power(white.samples);
    CHECK(ratio == doctest::Approx(bw / 12e9).epsilon(0.03));
}

TEST_CASE("photodiode detects intensity") {
    ChannelConfig ideal;
    ideal.pd_bandwidth = kInfinity;
    SampleBuffer c;
    c.rate = 12e9;
    c.samples.assign(1024, cplx(0.6, 0.8) * 2.0);
    const auto i = photodiode(c, ideal);
    CHECK(i.domain == Domain::Intensity);
    for (auto v : i.samples) CHECK(v.real() == doctest::Approx(4.0));

    ChannelConfig cfg;
    const auto ic = photodiode(c, cfg);
    for (auto v : ic.samples) CHECK(v.real() == doctest::Approx(4.0).epsilon(1e-9));

    // Two tones beat at their difference frequency.
    auto two = tone(12000, 12e9, 0.0, 1.0);
    const auto b = tone(12000, 12e9, 1e9, 0.5);
    for (std::size_t k = 0; k < two.size(); ++k) two.samples[k] += b.samples[k];
    const auto beat = photodiode(two, ideal);
    for (std::size_t k = 0; k < 120; ++k) {
        const double expect = 1.25 + std::cos(2 * kPi * 1e9 * double(k) / 12e9);
        CHECK(beat.samples[k].real() == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK_THROWS_AS(photodiode(beat, ideal), Error);
}

TEST_CASE("Bessel response") {
    CHECK(std::abs(bessel4_response(0, 1e9)) == doctest::Approx(1.0));
    CHECK(std::abs(bessel4_response(1e9, 1e9)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    CHECK(std::abs(bessel4_response(3e9, 1e9)) < 0.2);
    CHECK(bessel4_response(5e9, kInfinity) == cplx(1.0));
}

TEST_CASE("ADC conversion") {
    ChannelConfig cfg;
    SampleBuffer dc = SampleBuffer::from_real(RVec(12000, 3.0), 12e9, Domain::Intensity);
    const auto r = adc_convert(dc, cfg);
    CHECK(r.codes.size() == 4000);
    CHECK(r.codes.rate == 4e9);
    CHECK(r.removed_mean == doctest::Approx(3.0));
    for (auto v : r.codes.samples) CHECK(v.real() == 0.0);

    // Full-scale sine lands on +/-2047.
    RVec s(12000);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = 2.0 + std::sin(2 * kPi * 0.1e9 * double(k) / 12e9 + 0.3);
    const auto q = adc_convert(SampleBuffer::from_real(s, 12e9, Domain::Intensity), cfg);
    double top = 0;
    for (auto v : q.codes.samples) {
        top = std::max(top, std::abs(v.real()));
        CHECK(v.real() == std::round(v.real()));
    }
    CHECK(top == 2047.0);
    CHECK(q.clipped == 0);
    const auto clip = adc_convert(SampleBuffer::from_real(s, 12e9, Domain::Intensity), cfg, 0.5);
    CHECK(clip.clipped > 0);

    ChannelConfig bypass;
    bypass.adc_bits = 0;
    bypass.adc_bandwidth = kInfinity;
    const auto f = adc_convert(SampleBuffer::from_real(s, 12e9, Domain::Intensity), bypass);
    for (std::size_t k = 0; k < 50; ++k)
        CHECK(f.codes.samples[k].real() ==
              doctest::Approx(std::sin(2 * kPi * 0.1e9 * double(3 * k) / 12e9 + 0.3)).epsilon(1e-9));
}

TEST_CASE("dispersion") {
    ChannelConfig cfg;
    const auto x = random_field(8192, 12e9, 4);
    CHECK(dispersion_apply(x, cfg).samples == x.samples);
    cfg.dispersion_ps_nm = 170;
    const auto y = dispersion_apply(x, cfg);
    CHECK(mean_power(y.samples) == doctest::Approx(mean_power(x.samples)).epsilon(1e-12));
    cfg.dispersion_ps_nm = -170;
    const auto back = dispersion_apply(y, cfg);
    double err = 0;
    for (std::size_t k = 0; k < x.size(); ++k) err = std::max(err, std::abs(back.samples[k] - x.samples[k]));
    CHECK(err < 1e-12);

    // D * lambda^2 / c * delta_f worth of delay between two frequencies.
    const double lam = cfg.wavelength;
    const double dtau = dispersion_group_delay(1e9, 170, lam) - dispersion_group_delay(0, 170, lam);
    CHECK(std::abs(dtau) == doctest::Approx(170e-3 * lam * lam / kSpeedOfLight * 1e9).epsilon(1e-9));
    // Numerical derivative of the phase.
    const double h = 1e3;
    const double dphi = std::arg(dispersion_response(1e9 + h, 170, lam) / dispersion_response(1e9 - h, 170, lam));
    CHECK(-dphi / (2 * kPi * 2 * h) == doctest::Approx(-dispersion_group_delay(1e9, 170, lam)).epsilon(1e-5));
}

TEST_CASE("periodic resampling") {
    const auto x = tone(1200, 12e9, 0.5e9);
    const CVec y = resample_periodic(x.samples, 12e9, 4e9);
    CHECK(y.size() == 400);
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(y[k] - x.samples[3 * k]) < 1e-9);
    CHECK_THROWS_AS(resample_periodic(CVec(1001), 12e9, 4e9), Error);
}
