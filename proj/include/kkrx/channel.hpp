#pragma once

#include <cstdint>
#include <limits>

#include "kkrx/types.hpp"

namespace kkrx {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ChannelConfig {
    double osnr_db = kInfinity;           // in reference_bandwidth; inf = no loading
    double reference_bandwidth = 12.5e9;  // 0.1 nm at 1550 nm
    double bpf_bandwidth = 5e9;
    double bpf_center = 0.0;              // relative to the simulation baseband
    double pd_bandwidth = 6.5e9;          // inf = ideal
    double adc_rate = 4e9;
    double adc_bandwidth = 1e9;           // inf = ideal
    int adc_bits = 12;                    // 0 = ideal float output
    double dispersion_ps_nm = 0.0;
    double wavelength = 1550.51e-9;
    std::uint64_t seed = 7;

    void validate() const;
};

struct NoiseModel {
    double ase_psd = 0.0;  // W/Hz in the complex field
    double reference_bandwidth = 12.5e9;
};

NoiseModel noise_model(double total_power, double osnr_db, double reference_bandwidth);

// Adds circularly-symmetric white Gaussian noise whose power in the reference
// bandwidth is P_total * 10^(-osnr/10), P_total measured on the buffer.
SampleBuffer load_noise(const SampleBuffer& signal, const ChannelConfig& cfg, std::uint64_t seed);

// OSNR (dB) of `noisy` given the noiseless `clean`, noise rescaled from the
// simulation bandwidth to the reference bandwidth.
double measure_osnr(const SampleBuffer& clean, const SampleBuffer& noisy, double reference_bandwidth);

// Raised-cosine-edged band-pass: unity within bandwidth*(1-edge)/2 of the
// center, amplitude 1/2 at bandwidth/2, zero beyond bandwidth*(1+edge)/2.
SampleBuffer optical_bpf(const SampleBuffer& signal, const ChannelConfig& cfg);
double bpf_response(double f, double center, double bandwidth);

// All-pass quadratic phase for the configured accumulated dispersion.
SampleBuffer dispersion_apply(const SampleBuffer& signal, const ChannelConfig& cfg);
cplx dispersion_response(double f, double dispersion_ps_nm, double wavelength);
// Group delay (s) of dispersion_response at offset frequency f.
double dispersion_group_delay(double f, double dispersion_ps_nm, double wavelength);

// 4th-order Bessel low-pass response normalized to -3 dB at `bandwidth`.
cplx bessel4_response(double f, double bandwidth);

// Square-law detection followed by the photodiode bandwidth. The photocurrent
// is clipped at zero.
SampleBuffer photodiode(const SampleBuffer& signal, const ChannelConfig& cfg);

// Band-limited spectral resampling of a periodic buffer.
CVec resample_periodic(const CVec& x, double rate_in, double rate_out);

struct AdcResult {
    SampleBuffer codes;        // real, at adc_rate; integer codes unless ideal
    double removed_mean = 0;   // intensity units, lost to AC coupling
    double gain = 1;           // codes per intensity unit
    std::size_t clipped = 0;
};

// Low-pass at adc_bandwidth, resample to adc_rate, AC-couple, scale and
// quantize. full_scale is the intensity excursion mapped to code 2^(b-1)-1;
// zero picks the buffer's own peak excursion.
AdcResult adc_convert(const SampleBuffer& intensity, const ChannelConfig& cfg, double full_scale = 0.0);
SampleBuffer adc(const SampleBuffer& intensity, const ChannelConfig& cfg);

}  // namespace kkrx
