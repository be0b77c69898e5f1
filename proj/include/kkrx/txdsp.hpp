#pragma once

#include <cstdint>
#include <vector>

#include "kkrx/constellation.hpp"
#include "kkrx/types.hpp"

namespace kkrx {

struct TxConfig {
    double baud = 1e9;
    double rolloff = 0.01;
    double dac_rate = 12e9;
    double tone_frequency = 0.516e9;
    double cspr_db = 12.0;
    std::size_t sequence_length = std::size_t{1} << 20;
    std::uint64_t seed = 1;
    int dac_bits = 8;  // 0 = ideal
    int rrc_span = 256;

    void validate() const;
    int samples_per_symbol() const;
    // Single-sided occupied bandwidth baud*(1+rolloff)/2.
    double band_edge() const { return baud * (1.0 + rolloff) / 2.0; }
    // Tone frequency rounded to an integer number of cycles per sequence period.
    double effective_tone_frequency() const;
};

// n uniformly drawn point indices from a PCG64 stream.
std::vector<std::uint32_t> gen_symbols(const Constellation& c, std::size_t n, std::uint64_t seed);
CVec symbol_points(const std::vector<std::uint32_t>& indices, const Constellation& c);
Bits symbol_bits(const std::vector<std::uint32_t>& indices, const Constellation& c);

// Closed-form root-raised-cosine taps spanning `span` symbols (span*sps + 1
// taps), normalized to unit energy.
RVec rrc_taps(double rolloff, int sps, int span);

// Frequency response on an n-point grid of the centered FIR `taps`, treated
// as a circular filter (taps longer than n wrap around).
CVec centered_response(const RVec& taps, std::size_t n);

// Periodic RRC pulse shaping at the DAC rate; unit mean power for unit-power
// symbols.
SampleBuffer rrc_shape(const CVec& symbols, const TxConfig& cfg);

// Periodic raised-cosine (RRC*RRC) waveform at `sps`; equals the symbols at
// multiples of sps. Used as the receiver's training reference.
CVec rc_reference(const CVec& symbols, int sps, double rolloff, int span);

// s(t) + A exp(i 2 pi f_tone t) with A^2 = P_signal * 10^(cspr/10).
SampleBuffer insert_carrier(const SampleBuffer& signal, const TxConfig& cfg);

// Uniform quantizer on I and Q with full scale at the buffer's largest
// component magnitude.
void dac_quantize(CVec& samples, int bits);

// Fraction of samples whose signal envelope exceeds the carrier amplitude
// (the trajectory can then wind around the origin).
double check_minimum_phase(const SampleBuffer& buffer, double tone_frequency);

struct TxWaveform {
    std::vector<std::uint32_t> indices;
    SampleBuffer field;  // one period at the DAC rate
    double signal_power = 0.0;
    double carrier_amplitude = 0.0;
};

TxWaveform transmit(const Constellation& c, const TxConfig& cfg);

}  // namespace kkrx
