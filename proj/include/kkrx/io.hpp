#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kkrx/types.hpp"

namespace kkrx {

// Waveform dump: one JSON header line {"rate","domain","samples","format"}
// followed by little-endian float32 (re, im) pairs.
void write_waveform(std::ostream& out, const SampleBuffer& buffer);
SampleBuffer read_waveform(std::istream& in);
void save_waveform(const std::string& path, const SampleBuffer& buffer);
SampleBuffer load_waveform(const std::string& path);

// Raw ADC dump: little-endian int16 codes, no header.
void save_adc_codes(const std::string& path, const SampleBuffer& codes);
SampleBuffer load_adc_codes(const std::string& path, double rate);

// Decision dump: little-endian uint32 point indices.
void save_decisions(const std::string& path, const std::vector<std::uint32_t>& decisions);

}  // namespace kkrx
