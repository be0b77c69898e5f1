#include "kkrx/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace kkrx {

namespace {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <typename T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
    v = to_little(v);
    return true;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    return f;
}

}  // namespace

void write_waveform(std::ostream& out, const SampleBuffer& buffer) {
    buffer.validate();
    const nlohmann::json header{{"rate", buffer.rate},
                                {"domain", to_string(buffer.domain)},
                                {"samples", buffer.size()},
                                {"format", "f32le-iq"}};
    out << header.dump() << '\n';
    for (const auto& v : buffer.samples) {
        put(out, static_cast<float>(v.real()));
        put(out, static_cast<float>(v.imag()));
    }
    if (!out) throw Error("waveform write failed");
}

SampleBuffer read_waveform(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("waveform dump: missing header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("waveform dump: bad header: ") + e.what());
    }
    if (!h.contains("rate") || !h.contains("domain") || !h.contains("samples"))
        throw Error("waveform dump: header lacks rate, domain or samples");
    if (h.value("format", "f32le-iq") != "f32le-iq") throw Error("waveform dump: unsupported sample format");
    SampleBuffer b;
    b.rate = h["rate"].get<double>();
    b.domain = domain_from_string(h["domain"].get<std::string>());
    const auto n = h["samples"].get<std::size_t>();
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        float re, im;
        if (!get(in, re) || !get(in, im)) throw Error("waveform dump: truncated data");
        b.samples[i] = cplx(re, im);
    }
    b.validate();
    return b;
}

void save_waveform(const std::string& path, const SampleBuffer& buffer) {
    auto f = open_out(path);
    write_waveform(f, buffer);
}

SampleBuffer load_waveform(const std::string& path) {
    auto f = open_in(path);
    return read_waveform(f);
}

void save_adc_codes(const std::string& path, const SampleBuffer& codes) {
    if (!codes.is_real()) throw Error("ADC dump needs real codes");
    auto f = open_out(path);
    for (const auto& v : codes.samples) {
        const double c = std::round(v.real());
        if (c < std::numeric_limits<std::int16_t>::min() || c > std::numeric_limits<std::int16_t>::max())
            throw Error("ADC code outside the int16 range");
        put(f, static_cast<std::int16_t>(c));
    }
    if (!f) throw Error("ADC dump write failed");
}

SampleBuffer load_adc_codes(const std::string& path, double rate) {
    auto f = open_in(path);
    SampleBuffer b;
    b.rate = rate;
    b.domain = Domain::Intensity;
    std::int16_t c;
    while (get(f, c)) b.samples.emplace_back(static_cast<double>(c), 0.0);
    b.validate();
    return b;
}

void save_decisions(const std::string& path, const std::vector<std::uint32_t>& decisions) {
    auto f = open_out(path);
    for (auto d : decisions) put(f, d);
    if (!f) throw Error("decision dump write failed");
}

}  // namespace kkrx
