#include "kkrx/types.hpp"

#include <numeric>

namespace kkrx {

std::string to_string(Domain d) {
    switch (d) {
        case Domain::BasebandComplex: return "baseband-complex";
        case Domain::PassbandReal: return "passband-real";
        case Domain::Intensity: return "intensity";
    }
    return "unknown";
}

Domain domain_from_string(const std::string& s) {
    if (s == "baseband-complex") return Domain::BasebandComplex;
    if (s == "passband-real") return Domain::PassbandReal;
    if (s == "intensity") return Domain::Intensity;
    throw Error("unknown sample domain '" + s + "'");
}

RVec SampleBuffer::real_part() const {
    RVec out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].real();
    return out;
}

SampleBuffer SampleBuffer::from_real(const RVec& v, double rate, Domain d) {
    SampleBuffer b;
    b.samples.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) b.samples[i] = cplx(v[i], 0.0);
    b.rate = rate;
    b.domain = d;
    return b;
}

void SampleBuffer::validate() const {
    if (samples.empty()) throw Error("sample buffer is empty");
    if (!(rate > 0.0)) throw Error("sample buffer rate must be positive");
}

double mean_power(const CVec& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

double mean_power(const RVec& x) {
    if (x.empty()) return 0.0;
    double acc = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    return acc / static_cast<double>(x.size());
}

}  // namespace kkrx
