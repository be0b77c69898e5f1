#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkrx {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

enum class Domain { BasebandComplex, PassbandReal, Intensity };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

// Fixed-length block of samples plus its rate. Real-valued domains keep the
// imaginary part at zero.
struct SampleBuffer {
    CVec samples;
    double rate = 0.0;
    Domain domain = Domain::BasebandComplex;

    std::size_t size() const { return samples.size(); }
    bool is_real() const { return domain != Domain::BasebandComplex; }

    RVec real_part() const;
    static SampleBuffer from_real(const RVec& v, double rate, Domain d);
    void validate() const;
};

double mean_power(const CVec& x);
double mean_power(const RVec& x);

// Thrown for violated preconditions on user-supplied data or configuration.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace kkrx
