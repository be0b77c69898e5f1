#include "kkrx/rng.hpp"

#include <cmath>

namespace kkrx {

namespace {
constexpr Pcg64::u128 kMultiplier =
    (static_cast<Pcg64::u128>(0x2360ed051fc65da4ULL) << 64) | 0x4385df649fccf645ULL;
}

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t x = base ^ (index * 0xd1b54a32d192ed03ULL);
    splitmix64(x);
    return splitmix64(x);
}

Pcg64::Pcg64(std::uint64_t seed) {
    std::uint64_t x = seed;
    const u128 s_hi = splitmix64(x), s_lo = splitmix64(x);
    const u128 i_hi = splitmix64(x), i_lo = splitmix64(x);
    state_ = (s_hi << 64) | s_lo;
    inc_ = ((i_hi << 64) | i_lo) | 1u;
}

Pcg64::Pcg64(u128 state, u128 increment) : state_(state), inc_(increment | 1u) {}

std::uint64_t Pcg64::next_u64() {
    state_ = state_ * kMultiplier + inc_;
    const auto hi = static_cast<std::uint64_t>(state_ >> 64);
    const auto lo = static_cast<std::uint64_t>(state_);
    const std::uint64_t x = hi ^ lo;
    const unsigned rot = static_cast<unsigned>(state_ >> 122);
    return (x >> rot) | (x << ((64u - rot) & 63u));
}

std::uint64_t Pcg64::next_bits(unsigned bits) {
    if (bits == 0) return 0;
    return next_u64() >> (64u - bits);
}

double Pcg64::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Pcg64::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

cplx Pcg64::complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
}

}  // namespace kkrx
