#pragma once

#include <cstdint>

#include "kkrx/types.hpp"

namespace kkrx {

// PCG64 (128-bit LCG state, XSL-RR 64-bit output). Same stream as numpy's
// PCG64 bit generator for an identical (state, increment) pair.
class Pcg64 {
public:
    using u128 = unsigned __int128;

    // Expands a 64-bit seed into state and odd increment with splitmix64.
    explicit Pcg64(std::uint64_t seed);
    Pcg64(u128 state, u128 increment);

    std::uint64_t next_u64();
    // Uniform integer in [0, 2^bits) taken from the top bits of one draw.
    std::uint64_t next_bits(unsigned bits);
    // Uniform double in [0, 1) with 53 random bits.
    double uniform();
    // Standard normal via Box-Muller; pairs are cached.
    double gaussian();
    // Circularly-symmetric complex normal with E|z|^2 = variance.
    cplx complex_gaussian(double variance);

    u128 state() const { return state_; }
    u128 increment() const { return inc_; }

private:
    u128 state_;
    u128 inc_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Independent stream seed for (base, index), e.g. one per captured buffer.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace kkrx
