#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "kkrx/types.hpp"

namespace kkrx {

// Owning complex-to-complex FFT of fixed size. Plans are created under a
// process-wide lock (FFTW planning is not thread-safe); execution is.
class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(Fft&&) noexcept;
    Fft& operator=(Fft&&) noexcept;
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    // Unnormalized forward transform, exp(-i...) kernel.
    void forward(std::span<const cplx> in, std::span<cplx> out);
    // Inverse transform scaled by 1/n.
    void inverse(std::span<const cplx> in, std::span<cplx> out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

// Whole-vector helpers backed by a per-thread plan cache.
CVec fft(const CVec& x);
CVec ifft(const CVec& X);

// Frequency in Hz of FFT bin k for an n-point transform at rate fs
// (negative frequencies for k > n/2).
double bin_frequency(std::size_t k, std::size_t n, double fs);

}  // namespace kkrx
