#include "kkrx/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>

namespace kkrx {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct Fft::Impl {
    fftw_complex* buf_in = nullptr;
    fftw_complex* buf_out = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    explicit Impl(std::size_t n) {
        std::lock_guard lock(planner_mutex());
        buf_in = fftw_alloc_complex(n);
        buf_out = fftw_alloc_complex(n);
        const int ni = static_cast<int>(n);
        fwd = fftw_plan_dft_1d(ni, buf_in, buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(ni, buf_in, buf_out, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Impl() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf_in);
        fftw_free(buf_out);
    }
};

Fft::Fft(std::size_t n) : n_(n) {
    if (n == 0) throw Error("FFT size must be positive");
    impl_ = std::make_unique<Impl>(n);
}
Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<const cplx> in, std::span<cplx> out) {
    if (in.size() != n_ || out.size() != n_) throw Error("FFT size mismatch");
    std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(impl_->buf_in));
    fftw_execute(impl_->fwd);
    const auto* o = reinterpret_cast<const cplx*>(impl_->buf_out);
    std::copy(o, o + n_, out.begin());
}

void Fft::inverse(std::span<const cplx> in, std::span<cplx> out) {
    if (in.size() != n_ || out.size() != n_) throw Error("FFT size mismatch");
    std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(impl_->buf_in));
    fftw_execute(impl_->bwd);
    const auto* o = reinterpret_cast<const cplx*>(impl_->buf_out);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = o[i] * scale;
}

namespace {
Fft& cached_plan(std::size_t n) {
    thread_local std::map<std::size_t, Fft> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Fft(n)).first;
    return it->second;
}
}  // namespace

CVec fft(const CVec& x) {
    CVec out(x.size());
    if (x.empty()) return out;
    cached_plan(x.size()).forward(x, out);
    return out;
}

CVec ifft(const CVec& X) {
    CVec out(X.size());
    if (X.empty()) return out;
    cached_plan(X.size()).inverse(X, out);
    return out;
}

double bin_frequency(std::size_t k, std::size_t n, double fs) {
    const double kk = (k <= n / 2) ? static_cast<double>(k)
                                   : static_cast<double>(k) - static_cast<double>(n);
    return kk * fs / static_cast<double>(n);
}

}  // namespace kkrx
