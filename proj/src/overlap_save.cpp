#include "kkrx/overlap_save.hpp"

#include <algorithm>

namespace kkrx {

template <typename T>
BlockStream<T>::BlockStream(std::size_t block, std::size_t margin) : block_(block), margin_(margin) {
    if (block == 0 || 2 * margin >= block) throw Error("overlap-save margin must be below half the block");
}

template <typename T>
void BlockStream<T>::push(std::span<const T> in) {
    if (finished_) throw Error("push after finish on an overlap-save stream");
    pushed_ += in.size();
    if (!primed_) {
        staging_.insert(staging_.end(), in.begin(), in.end());
        if (staging_.size() < margin_ + 1) return;
        // Start padding: x[-k] = x[k].
        buf_.reserve(staging_.size() + margin_);
        for (std::size_t k = margin_; k >= 1; --k) buf_.push_back(staging_[k]);
        buf_.insert(buf_.end(), staging_.begin(), staging_.end());
        staging_.clear();
        staging_.shrink_to_fit();
        primed_ = true;
        return;
    }
    // Drop consumed samples once they dominate the buffer.
    if (head_ > buf_.size() / 2 && head_ > block_) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
    buf_.insert(buf_.end(), in.begin(), in.end());
}

template <typename T>
void BlockStream<T>::finish() {
    if (finished_) return;
    if (!primed_) {
        if (staging_.empty()) {
            finished_ = true;
            return;
        }
        // Too short for reflection; pad the start with the first sample.
        buf_.assign(margin_, staging_.front());
        buf_.insert(buf_.end(), staging_.begin(), staging_.end());
        staging_.clear();
        primed_ = true;
    }
    // End padding x[L-1+k] = x[L-1-k], extended with zeros when the stream is
    // shorter than the padding.
    const std::size_t have = buf_.size();
    const std::size_t real_count = static_cast<std::size_t>(std::min<std::uint64_t>(pushed_, have));
    const std::size_t need = block_;
    for (std::size_t k = 1; k <= need; ++k) {
        if (k < real_count) buf_.push_back(buf_[have - 1 - k]);
        else buf_.push_back(T{});
    }
    finished_ = true;
}

template <typename T>
std::span<const T> BlockStream<T>::peek(std::size_t ahead) const {
    const std::size_t offset = head_ + ahead * advance_size();
    if (!primed_ || emitted_ + ahead * advance_size() >= pushed_) return {};
    if (buf_.size() < offset + block_) return {};
    return std::span<const T>(buf_.data() + offset, block_);
}

template <typename T>
void BlockStream<T>::advance() {
    head_ += advance_size();
    emitted_ += advance_size();
}

template class BlockStream<cplx>;
template class BlockStream<double>;

OverlapSaveFilter::OverlapSaveFilter(std::size_t block, std::size_t margin, CVec response, int decimation)
    : stream_(block, margin),
      response_(std::move(response)),
      decimation_(decimation),
      fwd_(block),
      inv_(decimation == 2 ? block / 2 : block),
      work_(block),
      spec_(block),
      half_(decimation == 2 ? block / 2 : block),
      time_(decimation == 2 ? block / 2 : block) {
    if (response_.size() != block) throw Error("overlap-save response length must equal the block size");
    if (decimation != 1 && decimation != 2) throw Error("overlap-save decimation must be 1 or 2");
    if (decimation == 2 && (margin % 2 != 0 || block % 4 != 0))
        throw Error("decimating overlap-save needs an even margin and block divisible by 4");
}

void OverlapSaveFilter::push(std::span<const cplx> in, CVec& out) {
    stream_.push(in);
    drain(out);
}

void OverlapSaveFilter::finish(CVec& out) {
    stream_.finish();
    drain(out);
}

void OverlapSaveFilter::drain(CVec& out) {
    const std::size_t n = stream_.block();
    const std::size_t margin = stream_.margin();
    const std::size_t adv = stream_.advance_size();
    for (auto block = stream_.peek(); !block.empty(); block = stream_.peek()) {
        fwd_.forward(block, spec_);
        for (std::size_t k = 0; k < n; ++k) spec_[k] *= response_[k];
        std::uint64_t remaining = stream_.pushed() - stream_.next_output_index();
        std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(adv, remaining));
        if (decimation_ == 1) {
            inv_.inverse(spec_, time_);
            out.insert(out.end(), time_.begin() + static_cast<std::ptrdiff_t>(margin),
                       time_.begin() + static_cast<std::ptrdiff_t>(margin + count));
        } else {
            const std::size_t h = n / 2;
            for (std::size_t k = 0; k < h; ++k) half_[k] = spec_[k] + spec_[k + h];
            inv_.inverse(half_, time_);
            // Scale of the n/2-point inverse relative to n points.
            const std::size_t first = margin / 2;
            const std::size_t outs = (count + 1) / 2;
            for (std::size_t i = 0; i < outs; ++i) out.push_back(time_[first + i] * 0.5);
        }
        stream_.advance();
    }
}

RealOverlapSaveFilter::RealOverlapSaveFilter(std::size_t block, std::size_t margin, CVec response)
    : stream_(block, margin), response_(std::move(response)), fft_(block), work_(block), spec_(block) {
    if (response_.size() != block) throw Error("overlap-save response length must equal the block size");
}

void RealOverlapSaveFilter::push(std::span<const double> in, RVec& out) {
    stream_.push(in);
    drain(out);
}

void RealOverlapSaveFilter::finish(RVec& out) {
    stream_.finish();
    drain(out);
}

void RealOverlapSaveFilter::drain(RVec& out) {
    const std::size_t n = stream_.block();
    const std::size_t margin = stream_.margin();
    const std::size_t adv = stream_.advance_size();
    while (true) {
        auto first = stream_.peek(0);
        if (first.empty()) return;
        const std::uint64_t base = stream_.next_output_index();
        const std::uint64_t pushed = stream_.pushed();
        const bool has_partner = base + adv < pushed;
        auto second = has_partner ? stream_.peek(1) : std::span<const double>{};
        // Wait for the partner so the pairing never depends on buffering.
        if (has_partner && second.empty()) return;
        for (std::size_t i = 0; i < n; ++i) work_[i] = cplx(first[i], second.empty() ? 0.0 : second[i]);
        fft_.forward(work_, spec_);
        for (std::size_t k = 0; k < n; ++k) spec_[k] *= response_[k];
        fft_.inverse(spec_, work_);
        const std::size_t c1 = static_cast<std::size_t>(std::min<std::uint64_t>(adv, pushed - base));
        for (std::size_t i = 0; i < c1; ++i) out.push_back(work_[margin + i].real());
        stream_.advance();
        if (!second.empty()) {
            const std::size_t c2 = static_cast<std::size_t>(std::min<std::uint64_t>(adv, pushed - base - adv));
            for (std::size_t i = 0; i < c2; ++i) out.push_back(work_[margin + i].imag());
            stream_.advance();
        }
    }
}

}  // namespace kkrx
