#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kkrx/fft.hpp"
#include "kkrx/types.hpp"

namespace kkrx {

// Streaming overlap-save engine.
//
// Blocks of `block` samples advance by block - 2*margin; the first and last
// `margin` outputs of every block are discarded. Block positions are fixed
// relative to the first pushed sample, so the concatenated output does not
// depend on how the input is split across push() calls. The stream start is
// reflection padded; finish() reflection pads the end and emits the remaining
// outputs. Output sample i corresponds to input sample i * decimation.
template <typename T>
class BlockStream {
public:
    BlockStream(std::size_t block, std::size_t margin);

    void push(std::span<const T> in);
    void finish();

    // The k-th complete block ahead, or an empty span. advance() consumes one.
    std::span<const T> peek(std::size_t ahead = 0) const;
    void advance();

    std::size_t block() const { return block_; }
    std::size_t margin() const { return margin_; }
    std::size_t advance_size() const { return block_ - 2 * margin_; }
    // Absolute input index of the first retained sample of the next block.
    std::uint64_t next_output_index() const { return emitted_; }
    std::uint64_t pushed() const { return pushed_; }
    bool finished() const { return finished_; }

private:
    std::size_t block_, margin_;
    std::vector<T> buf_;        // padded stream from buf_pos_ onward
    std::size_t head_ = 0;      // start of the next block within buf_
    std::vector<T> staging_;    // raw samples before the start padding exists
    bool primed_ = false;
    bool finished_ = false;
    std::uint64_t pushed_ = 0;
    std::uint64_t emitted_ = 0;
};

// Complex overlap-save filter with optional decimation by 2. The decimated
// block is formed by folding the spectrum onto half the bins, which keeps the
// even-indexed outputs exactly.
class OverlapSaveFilter {
public:
    OverlapSaveFilter(std::size_t block, std::size_t margin, CVec response, int decimation = 1);

    void push(std::span<const cplx> in, CVec& out);
    void finish(CVec& out);

    int decimation() const { return decimation_; }

private:
    void drain(CVec& out);

    BlockStream<cplx> stream_;
    CVec response_;
    int decimation_;
    Fft fwd_;
    Fft inv_;
    CVec work_, spec_, half_, time_;
};

// Real-input overlap-save filter for responses with a real impulse response.
// Blocks are paired by absolute index and each pair shares one complex FFT.
class RealOverlapSaveFilter {
public:
    RealOverlapSaveFilter(std::size_t block, std::size_t margin, CVec response);

    void push(std::span<const double> in, RVec& out);
    void finish(RVec& out);

private:
    void drain(RVec& out);

    BlockStream<double> stream_;
    CVec response_;
    Fft fft_;
    CVec work_, spec_;
};

}  // namespace kkrx
