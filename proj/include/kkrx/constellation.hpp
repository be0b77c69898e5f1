#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kkrx/types.hpp"

namespace kkrx {

using Bits = std::vector<std::uint8_t>;

// Labeled point set with unit mean power. Immutable after construction.
//
// Point k carries label labels()[k]; a label is an integer whose binary
// expansion (MSB first, bits_per_symbol() digits) is the bit string sent for
// that point. Construction validates that M is a power of two in [4, 128] and
// that the labels enumerate every bit string exactly once.
class Constellation {
public:
    Constellation(std::string name, CVec points, std::vector<std::uint32_t> labels);

    const std::string& name() const { return name_; }
    const CVec& points() const { return points_; }
    const std::vector<std::uint32_t>& labels() const { return labels_; }
    std::size_t size() const { return points_.size(); }
    unsigned bits_per_symbol() const { return bits_; }

    // Point index carrying the given label.
    std::size_t index_of_label(std::uint32_t label) const { return by_label_[label]; }
    double min_distance() const;

    // Copy with new coordinates (re-normalized), labels unchanged.
    Constellation with_points(CVec points) const;
    // Copy with labels of points a and b exchanged; coordinates untouched.
    Constellation with_swapped_labels(std::size_t a, std::size_t b) const;

private:
    std::string name_;
    CVec points_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::size_t> by_label_;
    unsigned bits_ = 0;
};

// Conventional formats: QAM4/16/64 square Gray; QAM8 4x2 rectangular Gray;
// QAM32/QAM128 cross layouts folded from a Gray-labeled rectangle.
Constellation make_standard(const std::string& format_name);
std::vector<std::string> standard_format_names();

// Text format: one point per line "<re> <im> <bitlabel>", '#' starts a comment.
Constellation parse_constellation(const std::string& text, const std::string& name);
Constellation load_constellation(const std::filesystem::path& path);
std::string format_constellation(const Constellation& c);
void save_constellation(const Constellation& c, const std::filesystem::path& path);

// Maps log2(M)-bit groups to points. Throws if the length is not a multiple.
CVec map_bits(std::span<const std::uint8_t> bits, const Constellation& c);

struct HardDecision {
    std::size_t index;
    std::uint32_t label;
};

// Minimum Euclidean distance decision; ties go to the lowest point index.
HardDecision demap_hard(cplx y, const Constellation& c);

void append_label_bits(std::uint32_t label, unsigned bits, Bits& out);
std::string label_string(std::uint32_t label, unsigned bits);

}  // namespace kkrx
