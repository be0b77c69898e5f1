#include "kkrx/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace kkrx {

namespace {

unsigned log2_exact(std::size_t m) {
    unsigned b = 0;
    while ((std::size_t{1} << b) < m) ++b;
    return (std::size_t{1} << b) == m ? b : 0;
}

std::uint32_t gray(std::uint32_t v) { return v ^ (v >> 1); }

CVec normalized(CVec pts) {
    const double p = mean_power(pts);
    if (!(p > 0.0) || !std::isfinite(p)) throw Error("constellation has zero or non-finite power");
    const double s = 1.0 / std::sqrt(p);
    for (auto& v : pts) v *= s;
    return pts;
}

// Gray-labeled rectangle with `cols` x `rows` points on odd integer coordinates.
// Column bits are the label MSBs.
void gray_rectangle(unsigned col_bits, unsigned row_bits, CVec& pts,
                    std::vector<std::uint32_t>& labels) {
    const int cols = 1 << col_bits, rows = 1 << row_bits;
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            pts.emplace_back(2 * c - cols + 1, 2 * r - rows + 1);
            labels.push_back((gray(c) << row_bits) | gray(r));
        }
    }
}

// Cross constellation: start from a 2^(b+1) x 2^b Gray rectangle and fold the
// outer columns onto new rows above and below. A point (x, y) with
// |x| > edge moves to (sgn(x)|y|, sgn(y)(|x| - shift)).
void cross(unsigned bits, CVec& pts, std::vector<std::uint32_t>& labels) {
    const unsigned row_bits = (bits - 1) / 2;
    const unsigned col_bits = bits - row_bits;
    gray_rectangle(col_bits, row_bits, pts, labels);
    const int rows = 1 << row_bits;
    const int moved_per_side = (1 << col_bits) / 2 - (3 * rows / 4);
    const int edge = (1 << col_bits) - 1 - 2 * moved_per_side;
    const int shift = 2 * moved_per_side;
    for (auto& p : pts) {
        const int x = static_cast<int>(p.real()), y = static_cast<int>(p.imag());
        if (std::abs(x) > edge) {
            const int nx = (x > 0 ? 1 : -1) * std::abs(y);
            const int ny = (y > 0 ? 1 : -1) * (std::abs(x) - shift);
            p = cplx(nx, ny);
        }
    }
}

}  // namespace

Constellation::Constellation(std::string name, CVec points, std::vector<std::uint32_t> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
    const std::size_t m = points.size();
    bits_ = log2_exact(m);
    if (bits_ == 0 || m < 4 || m > 128)
        throw Error("constellation size " + std::to_string(m) + " is not a power of two in [4, 128]");
    if (labels_.size() != m) throw Error("label count does not match point count");
    by_label_.assign(m, std::numeric_limits<std::size_t>::max());
    for (std::size_t k = 0; k < m; ++k) {
        const auto l = labels_[k];
        if (l >= m) throw Error("label " + std::to_string(l) + " out of range");
        if (by_label_[l] != std::numeric_limits<std::size_t>::max())
            throw Error("duplicate label " + label_string(l, bits_));
        by_label_[l] = k;
    }
    for (const auto& p : points)
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
            throw Error("non-finite constellation point");
    points_ = normalized(std::move(points));
}

double Constellation::min_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i)
        for (std::size_t j = i + 1; j < points_.size(); ++j)
            best = std::min(best, std::abs(points_[i] - points_[j]));
    return best;
}

Constellation Constellation::with_points(CVec points) const {
    return Constellation(name_, std::move(points), labels_);
}

Constellation Constellation::with_swapped_labels(std::size_t a, std::size_t b) const {
    Constellation out = *this;
    std::swap(out.labels_[a], out.labels_[b]);
    out.by_label_[out.labels_[a]] = a;
    out.by_label_[out.labels_[b]] = b;
    return out;
}

std::vector<std::string> standard_format_names() {
    return {"QAM4", "QAM8", "QAM16", "QAM32", "QAM64", "QAM128"};
}

Constellation make_standard(const std::string& format_name) {
    CVec pts;
    std::vector<std::uint32_t> labels;
    if (format_name == "QAM4") gray_rectangle(1, 1, pts, labels);
    else if (format_name == "QAM8") gray_rectangle(2, 1, pts, labels);
    else if (format_name == "QAM16") gray_rectangle(2, 2, pts, labels);
    else if (format_name == "QAM32") cross(5, pts, labels);
    else if (format_name == "QAM64") gray_rectangle(3, 3, pts, labels);
    else if (format_name == "QAM128") cross(7, pts, labels);
    else throw Error("unknown modulation format '" + format_name + "'");

    // Order points by label so index == label for the standard formats.
    CVec sorted(pts.size());
    std::vector<std::uint32_t> sorted_labels(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        sorted[labels[k]] = pts[k];
        sorted_labels[labels[k]] = labels[k];
    }
    return Constellation(format_name, std::move(sorted), std::move(sorted_labels));
}

Constellation parse_constellation(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    CVec pts;
    std::vector<std::uint32_t> labels;
    std::size_t label_len = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double re, im;
        std::string lab;
        if (!(ls >> re)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw Error("malformed constellation line " + std::to_string(lineno));
        }
        if (!(ls >> im >> lab)) throw Error("malformed constellation line " + std::to_string(lineno));
        std::string extra;
        if (ls >> extra) throw Error("trailing data on constellation line " + std::to_string(lineno));
        if (lab.empty() || lab.size() > 7 || lab.find_first_not_of("01") != std::string::npos)
            throw Error("invalid bit label '" + lab + "' on line " + std::to_string(lineno));
        if (label_len == 0) label_len = lab.size();
        if (lab.size() != label_len) throw Error("inconsistent label length on line " + std::to_string(lineno));
        std::uint32_t v = 0;
        for (char ch : lab) v = (v << 1) | static_cast<std::uint32_t>(ch == '1');
        pts.emplace_back(re, im);
        labels.push_back(v);
    }
    if (pts.empty()) throw Error("constellation file has no points");
    if ((std::size_t{1} << label_len) != pts.size())
        throw Error("point count " + std::to_string(pts.size()) + " does not match " +
                    std::to_string(label_len) + "-bit labels");
    return Constellation(name, std::move(pts), std::move(labels));
}

Constellation load_constellation(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open constellation file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_constellation(ss.str(), path.stem().string());
}

std::string format_constellation(const Constellation& c) {
    std::ostringstream out;
    out << "# " << c.name() << " (" << c.size() << " points, unit mean power)\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < c.size(); ++k)
        out << c.points()[k].real() << ' ' << c.points()[k].imag() << ' '
            << label_string(c.labels()[k], c.bits_per_symbol()) << '\n';
    return out.str();
}

void save_constellation(const Constellation& c, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write constellation file " + path.string());
    f << format_constellation(c);
}

CVec map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
    const unsigned m = c.bits_per_symbol();
    if (bits.size() % m != 0)
        throw Error("bit stream length " + std::to_string(bits.size()) +
                    " is not a multiple of " + std::to_string(m));
    CVec out(bits.size() / m);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::uint32_t label = 0;
        for (unsigned b = 0; b < m; ++b) label = (label << 1) | (bits[s * m + b] & 1u);
        out[s] = c.points()[c.index_of_label(label)];
    }
    return out;
}

HardDecision demap_hard(cplx y, const Constellation& c) {
    const auto& pts = c.points();
    std::size_t best = 0;
    double best_d = std::norm(y - pts[0]);
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double d = std::norm(y - pts[k]);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return {best, c.labels()[best]};
}

void append_label_bits(std::uint32_t label, unsigned bits, Bits& out) {
    for (unsigned b = bits; b-- > 0;) out.push_back(static_cast<std::uint8_t>((label >> b) & 1u));
}

std::string label_string(std::uint32_t label, unsigned bits) {
    std::string s(bits, '0');
    for (unsigned b = 0; b < bits; ++b)
        if ((label >> (bits - 1 - b)) & 1u) s[b] = '1';
    return s;
}

}  // namespace kkrx
