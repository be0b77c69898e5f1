#include "kkrx/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "kkrx/fft.hpp"

namespace kkrx {

ErrorCount count_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
    if (tx.size() != rx.size()) throw Error("bit streams differ in length; alignment failure");
    ErrorCount r;
    r.total = tx.size();
    for (std::size_t i = 0; i < tx.size(); ++i) r.errors += (tx[i] & 1u) != (rx[i] & 1u);
    r.ber = r.total ? static_cast<double>(r.errors) / static_cast<double>(r.total) : 0.0;
    r.anomaly = r.ber > 0.5;
    return r;
}

long long align_symbols(std::span<const cplx> decided, std::span<const cplx> reference, double min_peak) {
    const std::size_t period = reference.size();
    if (period == 0 || decided.empty()) throw Error("alignment failure: empty sequence");
    const std::size_t n = std::min(decided.size(), period);
    CVec a(period, cplx{}), b(reference.begin(), reference.end());
    std::copy(decided.begin(), decided.begin() + static_cast<std::ptrdiff_t>(n), a.begin());
    CVec A = fft(a);
    const CVec B = fft(b);
    // c[o] = sum_k conj(a[k]) b[k + o]
    for (std::size_t k = 0; k < period; ++k) A[k] = std::conj(A[k]) * B[k];
    const CVec c = ifft(A);
    std::size_t best = 0;
    for (std::size_t k = 1; k < period; ++k)
        if (std::abs(c[k]) > std::abs(c[best])) best = k;
    double ea = 0.0, eb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        ea += std::norm(a[k]);
        eb += std::norm(b[(k + best) % period]);
    }
    const double peak = (ea > 0 && eb > 0) ? std::abs(c[best]) / std::sqrt(ea * eb) : 0.0;
    if (peak < min_peak) {
        std::ostringstream msg;
        msg << "alignment failure: correlation peak " << peak << " below " << min_peak;
        throw Error(msg.str());
    }
    return static_cast<long long>(best);
}

ErrorCount count_symbol_errors(std::span<const std::uint32_t> decided, std::span<const std::uint32_t> tx_indices,
                               long long offset, const Constellation& c) {
    const long long period = static_cast<long long>(tx_indices.size());
    if (period == 0) throw Error("empty transmitted sequence");
    const auto& labels = c.labels();
    ErrorCount r;
    for (std::size_t k = 0; k < decided.size(); ++k) {
        long long q = (static_cast<long long>(k) + offset) % period;
        if (q < 0) q += period;
        r.errors += static_cast<std::uint64_t>(
            std::popcount(labels[decided[k]] ^ labels[tx_indices[static_cast<std::size_t>(q)]]));
    }
    r.total = static_cast<std::uint64_t>(decided.size()) * c.bits_per_symbol();
    r.ber = r.total ? static_cast<double>(r.errors) / static_cast<double>(r.total) : 0.0;
    r.anomaly = r.ber > 0.5;
    return r;
}

double erfcinv(double y) {
    if (!(y > 0.0 && y < 2.0)) {
        if (y == 0.0) return std::numeric_limits<double>::infinity();
        if (y == 2.0) return -std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    // Work on the lower half y <= 1 and use erfcinv(2 - y) = -erfcinv(y).
    const bool upper = y > 1.0;
    const double p = upper ? 2.0 - y : y;
    // Initial guess from the Gaussian tail, refined by Halley steps on erfc.
    double x;
    if (p > 0.5) {
        x = (1.0 - p) * std::sqrt(kPi) / 2.0;
    } else {
        const double t = std::sqrt(-2.0 * std::log(p / 2.0));
        x = (t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t))) / std::sqrt(2.0);
    }
    for (int it = 0; it < 8; ++it) {
        const double err = std::erfc(x) - p;
        const double d = -2.0 / std::sqrt(kPi) * std::exp(-x * x);
        const double step = err / d;
        const double next = x - step / (1.0 + x * step);
        if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return upper ? -x : x;
}

std::optional<double> q_from_ber(double ber) {
    if (!(ber > 0.0 && ber < 0.5)) return std::nullopt;
    return 20.0 * std::log10(std::sqrt(2.0) * erfcinv(2.0 * ber));
}

double ber_from_q(double q_db) {
    const double q = std::pow(10.0, q_db / 20.0);
    return 0.5 * std::erfc(q / std::sqrt(2.0));
}

void FecProfile::validate() const {
    if (!(overhead > 0)) throw Error("FEC overhead must be positive");
}

FecProfile fec_hd_7() { return {"HD-FEC 6.7%", 0.067, 8.35}; }
FecProfile fec_hd_20() { return {"HD-FEC 20%", 0.20, 6.70}; }
std::vector<FecProfile> standard_fec_profiles() { return {fec_hd_7(), fec_hd_20()}; }

double net_throughput(unsigned bits_per_symbol, double baud, double overhead) {
    if (overhead < 0) throw Error("negative FEC overhead");
    return baud * static_cast<double>(bits_per_symbol) / (1.0 + overhead);
}

double net_throughput(const Constellation& c, double baud, const FecProfile& fec) {
    return net_throughput(c.bits_per_symbol(), baud, fec.overhead);
}

std::optional<double> threshold_crossing(std::vector<CurvePoint> curve, const FecProfile& fec) {
    if (curve.size() < 2) throw Error("threshold crossing needs at least two curve points");
    std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.osnr_db < b.osnr_db; });
    const double th = fec.q_threshold_db;
    if (curve.front().q_db >= th) return curve.front().osnr_db;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto& a = curve[i - 1];
        const auto& b = curve[i];
        if (a.q_db < th && b.q_db >= th) return a.osnr_db + (th - a.q_db) * (b.osnr_db - a.osnr_db) / (b.q_db - a.q_db);
    }
    return std::nullopt;
}

std::vector<CurvePoint> best_q_envelope(std::span<const SweepPoint> runs) {
    std::map<double, double> best;
    for (const auto& r : runs) {
        auto [it, inserted] = best.emplace(r.osnr_db, r.q_db);
        if (!inserted) it->second = std::max(it->second, r.q_db);
    }
    std::vector<CurvePoint> out;
    for (const auto& [o, q] : best) out.push_back({o, q});
    return out;
}

void RunReport::aggregate(std::uint64_t min_errors) {
    errors = 0;
    bits = 0;
    std::uint64_t bits_with_errors = 0;
    for (auto& b : buffers) {
        b.ber = b.bits ? static_cast<double>(b.errors) / static_cast<double>(b.bits) : 0.0;
        b.q_db = q_from_ber(b.ber);
        bits += b.bits;
        if (b.errors > 0) {
            errors += b.errors;
            bits_with_errors += b.bits;
        }
        anomaly = anomaly || b.ber > 0.5;
    }
    buffers_processed = buffers.size();
    ber = bits_with_errors ? static_cast<double>(errors) / static_cast<double>(bits_with_errors) : 0.0;
    q_db = q_from_ber(ber);
    if (anomaly) flag = "anomaly";
    else if (diverged) flag = "diverged";
    else if (errors == 0) flag = "error-free";
    else if (errors < min_errors) flag = "few-errors";
    else flag.clear();
}

double RunReport::q_rank() const {
    if (error_free()) return std::numeric_limits<double>::infinity();
    return q_db ? *q_db : -std::numeric_limits<double>::infinity();
}

nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    nlohmann::json bufs = nlohmann::json::array();
    for (const auto& b : r.buffers) {
        nlohmann::json e{{"index", b.index}, {"errors", b.errors}, {"bits", b.bits}, {"ber", b.ber}};
        e["q_db"] = b.q_db ? nlohmann::json(*b.q_db) : nlohmann::json(nullptr);
        bufs.push_back(e);
    }
    j["buffers"] = bufs;
    j["errors"] = r.errors;
    j["bits"] = r.bits;
    j["ber"] = r.ber;
    j["q_db"] = r.q_db ? nlohmann::json(*r.q_db) : nlohmann::json(nullptr);
    j["symbols"] = r.symbols;
    j["buffers_processed"] = r.buffers_processed;
    j["clamped"] = r.clamped;
    j["diverged"] = r.diverged;
    j["flag"] = r.flag;
    j["config"] = r.config;
    return j;
}

std::string sweep_csv_header() { return "format,cspr_db,osnr_db,ber,q_db,buffers,flag"; }

std::string format_sweep_row(const SweepRow& row) {
    std::ostringstream s;
    s.precision(10);
    s << row.format << ',' << row.cspr_db << ',';
    if (std::isinf(row.osnr_db)) s << "inf";
    else s << row.osnr_db;
    s << ',' << row.ber << ',';
    if (row.q_db) s << *row.q_db;
    s << ',' << row.buffers << ',' << row.flag;
    return s.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::vector<SweepRow> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == sweep_csv_header()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 7) throw Error("sweep CSV line " + std::to_string(lineno) + ": expected 7 fields");
        try {
            SweepRow r;
            r.format = f[0];
            r.cspr_db = std::stod(f[1]);
            r.osnr_db = f[2] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(f[2]);
            r.ber = std::stod(f[3]);
            if (!f[4].empty()) r.q_db = std::stod(f[4]);
            r.buffers = static_cast<std::size_t>(std::stoul(f[5]));
            r.flag = f[6];
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw Error("sweep CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

}  // namespace kkrx
