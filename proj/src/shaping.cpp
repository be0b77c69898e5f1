#include "kkrx/shaping.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kkrx/rng.hpp"

namespace kkrx {

HermiteRule gauss_hermite(int order) {
    if (order < 1) throw Error("Gauss-Hermite order must be >= 1");
    // Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
        const double b = std::sqrt(i / 2.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    HermiteRule rule;
    for (int i = 0; i < order; ++i) {
        rule.nodes.push_back(es.eigenvalues()(i));
        const double v0 = es.eigenvectors()(0, i);
        rule.weights.push_back(std::sqrt(kPi) * v0 * v0);
    }
    return rule;
}

namespace {

// Sum over bit positions of log2(sum_all / sum_same_bit) for one received y.
class BitMetric {
public:
    explicit BitMetric(const Constellation& c)
        : c_(c), m_(c.bits_per_symbol()), metric_(c.size()) {}

    double penalty(cplx y, std::size_t tx, double inv_n0) {
        const auto& pts = c_.points();
        double dmax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pts.size(); ++j) {
            metric_[j] = -std::norm(y - pts[j]) * inv_n0;
            dmax = std::max(dmax, metric_[j]);
        }
        double all = 0.0;
        same_.assign(m_, 0.0);
        const std::uint32_t tx_label = c_.labels()[tx];
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const double e = std::exp(metric_[j] - dmax);
            all += e;
            const std::uint32_t agree = ~(c_.labels()[j] ^ tx_label);
            for (unsigned b = 0; b < m_; ++b)
                if ((agree >> b) & 1u) same_[b] += e;
        }
        double acc = 0.0;
        for (unsigned b = 0; b < m_; ++b) acc += std::log2(all / same_[b]);
        return acc;
    }

private:
    const Constellation& c_;
    unsigned m_;
    std::vector<double> metric_;
    std::vector<double> same_;
};

}  // namespace

double gmi_awgn(const Constellation& c, double snr_db, const GmiConfig& cfg) {
    if (!std::isfinite(snr_db)) throw Error("GMI SNR must be finite");
    const double n0 = 1.0 / db_to_lin(snr_db);
    const double inv_n0 = 1.0 / n0;
    const double m = c.bits_per_symbol();
    BitMetric metric(c);
    double penalty = 0.0;

    if (cfg.estimator == GmiEstimator::GaussHermite) {
        const HermiteRule rule = gauss_hermite(cfg.hermite_order);
        // Each real noise dimension has variance n0/2, i.e. z = sqrt(n0) t.
        const double scale = std::sqrt(n0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            double acc = 0.0;
            for (std::size_t a = 0; a < rule.nodes.size(); ++a)
                for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
                    const cplx z(scale * rule.nodes[a], scale * rule.nodes[b]);
                    acc += rule.weights[a] * rule.weights[b] *
                           metric.penalty(c.points()[i] + z, i, inv_n0);
                }
            penalty += acc / kPi;
        }
        penalty /= static_cast<double>(c.size());
    } else {
        Pcg64 rng(cfg.seed);
        const std::size_t n = std::max<std::size_t>(cfg.monte_carlo_samples, c.size());
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = s % c.size();
            penalty += metric.penalty(c.points()[i] + rng.complex_gaussian(n0), i, inv_n0);
        }
        penalty /= static_cast<double>(n);
    }
    return std::clamp(m - penalty, 0.0, m);
}

void ShapingConfig::validate() const {
    if (!std::isfinite(target_snr_db)) throw Error("shaping target SNR must be finite");
    if (max_iterations < 1) throw Error("shaping max-iterations must be >= 1");
    if (!(perturbation_stddev > 0.0)) throw Error("perturbation stddev must be positive");
    if (shrink_after < 1 || patience < 1) throw Error("shaping windows must be >= 1");
}

std::string to_string(MoveType m) { return m == MoveType::Perturb ? "perturb" : "swap"; }

namespace {

// For quadrant symmetry: index of the point nearest to i*p for every p.
std::vector<std::size_t> rotation_map(const CVec& pts) {
    std::vector<std::size_t> rot(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const cplx target = pts[k] * cplx(0.0, 1.0);
        std::size_t best = 0;
        for (std::size_t j = 1; j < pts.size(); ++j)
            if (std::norm(pts[j] - target) < std::norm(pts[best] - target)) best = j;
        if (std::abs(pts[best] - target) > 1e-9)
            throw Error("quadrant symmetry requested for a constellation that is not 90-degree symmetric");
        rot[k] = best;
    }
    return rot;
}

}  // namespace

ShapingResult optimize_shaping(const Constellation& start, const ShapingConfig& cfg) {
    cfg.validate();
    Pcg64 rng(cfg.seed);
    std::vector<std::size_t> rot;
    if (cfg.symmetry == Symmetry::Quadrant) rot = rotation_map(start.points());

    Constellation current = start;
    double current_gmi = gmi_awgn(current, cfg.target_snr_db, cfg.gmi);
    ShapingResult result{start, {}, current_gmi, current_gmi};
    double stddev_frac = cfg.perturbation_stddev;
    int rejections = 0;
    const std::size_t m = current.size();

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const MoveType move = (it % 2 == 0) ? MoveType::Perturb : MoveType::Swap;
        Constellation candidate = current;
        if (move == MoveType::Perturb) {
            const std::size_t k = rng.next_u64() % m;
            const double sd = stddev_frac * current.min_distance();
            const cplx delta(sd * rng.gaussian(), sd * rng.gaussian());
            CVec pts = current.points();
            if (rot.empty()) {
                pts[k] += delta;
            } else {
                // Move the whole orbit of k so the set stays 90-degree symmetric.
                std::size_t j = k;
                cplx d = delta;
                for (int q = 0; q < 4; ++q) {
                    pts[j] += d;
                    j = rot[j];
                    d *= cplx(0.0, 1.0);
                }
            }
            candidate = current.with_points(std::move(pts));
        } else {
            const std::size_t a = rng.next_u64() % m;
            std::size_t b = rng.next_u64() % (m - 1);
            if (b >= a) ++b;
            candidate = current.with_swapped_labels(a, b);
        }
        const double g = gmi_awgn(candidate, cfg.target_snr_db, cfg.gmi);
        const bool accept = g > current_gmi;
        result.trace.push_back({it, move, accept, g});
        if (accept) {
            current = std::move(candidate);
            current_gmi = g;
            rejections = 0;
        } else {
            ++rejections;
            if (rejections % cfg.shrink_after == 0) stddev_frac *= 0.5;
            if (rejections >= cfg.patience) break;
        }
    }
    result.constellation = current;
    result.final_gmi = current_gmi;
    return result;
}

double snr_at_gmi(const Constellation& c, double gmi_level, const GmiConfig& cfg,
                  double snr_lo, double snr_hi, double step) {
    if (!(step > 0.0) || !(snr_hi > snr_lo)) throw Error("invalid SNR sampling grid");
    if (gmi_level < gmi_awgn(c, snr_lo, cfg)) throw Error("GMI level below the sampled curve range");
    // Coarse 1 dB scan for the bracket, then the fine grid inside it. The
    // curve is monotone, so this equals interpolating the full fine grid.
    const double coarse = std::max(step, 1.0);
    double lo = snr_lo, hi = snr_lo;
    bool found = false;
    while (hi < snr_hi) {
        lo = hi;
        hi = std::min(snr_hi, hi + coarse);
        if (gmi_awgn(c, hi, cfg) >= gmi_level) {
            found = true;
            break;
        }
    }
    if (!found) throw Error("GMI level above the sampled curve range");
    double x0 = lo, g0 = gmi_awgn(c, lo, cfg);
    for (double x1 = std::min(hi, lo + step);; x1 = std::min(hi, x1 + step)) {
        const double g1 = gmi_awgn(c, x1, cfg);
        if (g1 >= gmi_level) {
            if (g1 <= g0) return x1;
            return x0 + (gmi_level - g0) / (g1 - g0) * (x1 - x0);
        }
        x0 = x1;
        g0 = g1;
        if (x1 >= hi) return hi;
    }
}

double snr_gain_at_gmi(const Constellation& c1, const Constellation& c2, double gmi_level,
                       const GmiConfig& cfg) {
    return snr_at_gmi(c2, gmi_level, cfg) - snr_at_gmi(c1, gmi_level, cfg);
}

std::string format_trace_csv(const std::vector<ShapingStep>& trace) {
    std::ostringstream out;
    out.precision(12);
    out << "iteration,move,accepted,gmi\n";
    for (const auto& s : trace)
        out << s.iteration << ',' << to_string(s.move) << ',' << (s.accepted ? 1 : 0) << ','
            << s.gmi << '\n';
    return out.str();
}

}  // namespace kkrx
