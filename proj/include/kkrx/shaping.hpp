#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kkrx/constellation.hpp"

namespace kkrx {

enum class GmiEstimator { GaussHermite, MonteCarlo };

struct GmiConfig {
    GmiEstimator estimator = GmiEstimator::GaussHermite;
    int hermite_order = 10;               // nodes per real dimension
    std::size_t monte_carlo_samples = 200000;
    std::uint64_t seed = 1;               // Monte-Carlo only
};

// Bit-interleaved GMI (bits/symbol) of the memoryless complex AWGN channel with
// Es/N0 = snr_db for a unit-power constellation, uniform inputs and
// max-free Gaussian bit metrics.
double gmi_awgn(const Constellation& c, double snr_db, const GmiConfig& cfg = {});

// Nodes/weights for integrals of the form int exp(-t^2) f(t) dt.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
HermiteRule gauss_hermite(int order);

enum class Symmetry { None, Quadrant };
enum class MoveType { Perturb, Swap };

struct ShapingConfig {
    double target_snr_db = 14.0;
    int max_iterations = 20000;
    double perturbation_stddev = 0.05;  // fraction of current minimum distance
    int shrink_after = 200;             // consecutive rejections before halving
    int patience = 2000;                // consecutive rejections before stopping
    GmiConfig gmi;
    Symmetry symmetry = Symmetry::None;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ShapingStep {
    int iteration;
    MoveType move;
    bool accepted;
    double gmi;  // GMI of the candidate produced by this move
};

struct ShapingResult {
    Constellation constellation;
    std::vector<ShapingStep> trace;
    double start_gmi;
    double final_gmi;
};

// Iterative geometric shaping: alternate single-point Gaussian perturbations
// and two-point label swaps, keeping a candidate only if its GMI at the target
// SNR strictly improves.
ShapingResult optimize_shaping(const Constellation& start, const ShapingConfig& cfg);

// SNR (dB) at which c reaches the given GMI, found on a sampled curve.
double snr_at_gmi(const Constellation& c, double gmi_level, const GmiConfig& cfg = {},
                  double snr_lo = -10.0, double snr_hi = 40.0, double step = 0.1);

// Horizontal gap between GMI curves at gmi_level: SNR_c2 - SNR_c1, so a
// positive value means c1 needs less SNR.
double snr_gain_at_gmi(const Constellation& c1, const Constellation& c2, double gmi_level,
                       const GmiConfig& cfg = {});

std::string format_trace_csv(const std::vector<ShapingStep>& trace);
std::string to_string(MoveType m);

}  // namespace kkrx
