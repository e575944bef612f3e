#pragma once

#include <string>
#include <vector>

#include "qis/analytics.hpp"
#include "qis/forward_model.hpp"
#include "qis/reconstruction.hpp"
#include "qis/rng.hpp"

namespace qis {

/// Per-block bisection bracket. The invariant q_a < q_b holds until
/// convergence; q_m = ceil((q_a+q_b)/2) is the threshold used for the next
/// acquired frame.
struct BisectionState {
    int q_a = 1;
    int q_b = 2;
    int q_m = 2;
    bool converged = false;
    int frames_consumed = 0;
};

BisectionState initial_bisection_state(int q_max);

/// One bracket update from the observed bit density of a frame acquired at
/// q_m. Converges when the density is within tol of 0.5 or the bracket has
/// collapsed. Returns false (no-op) when already converged.
bool bisection_step(BisectionState& state, double bit_density, double tol);

/// Bisection driven by the analytic density 1 - Psi_q(theta) instead of
/// sampled frames; used to study the noise-free fixed point.
struct BisectionFixedPoint {
    int q = 1;
    int iterations = 0;
};
BisectionFixedPoint bisect_analytic(double theta, int q_max, double tol = 0.02,
                                    int max_iters = 64);

struct BisectionOptions {
    int block_w = 0;       // jots; 0 means one pixel block (kx)
    int block_h = 0;       // jots; 0 means one pixel block (ky)
    int adapt_frames = 8;  // frame budget for adaptation, must be < T
    double tol = -1.0;     // <=0: max(1/sqrt(block bits per frame), 0.02)
    bool accumulate = false;  // pool all frames taken at the current q_m
};

struct AdaptationTraceRow {
    int iteration = 0;
    int block_id = 0;
    int q_a = 0, q_b = 0, q_m = 0;
    double bit_density = 0.0;
    bool converged = false;
};

struct AdaptationReport {
    ThresholdMap final_map;
    std::vector<double> mse_to_oracle;  // one entry per adaptation iteration
    int adapt_frames_used = 0;
    int reconstruction_frames = 0;  // remainder of the T-frame budget
    std::vector<AdaptationTraceRow> trace;
};

/// Threshold map from ground truth: oracle threshold of each block's mean
/// intensity.
ThresholdMap oracle_map(const Image& image, const SensorConfig& config,
                        int block_w = 0, int block_h = 0);

/// Algorithm: acquire one fresh frame per iteration under the current
/// per-block q_m map, update every block simultaneously, stop at convergence
/// or when the adaptation frame budget runs out.
AdaptationReport run_bisection(const Image& image, const SensorConfig& config,
                               const BisectionOptions& options,
                               KernelKind kernel = KernelKind::Boxcar);

/// Per-jot Markov-chain threshold state: 2^L sub-states between threshold
/// levels, transitions applied with probability 1-beta.
struct MarkovState {
    int q = 1;
    int sub_state = 0;
    int L = 4;
    double beta = 0.25;
};

void markov_step(MarkovState& state, int bit, int q_max, CounterRng& rng);

enum class ResetDirection { Ascending, Descending };
enum class ResetEstimator { ThresholdWeighted, BitCount };

/// Baseline that cycles uniform thresholds across frames (1..q_max ascending
/// or the reverse) and digitally integrates the fired bits.
ReconstructionResult conditional_reset_reconstruct(const Image& image,
                                                   const SensorConfig& config,
                                                   ResetDirection direction,
                                                   ResetEstimator estimator =
                                                       ResetEstimator::ThresholdWeighted,
                                                   KernelKind kernel = KernelKind::Boxcar);

/// Static two-threshold map alternating q1/q2 in block parity.
ThresholdMap checkerboard_map(const CheckerboardDesign& design, int jot_width,
                              int jot_height, int block_w, int block_h);

/// Trace CSV: iteration,block_id,q_a,q_b,q_m,bit_density,converged.
void write_adaptation_trace(const std::vector<AdaptationTraceRow>& trace,
                            const std::string& path, const std::string& comment = "");

}  // namespace qis
