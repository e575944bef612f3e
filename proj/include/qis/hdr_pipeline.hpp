#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qis/forward_model.hpp"
#include "qis/reconstruction.hpp"

namespace qis {

enum class ThresholdPolicy { Uniform, Oracle, Adapted };

ThresholdPolicy parse_policy(const std::string& name);
std::string policy_name(ThresholdPolicy policy);

/// Default sensor gain for the HDR configuration: K^2 (q_max - 1).
double default_hdr_alpha(int K, int q_max);

/// One duty-cycle exposure: measured bits plus the threshold map they were
/// acquired under.
struct ExposureLayer {
    double tau = 1.0;
    BitCube bits;
    ThresholdMap qmap;
    int frames = 0;  // reconstruction frames in the cube
};

struct ExposureStack {
    std::vector<ExposureLayer> layers;  // duty cycles strictly decreasing
    Image radiance;                     // base scene, unnormalized, >= 0
    SensorConfig config;                // per-layer tau overrides config.tau
};

struct HdrStackOptions {
    ThresholdPolicy policy = ThresholdPolicy::Adapted;
    int uniform_q = 1;     // used by the Uniform policy
    int adapt_frames = 8;  // frames spent adapting per layer (Adapted policy)
    KernelKind kernel = KernelKind::Boxcar;
};

/// For each duty cycle, run the forward model on exposure
/// theta = alpha * tau * G * radiance with the policy's threshold map.
ExposureStack simulate_stack(const Image& radiance, const SensorConfig& config,
                             const std::vector<double>& taus,
                             const HdrStackOptions& options = {});

/// Per-layer ML reconstructions of tau_e-scaled intensity (raw estimates kept
/// unclipped; division by tau_e happens in fuse).
std::vector<ReconstructionResult> reconstruct_stack(const ExposureStack& stack);

struct HdrResult {
    Image fused;                      // linear radiance
    std::vector<Image> per_exposure;  // radiance-referred estimates chat_e / tau_e
    std::vector<Image> weights;       // per pixel, nonnegative, sum to 1
    std::vector<std::uint8_t> fallback;  // 1 where every exposure saturated
    double psnr_db = std::numeric_limits<double>::quiet_NaN();  // tone-mapped, vs reference
};

/// Inverse-variance fusion: weight_e proportional to KT * I_{q_e}(chat_e),
/// zero for saturated pixels; an all-saturated pixel falls back to the
/// exposure whose bit density is closest to 1/2 and is flagged.
HdrResult fuse(const ExposureStack& stack,
               const std::vector<ReconstructionResult>& reconstructions,
               const Image* reference = nullptr);

/// Fixed log tone curve log1p(a r / scale) / log1p(a), clipped to [0,1];
/// display and PSNR only, never part of estimation.
Image tone_map(const Image& radiance, double scale = 0.0, double a = 1000.0);

struct DynamicRangePoint {
    double theta = 0.0;    // full-duty exposure before tau scaling
    double snr_db = 0.0;   // best exposure/threshold combination
    double best_tau = 1.0;
    int best_q = 1;
};

/// Analytic SNR envelope over the duty-cycle ladder on a log-spaced theta grid.
std::vector<DynamicRangePoint> dynamic_range_curve(
    const SensorConfig& config, const std::vector<double>& taus, ThresholdPolicy policy,
    int uniform_q = 1, double theta_min = 1e-3, double theta_max = 1e4,
    int n_points = 2000);

/// 20 log10(theta_hi / theta_lo) over the grid points whose SNR clears the
/// floor; 0 when none do.
double dynamic_range_db(const std::vector<DynamicRangePoint>& curve,
                        double snr_floor_db = 20.0);

/// CSV: theta,snr_db,best_tau,best_q.
void write_dr_csv(const std::vector<DynamicRangePoint>& curve, const std::string& path,
                  const std::string& comment = "");

}  // namespace qis
