#pragma once

#include <limits>
#include <vector>

#include "qis/forward_model.hpp"
#include "qis/image.hpp"

namespace qis {

/// Per-pixel-block bit statistics. saturated_low means every bit fired
/// (S = KT, gamma = 0); saturated_high means none did (S = 0, gamma = 1).
struct BlockStats {
    int sum = 0;
    double gamma = 0.0;
    bool saturated_low = false;
    bool saturated_high = false;
};

/// S_n = sum of bits over the n-th pixel's kx x ky jots and all frames.
std::vector<BlockStats> block_sums(const BitCube& bits, const SensorConfig& config);

struct ReconstructionResult {
    Image estimate;       // clipped to [0, clip]
    Image raw_estimate;   // before clipping
    std::vector<std::uint8_t> saturation;  // 1 where the block saturated either way
    double psnr_db = std::numeric_limits<double>::quiet_NaN();  // vs truth if given
};

/// Closed-form per-block ML reconstruction:
///   chat_n = (K/(alpha*tau)) * psi_inverse(q_n, gamma_n)
/// with gamma clamped to [1/(2KT), 1-1/(2KT)] so saturated blocks stay finite.
/// Every jot of a pixel block must carry the same threshold.
ReconstructionResult mle_reconstruct(const BitCube& bits, const ThresholdMap& qmap,
                                     const SensorConfig& config, double clip = 1.0,
                                     const Image* truth = nullptr);

/// 10*log10(peak^2 / MSE); +infinity when the images match exactly.
double psnr(const Image& estimate, const Image& truth, double peak = 1.0);

}  // namespace qis
