#include "qis/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qis/special_functions.hpp"

namespace qis {

std::vector<BlockStats> block_sums(const BitCube& bits, const SensorConfig& config) {
    config.validate();
    if (bits.jot_width % config.kx != 0 || bits.jot_height % config.ky != 0)
        throw std::invalid_argument("block_sums: jot grid does not split into pixel blocks");
    const int pw = bits.jot_width / config.kx;
    const int ph = bits.jot_height / config.ky;
    const int KT = config.K() * bits.frames;

    std::vector<BlockStats> stats(static_cast<std::size_t>(pw) * ph);
    for (int t = 0; t < bits.frames; ++t) {
        for (int jy = 0; jy < bits.jot_height; ++jy) {
            const int py = jy / config.ky;
            const std::size_t plane = static_cast<std::size_t>(t) * bits.jots() +
                                      static_cast<std::size_t>(jy) * bits.jot_width;
            for (int jx = 0; jx < bits.jot_width; ++jx)
                stats[static_cast<std::size_t>(py) * pw + jx / config.kx].sum +=
                    bits.bits[plane + jx];
        }
    }
    for (auto& s : stats) {
        s.gamma = 1.0 - static_cast<double>(s.sum) / KT;
        s.saturated_low = (s.sum == KT);
        s.saturated_high = (s.sum == 0);
    }
    return stats;
}

ReconstructionResult mle_reconstruct(const BitCube& bits, const ThresholdMap& qmap,
                                     const SensorConfig& config, double clip,
                                     const Image* truth) {
    if (qmap.jot_width != bits.jot_width || qmap.jot_height != bits.jot_height)
        throw std::invalid_argument("mle_reconstruct: threshold map / cube mismatch");
    const auto stats = block_sums(bits, config);
    const int pw = bits.jot_width / config.kx;
    const int ph = bits.jot_height / config.ky;
    const int KT = config.K() * bits.frames;
    const double gamma_lo = 1.0 / (2.0 * KT);
    const double scale = config.K() / (config.alpha * config.tau);

    ReconstructionResult result;
    result.estimate = Image(pw, ph);
    result.raw_estimate = Image(pw, ph);
    result.saturation.assign(stats.size(), 0);

    for (int py = 0; py < ph; ++py) {
        for (int px = 0; px < pw; ++px) {
            // every jot of the pixel block must share one threshold
            const int q0 = qmap.q_at(px * config.kx, py * config.ky);
            for (int dy = 0; dy < config.ky; ++dy)
                for (int dx = 0; dx < config.kx; ++dx)
                    if (qmap.q_at(px * config.kx + dx, py * config.ky + dy) != q0)
                        throw std::invalid_argument(
                            "mle_reconstruct: threshold varies inside a pixel block");
            if (q0 < 1 || q0 > config.q_max)
                throw std::invalid_argument("mle_reconstruct: threshold out of range");

            const BlockStats& s = stats[static_cast<std::size_t>(py) * pw + px];
            const double gamma = std::clamp(s.gamma, gamma_lo, 1.0 - gamma_lo);
            const double raw = scale * psi_inverse(q0, gamma);
            result.raw_estimate.at(px, py) = raw;
            result.estimate.at(px, py) = std::clamp(raw, 0.0, clip);
            if (s.saturated_low || s.saturated_high)
                result.saturation[static_cast<std::size_t>(py) * pw + px] = 1;
        }
    }
    if (truth) result.psnr_db = psnr(result.estimate, *truth);
    return result;
}

double psnr(const Image& estimate, const Image& truth, double peak) {
    if (estimate.width != truth.width || estimate.height != truth.height)
        throw std::invalid_argument("psnr: dimension mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < estimate.pixels.size(); ++i) {
        const double d = estimate.pixels[i] - truth.pixels[i];
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(estimate.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace qis
