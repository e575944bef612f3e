#include "qis/hdr_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qis/analytics.hpp"
#include "qis/rng.hpp"
#include "qis/special_functions.hpp"
#include "qis/threshold_adaptation.hpp"

namespace qis {

namespace {

constexpr std::uint64_t kHdrStream = 0x686472ULL;  // "hdr"
constexpr double kDegeneratePsi = 1e-12;

/// SNR in dB as a function of the jot exposure alone:
/// 10 log10(theta^2 e^{-2 theta} theta^{2q-2} / (Gamma(q)^2 Psi(1-Psi))) + 10 log10(KT).
/// Returns -infinity where Psi is degenerate.
double snr_db_from_theta(double theta, int q, double KT) {
    if (!(theta > 0.0)) return -std::numeric_limits<double>::infinity();
    const double p = psi(q, theta);
    if (p < kDegeneratePsi || 1.0 - p < kDegeneratePsi)
        return -std::numeric_limits<double>::infinity();
    const double log_core = 2.0 * std::log(theta) - 2.0 * theta +
                            (2.0 * q - 2.0) * std::log(theta) -
                            2.0 * std::lgamma(static_cast<double>(q)) - std::log(p) -
                            std::log1p(-p);
    return 10.0 * log_core / std::log(10.0) + 10.0 * std::log10(KT);
}

int oracle_q_from_theta(double theta, int q_max) {
    const int raw = static_cast<int>(std::floor(std::max(theta, 0.0))) + 1;
    return std::clamp(raw, 1, q_max);
}

/// Per-pixel-block mean exposure.
double block_mean_theta(const ExposureField& theta, int bx, int by, int kx, int ky) {
    double acc = 0.0;
    for (int dy = 0; dy < ky; ++dy)
        for (int dx = 0; dx < kx; ++dx) acc += theta.at(bx * kx + dx, by * ky + dy);
    return acc / (static_cast<double>(kx) * ky);
}

ThresholdMap oracle_map_from_field(const ExposureField& theta, const SensorConfig& config) {
    ThresholdMap map;
    map.block_w = config.kx;
    map.block_h = config.ky;
    map.jot_width = theta.jot_width;
    map.jot_height = theta.jot_height;
    const int bw = theta.jot_width / config.kx;
    const int bh = theta.jot_height / config.ky;
    map.q_values.resize(static_cast<std::size_t>(bw) * bh);
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx)
            map.q_block(bx, by) = oracle_q_from_theta(
                block_mean_theta(theta, bx, by, config.kx, config.ky), config.q_max);
    return map;
}

/// Sampled per-pixel-block bisection against the given exposure field.
ThresholdMap adapt_map_from_field(const ExposureField& theta, const SensorConfig& config,
                                  int adapt_frames, std::uint64_t seed) {
    const int bw = theta.jot_width / config.kx;
    const int bh = theta.jot_height / config.ky;
    const std::size_t n_blocks = static_cast<std::size_t>(bw) * bh;
    const double block_bits = static_cast<double>(config.K());
    const double tol = std::max(1.0 / std::sqrt(block_bits), 0.02);

    std::vector<BisectionState> states(n_blocks, initial_bisection_state(config.q_max));
    ThresholdMap map;
    map.block_w = config.kx;
    map.block_h = config.ky;
    map.jot_width = theta.jot_width;
    map.jot_height = theta.jot_height;
    map.q_values.resize(n_blocks);

    for (int iter = 0; iter < adapt_frames; ++iter) {
        bool any_active = false;
        for (const auto& s : states)
            if (!s.converged) { any_active = true; break; }
        if (!any_active) break;
        for (std::size_t b = 0; b < n_blocks; ++b) map.q_values[b] = states[b].q_m;
        const BitCube frame = sample_bits(
            theta, map, 1, stream_key(seed, 2, static_cast<std::uint64_t>(iter)));
        for (int by = 0; by < bh; ++by) {
            for (int bx = 0; bx < bw; ++bx) {
                BisectionState& s = states[static_cast<std::size_t>(by) * bw + bx];
                if (s.converged) continue;
                long ones = 0;
                for (int dy = 0; dy < config.ky; ++dy)
                    for (int dx = 0; dx < config.kx; ++dx)
                        ones += frame.bits[static_cast<std::size_t>(by * config.ky + dy) *
                                               theta.jot_width +
                                           bx * config.kx + dx];
                bisection_step(s, ones / block_bits, tol);
            }
        }
    }
    for (std::size_t b = 0; b < n_blocks; ++b) map.q_values[b] = states[b].q_m;
    return map;
}

}  // namespace

ThresholdPolicy parse_policy(const std::string& name) {
    if (name == "uniform") return ThresholdPolicy::Uniform;
    if (name == "oracle") return ThresholdPolicy::Oracle;
    if (name == "adapted") return ThresholdPolicy::Adapted;
    throw std::invalid_argument("unknown threshold policy: " + name);
}

std::string policy_name(ThresholdPolicy policy) {
    switch (policy) {
        case ThresholdPolicy::Uniform: return "uniform";
        case ThresholdPolicy::Oracle: return "oracle";
        case ThresholdPolicy::Adapted: return "adapted";
    }
    throw std::logic_error("policy_name: bad enum");
}

double default_hdr_alpha(int K, int q_max) {
    if (K < 1 || q_max < 2) throw std::invalid_argument("default_hdr_alpha: bad K or q_max");
    return static_cast<double>(K) * K * (q_max - 1);
}

ExposureStack simulate_stack(const Image& radiance, const SensorConfig& config,
                             const std::vector<double>& taus,
                             const HdrStackOptions& options) {
    config.validate();
    validate_radiance(radiance);
    if (taus.empty()) throw std::invalid_argument("simulate_stack: empty duty-cycle list");
    for (std::size_t e = 0; e < taus.size(); ++e) {
        if (!(taus[e] > 0.0 && taus[e] <= 1.0))
            throw std::invalid_argument("simulate_stack: duty cycles must be in (0,1]");
        if (e > 0 && !(taus[e] < taus[e - 1]))
            throw std::invalid_argument("simulate_stack: duty cycles must strictly decrease");
    }
    const int frames = options.policy == ThresholdPolicy::Adapted
                           ? config.T - options.adapt_frames
                           : config.T;
    if (frames < 1) throw std::invalid_argument("simulate_stack: no frames left after adaptation");
    if (options.policy == ThresholdPolicy::Uniform &&
        (options.uniform_q < 1 || options.uniform_q > config.q_max))
        throw std::invalid_argument("simulate_stack: uniform_q out of range");

    ExposureStack stack;
    stack.radiance = radiance;
    stack.config = config;
    for (std::size_t e = 0; e < taus.size(); ++e) {
        SensorConfig cfg = config;
        cfg.tau = taus[e];
        const ExposureField theta = expose_radiance(radiance, cfg, options.kernel);
        const std::uint64_t layer_seed =
            stream_key(config.seed, kHdrStream, static_cast<std::uint64_t>(e));

        ExposureLayer layer;
        layer.tau = taus[e];
        layer.frames = frames;
        switch (options.policy) {
            case ThresholdPolicy::Uniform:
                layer.qmap = ThresholdMap::uniform(theta.jot_width, theta.jot_height,
                                                   options.uniform_q, config.kx, config.ky);
                break;
            case ThresholdPolicy::Oracle:
                layer.qmap = oracle_map_from_field(theta, config);
                break;
            case ThresholdPolicy::Adapted:
                layer.qmap =
                    adapt_map_from_field(theta, config, options.adapt_frames, layer_seed);
                break;
        }
        layer.bits = sample_bits(theta, layer.qmap, frames, stream_key(layer_seed, 1, 0));
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

std::vector<ReconstructionResult> reconstruct_stack(const ExposureStack& stack) {
    std::vector<ReconstructionResult> results;
    for (const auto& layer : stack.layers) {
        // reconstruct the tau-scaled intensity: scale K/alpha, so chat = tau * rhat
        SensorConfig cfg = stack.config;
        cfg.tau = 1.0;
        results.push_back(mle_reconstruct(layer.bits, layer.qmap, cfg,
                                          std::numeric_limits<double>::max()));
    }
    return results;
}

HdrResult fuse(const ExposureStack& stack,
               const std::vector<ReconstructionResult>& reconstructions,
               const Image* reference) {
    if (reconstructions.size() != stack.layers.size())
        throw std::invalid_argument("fuse: one reconstruction per exposure required");
    if (stack.layers.empty()) throw std::invalid_argument("fuse: empty stack");
    const int pw = reconstructions.front().estimate.width;
    const int ph = reconstructions.front().estimate.height;
    const std::size_t n_exposures = stack.layers.size();
    const SensorConfig& config = stack.config;

    // per-exposure bit densities decide the all-saturated fallback
    std::vector<std::vector<BlockStats>> stats;
    for (const auto& layer : stack.layers) stats.push_back(block_sums(layer.bits, config));

    HdrResult result;
    result.fused = Image(pw, ph);
    result.per_exposure.assign(n_exposures, Image(pw, ph));
    result.weights.assign(n_exposures, Image(pw, ph));
    result.fallback.assign(static_cast<std::size_t>(pw) * ph, 0);

    SensorConfig fisher_cfg = config;
    fisher_cfg.tau = 1.0;  // estimates are tau-scaled intensities

    for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
            const std::size_t n = static_cast<std::size_t>(y) * pw + x;
            std::vector<double> w(n_exposures, 0.0);
            bool all_saturated = true;
            for (std::size_t e = 0; e < n_exposures; ++e) {
                const double tau = stack.layers[e].tau;
                const double chat = reconstructions[e].raw_estimate.at(x, y);
                result.per_exposure[e].at(x, y) = chat / tau;
                if (reconstructions[e].saturation[n]) continue;
                all_saturated = false;
                const int q = stack.layers[e].qmap.q_at(x * config.kx, y * config.ky);
                try {
                    // weight for the radiance-referred estimate chat/tau:
                    // 1/Var = tau^2 * KT * I(chat)
                    const double info =
                        fisher_information(std::max(chat, 1e-12), q, fisher_cfg);
                    w[e] = tau * tau * info;
                } catch (const std::domain_error&) {
                    w[e] = 0.0;
                }
            }
            double wsum = 0.0;
            for (double v : w) wsum += v;
            if (wsum <= 0.0) {
                // no usable variance estimate: fall back to the exposure whose
                // bit density sits closest to 1/2
                std::size_t best = 0;
                double best_dist = std::numeric_limits<double>::infinity();
                for (std::size_t e = 0; e < n_exposures; ++e) {
                    if (!all_saturated && reconstructions[e].saturation[n]) continue;
                    const double dist = std::abs(stats[e][n].gamma - 0.5);
                    if (dist < best_dist) { best_dist = dist; best = e; }
                }
                w.assign(n_exposures, 0.0);
                w[best] = 1.0;
                wsum = 1.0;
                if (all_saturated) result.fallback[n] = 1;
            }
            double fused = 0.0;
            for (std::size_t e = 0; e < n_exposures; ++e) {
                const double wn = w[e] / wsum;
                result.weights[e].at(x, y) = wn;
                fused += wn * result.per_exposure[e].at(x, y);
            }
            result.fused.at(x, y) = fused;
        }
    }

    if (reference) {
        const double scale = *std::max_element(reference->pixels.begin(),
                                               reference->pixels.end());
        result.psnr_db = psnr(tone_map(result.fused, scale), tone_map(*reference, scale));
    }
    return result;
}

Image tone_map(const Image& radiance, double scale, double a) {
    double s = scale;
    if (s <= 0.0)
        s = *std::max_element(radiance.pixels.begin(), radiance.pixels.end());
    if (s <= 0.0) s = 1.0;
    Image out(radiance.width, radiance.height);
    const double denom = std::log1p(a);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        const double r = std::max(radiance.pixels[i], 0.0);
        out.pixels[i] = std::clamp(std::log1p(a * r / s) / denom, 0.0, 1.0);
    }
    return out;
}

std::vector<DynamicRangePoint> dynamic_range_curve(const SensorConfig& config,
                                                   const std::vector<double>& taus,
                                                   ThresholdPolicy policy, int uniform_q,
                                                   double theta_min, double theta_max,
                                                   int n_points) {
    config.validate();
    if (taus.empty()) throw std::invalid_argument("dynamic_range_curve: empty duty-cycle list");
    if (policy == ThresholdPolicy::Adapted)
        throw std::invalid_argument(
            "dynamic_range_curve: analytic curve supports uniform and oracle policies");
    if (policy == ThresholdPolicy::Uniform &&
        (uniform_q < 1 || uniform_q > config.q_max))
        throw std::invalid_argument("dynamic_range_curve: uniform_q out of range");
    if (!(theta_min > 0.0 && theta_min < theta_max) || n_points < 2)
        throw std::invalid_argument("dynamic_range_curve: bad theta grid");

    const double KT = static_cast<double>(config.K()) * config.T;
    const double ratio = theta_max / theta_min;
    std::vector<DynamicRangePoint> curve;
    curve.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        DynamicRangePoint pt;
        pt.theta = theta_min * std::pow(ratio, static_cast<double>(i) / (n_points - 1));
        pt.snr_db = -std::numeric_limits<double>::infinity();
        for (double tau : taus) {
            const double theta_eff = pt.theta * tau;
            const int q = policy == ThresholdPolicy::Uniform
                              ? uniform_q
                              : oracle_q_from_theta(theta_eff, config.q_max);
            const double snr = snr_db_from_theta(theta_eff, q, KT);
            if (snr > pt.snr_db) {
                pt.snr_db = snr;
                pt.best_tau = tau;
                pt.best_q = q;
            }
        }
        curve.push_back(pt);
    }
    return curve;
}

double dynamic_range_db(const std::vector<DynamicRangePoint>& curve, double snr_floor_db) {
    double lo = 0.0, hi = 0.0;
    bool found = false;
    for (const auto& pt : curve) {
        if (pt.snr_db < snr_floor_db) continue;
        if (!found) { lo = pt.theta; found = true; }
        hi = pt.theta;
    }
    if (!found || hi <= lo) return 0.0;
    return 20.0 * std::log10(hi / lo);
}

void write_dr_csv(const std::vector<DynamicRangePoint>& curve, const std::string& path,
                  const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out.precision(12);
    out << "theta,snr_db,best_tau,best_q\n";
    for (const auto& pt : curve)
        out << pt.theta << "," << pt.snr_db << "," << pt.best_tau << "," << pt.best_q << "\n";
}

}  // namespace qis
