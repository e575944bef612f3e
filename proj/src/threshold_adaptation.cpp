#include "qis/threshold_adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qis/special_functions.hpp"

namespace qis {

namespace {

int midpoint(int q_a, int q_b) { return q_a + (q_b - q_a + 1) / 2; }

constexpr std::uint64_t kAdaptStream = 0x61646170ULL;  // "adap"
constexpr std::uint64_t kResetStream = 0x72737431ULL;  // "rst1"

}  // namespace

BisectionState initial_bisection_state(int q_max) {
    if (q_max < 1) throw std::invalid_argument("initial_bisection_state: q_max < 1");
    BisectionState state;
    if (q_max == 1) {
        state.q_a = 1;
        state.q_b = 1;
        state.q_m = 1;
        state.converged = true;
        return state;
    }
    state.q_a = 1;
    state.q_b = q_max;
    state.q_m = midpoint(state.q_a, state.q_b);
    return state;
}

bool bisection_step(BisectionState& state, double bit_density, double tol) {
    if (state.converged) return false;
    ++state.frames_consumed;
    if (std::abs(bit_density - 0.5) <= tol || state.q_b - state.q_a <= 1) {
        state.converged = true;
        return true;
    }
    if (bit_density > 0.5)
        state.q_a = state.q_m;  // too many ones: threshold too low
    else
        state.q_b = state.q_m;
    state.q_m = midpoint(state.q_a, state.q_b);
    if (state.q_b - state.q_a <= 1) state.converged = true;
    return true;
}

BisectionFixedPoint bisect_analytic(double theta, int q_max, double tol, int max_iters) {
    if (!(theta > 0.0)) throw std::domain_error("bisect_analytic: theta must be > 0");
    BisectionState state = initial_bisection_state(q_max);
    BisectionFixedPoint fp;
    while (!state.converged && fp.iterations < max_iters) {
        const double density = 1.0 - psi(state.q_m, theta);
        bisection_step(state, density, tol);
        ++fp.iterations;
    }
    fp.q = state.q_m;
    return fp;
}

ThresholdMap oracle_map(const Image& image, const SensorConfig& config, int block_w,
                        int block_h) {
    config.validate();
    if (block_w <= 0) block_w = config.kx;
    if (block_h <= 0) block_h = config.ky;
    const int jw = image.width * config.kx;
    const int jh = image.height * config.ky;
    if (jw % block_w != 0 || jh % block_h != 0)
        throw std::invalid_argument("oracle_map: blocks do not tile the jot grid");

    ThresholdMap map;
    map.block_w = block_w;
    map.block_h = block_h;
    map.jot_width = jw;
    map.jot_height = jh;
    map.q_values.resize(static_cast<std::size_t>(jw / block_w) * (jh / block_h));
    for (int by = 0; by < jh / block_h; ++by) {
        for (int bx = 0; bx < jw / block_w; ++bx) {
            // block mean of the ground-truth intensity, sampled per jot
            double acc = 0.0;
            for (int dy = 0; dy < block_h; ++dy)
                for (int dx = 0; dx < block_w; ++dx)
                    acc += image.at((bx * block_w + dx) / config.kx,
                                    (by * block_h + dy) / config.ky);
            const double c = acc / (static_cast<double>(block_w) * block_h);
            map.q_block(bx, by) = c > 0.0 ? oracle_threshold(c, config).q : 1;
        }
    }
    return map;
}

AdaptationReport run_bisection(const Image& image, const SensorConfig& config,
                               const BisectionOptions& options, KernelKind kernel) {
    config.validate();
    validate_intensity(image);
    const int block_w = options.block_w > 0 ? options.block_w : config.kx;
    const int block_h = options.block_h > 0 ? options.block_h : config.ky;
    if (options.adapt_frames < 1 || options.adapt_frames >= config.T)
        throw std::invalid_argument("run_bisection: adaptation frame budget must be in [1, T)");
    if (block_w % config.kx != 0 || block_h % config.ky != 0)
        throw std::invalid_argument(
            "run_bisection: blocks must be whole multiples of the pixel block");

    const ExposureField theta = expose(image, config, kernel);
    const int jw = theta.jot_width;
    const int jh = theta.jot_height;
    if (jw % block_w != 0 || jh % block_h != 0)
        throw std::invalid_argument("run_bisection: blocks do not tile the jot grid");
    const int bw = jw / block_w;
    const int bh = jh / block_h;
    const std::size_t n_blocks = static_cast<std::size_t>(bw) * bh;

    const double block_bits = static_cast<double>(block_w) * block_h;
    const double tol =
        options.tol > 0.0 ? options.tol : std::max(1.0 / std::sqrt(block_bits), 0.02);

    std::vector<BisectionState> states(n_blocks, initial_bisection_state(config.q_max));
    std::vector<long> pooled_ones(n_blocks, 0);
    std::vector<long> pooled_bits(n_blocks, 0);
    const ThresholdMap oracle = oracle_map(image, config, block_w, block_h);

    ThresholdMap map;
    map.block_w = block_w;
    map.block_h = block_h;
    map.jot_width = jw;
    map.jot_height = jh;
    map.q_values.resize(n_blocks);

    AdaptationReport report;
    for (int iter = 0; iter < options.adapt_frames; ++iter) {
        bool any_active = false;
        for (const auto& s : states)
            if (!s.converged) { any_active = true; break; }
        if (!any_active) break;

        for (std::size_t b = 0; b < n_blocks; ++b) map.q_values[b] = states[b].q_m;
        const std::uint64_t frame_seed =
            stream_key(config.seed, kAdaptStream, static_cast<std::uint64_t>(iter));
        const BitCube frame = sample_bits(theta, map, 1, frame_seed);
        ++report.adapt_frames_used;

        // per-block bit counts of the newest frame
        std::vector<long> ones(n_blocks, 0);
        for (int jy = 0; jy < jh; ++jy) {
            const std::size_t row = static_cast<std::size_t>(jy) * jw;
            const std::size_t brow = static_cast<std::size_t>(jy / block_h) * bw;
            for (int jx = 0; jx < jw; ++jx)
                ones[brow + jx / block_w] += frame.bits[row + jx];
        }

        double mse = 0.0;
        for (std::size_t b = 0; b < n_blocks; ++b) {
            BisectionState& s = states[b];
            if (s.converged) continue;
            double density;
            if (options.accumulate) {
                pooled_ones[b] += ones[b];
                pooled_bits[b] += static_cast<long>(block_bits);
                density = static_cast<double>(pooled_ones[b]) / pooled_bits[b];
            } else {
                density = static_cast<double>(ones[b]) / block_bits;
            }
            const int q_before = s.q_m;
            bisection_step(s, density, tol);
            if (options.accumulate && s.q_m != q_before) {
                pooled_ones[b] = 0;
                pooled_bits[b] = 0;
            }
            AdaptationTraceRow row;
            row.iteration = iter;
            row.block_id = static_cast<int>(b);
            row.q_a = s.q_a;
            row.q_b = s.q_b;
            row.q_m = s.q_m;
            row.bit_density = density;
            row.converged = s.converged;
            report.trace.push_back(row);
        }
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const double diff = states[b].q_m - oracle.q_values[b];
            mse += diff * diff;
        }
        report.mse_to_oracle.push_back(mse / static_cast<double>(n_blocks));
    }

    for (std::size_t b = 0; b < n_blocks; ++b) map.q_values[b] = states[b].q_m;
    report.final_map = map;
    report.reconstruction_frames = config.T - report.adapt_frames_used;
    return report;
}

void markov_step(MarkovState& state, int bit, int q_max, CounterRng& rng) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("markov_step: bit must be 0 or 1");
    if (state.L < 1 || state.beta < 0.0 || state.beta > 1.0)
        throw std::invalid_argument("markov_step: bad L or beta");
    if (rng.uniform() < state.beta) return;  // hold with probability beta
    const int span = 1 << state.L;
    state.sub_state += bit ? 1 : -1;
    if (state.sub_state >= span) {
        if (state.q < q_max) {
            ++state.q;
            state.sub_state = span / 2;
        } else {
            state.sub_state = span - 1;
        }
    } else if (state.sub_state < 0) {
        if (state.q > 1) {
            --state.q;
            state.sub_state = span / 2;
        } else {
            state.sub_state = 0;
        }
    }
}

ReconstructionResult conditional_reset_reconstruct(const Image& image,
                                                   const SensorConfig& config,
                                                   ResetDirection direction,
                                                   ResetEstimator estimator,
                                                   KernelKind kernel) {
    config.validate();
    validate_intensity(image);
    const ExposureField theta = expose(image, config, kernel);
    const int jw = theta.jot_width;
    const int jh = theta.jot_height;

    // frame t carries the uniform threshold q_t, cycling 1..q_max
    std::vector<int> q_seq(config.T);
    for (int t = 0; t < config.T; ++t) {
        const int phase = t % config.q_max;
        q_seq[t] = direction == ResetDirection::Ascending ? phase + 1 : config.q_max - phase;
    }

    // per-pixel accumulators of fired bits and threshold-weighted fired bits;
    // photons carry over between frames until the jot fires and is reset
    Image weighted(image.width, image.height);
    Image count(image.width, image.height);
    std::vector<long> charge(static_cast<std::size_t>(jw) * jh, 0);
    for (int t = 0; t < config.T; ++t) {
        const std::uint64_t frame_seed =
            stream_key(config.seed, kResetStream, static_cast<std::uint64_t>(t));
        for (int jy = 0; jy < jh; ++jy) {
            const std::size_t row = static_cast<std::size_t>(jy) * jw;
            for (int jx = 0; jx < jw; ++jx) {
                CounterRng rng(frame_seed, row + jx, 0);
                long& acc = charge[row + jx];
                acc += poisson_sample(theta.at(jx, jy), rng);
                if (acc < q_seq[t]) continue;
                acc = 0;
                weighted.at(jx / config.kx, jy / config.ky) += q_seq[t];
                count.at(jx / config.kx, jy / config.ky) += 1.0;
            }
        }
    }

    const double KT = static_cast<double>(config.K()) * config.T;
    const double scale = config.K() / (config.alpha * config.tau);
    ReconstructionResult result;
    result.estimate = Image(image.width, image.height);
    result.raw_estimate = Image(image.width, image.height);
    result.saturation.assign(static_cast<std::size_t>(image.width) * image.height, 0);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            // digitally integrated photon count over KT jot-frames
            double theta_hat;
            if (estimator == ResetEstimator::ThresholdWeighted)
                theta_hat = weighted.at(x, y) / KT;
            else
                theta_hat = config.q_max * count.at(x, y) / KT;
            const double raw = scale * theta_hat;
            result.raw_estimate.at(x, y) = raw;
            result.estimate.at(x, y) = std::clamp(raw, 0.0, 1.0);
        }
    }
    result.psnr_db = psnr(result.estimate, image);
    return result;
}

ThresholdMap checkerboard_map(const CheckerboardDesign& design, int jot_width,
                              int jot_height, int block_w, int block_h) {
    if (block_w < 1 || block_h < 1 || jot_width % block_w != 0 || jot_height % block_h != 0)
        throw std::invalid_argument("checkerboard_map: blocks do not tile the jot grid");
    ThresholdMap map;
    map.block_w = block_w;
    map.block_h = block_h;
    map.jot_width = jot_width;
    map.jot_height = jot_height;
    map.q_values.resize(static_cast<std::size_t>(jot_width / block_w) * (jot_height / block_h));
    for (int by = 0; by < jot_height / block_h; ++by)
        for (int bx = 0; bx < jot_width / block_w; ++bx)
            map.q_block(bx, by) = ((bx + by) % 2 == 0) ? design.q1 : design.q2;
    return map;
}

void write_adaptation_trace(const std::vector<AdaptationTraceRow>& trace,
                            const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "iteration,block_id,q_a,q_b,q_m,bit_density,converged\n";
    out.precision(12);
    for (const auto& r : trace)
        out << r.iteration << "," << r.block_id << "," << r.q_a << "," << r.q_b << ","
            << r.q_m << "," << r.bit_density << "," << (r.converged ? 1 : 0) << "\n";
}

}  // namespace qis
