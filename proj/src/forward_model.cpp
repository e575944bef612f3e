#include "qis/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qis/rng.hpp"

namespace qis {

KernelKind parse_kernel(const std::string& name) {
    if (name == "boxcar") return KernelKind::Boxcar;
    if (name == "linear-bspline") return KernelKind::LinearBSpline;
    if (name == "quadratic-bspline") return KernelKind::QuadraticBSpline;
    if (name == "cubic-bspline") return KernelKind::CubicBSpline;
    throw std::invalid_argument("unknown kernel: " + name);
}

std::string kernel_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::Boxcar: return "boxcar";
        case KernelKind::LinearBSpline: return "linear-bspline";
        case KernelKind::QuadraticBSpline: return "quadratic-bspline";
        case KernelKind::CubicBSpline: return "cubic-bspline";
    }
    throw std::invalid_argument("unknown kernel kind");
}

void SensorConfig::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (kx < 1 || ky < 1) throw std::invalid_argument("jot factors must be >= 1");
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    if (q_max < 1) throw std::invalid_argument("q_max must be >= 1");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0,1]");
}

ThresholdMap ThresholdMap::uniform(int jot_width, int jot_height, int q,
                                   int block_w, int block_h) {
    ThresholdMap map;
    map.block_w = block_w;
    map.block_h = block_h;
    map.jot_width = jot_width;
    map.jot_height = jot_height;
    map.q_values.assign(static_cast<std::size_t>(map.blocks_x()) * map.blocks_y(), q);
    return map;
}

void ThresholdMap::validate(int q_max) const {
    if (block_w < 1 || block_h < 1)
        throw std::invalid_argument("threshold block size must be >= 1");
    if (jot_width % block_w != 0 || jot_height % block_h != 0)
        throw std::invalid_argument("threshold blocks must tile the jot grid exactly");
    if (q_values.size() != static_cast<std::size_t>(blocks_x()) * blocks_y())
        throw std::invalid_argument("threshold map has wrong number of blocks");
    for (int q : q_values) {
        if (q < 1 || q > q_max)
            throw std::invalid_argument("threshold out of range [1, q_max]");
    }
}

namespace {

double bspline_value(KernelKind kind, double t) {
    const double a = std::abs(t);
    switch (kind) {
        case KernelKind::LinearBSpline:
            return a < 1.0 ? 1.0 - a : 0.0;
        case KernelKind::QuadraticBSpline:
            if (a <= 0.5) return 0.75 - a * a;
            if (a < 1.5) return 0.5 * (1.5 - a) * (1.5 - a);
            return 0.0;
        case KernelKind::CubicBSpline:
            if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
            if (a < 2.0) { const double b = 2.0 - a; return b * b * b / 6.0; }
            return 0.0;
        default:
            throw std::invalid_argument("bspline_value: not a B-spline kernel");
    }
}

int bspline_support(KernelKind kind) {
    switch (kind) {
        case KernelKind::LinearBSpline: return 1;
        case KernelKind::QuadraticBSpline: return 2;
        case KernelKind::CubicBSpline: return 2;
        default: return 0;
    }
}

ExposureField expose_impl(const Image& image, const SensorConfig& config,
                          KernelKind kernel) {
    config.validate();
    ExposureField field;
    field.jot_width = image.width * config.kx;
    field.jot_height = image.height * config.ky;
    field.values.resize(static_cast<std::size_t>(field.jot_width) * field.jot_height);

    const double scale = config.alpha * config.tau / config.K();

    if (kernel == KernelKind::Boxcar) {
        for (int jy = 0; jy < field.jot_height; ++jy) {
            const int py = jy / config.ky;
            for (int jx = 0; jx < field.jot_width; ++jx) {
                field.values[static_cast<std::size_t>(jy) * field.jot_width + jx] =
                    scale * image.at(jx / config.kx, py);
            }
        }
        return field;
    }

    const KernelWeights1D wx = synthesis_weights_1d(kernel, config.kx, image.width);
    const KernelWeights1D wy = synthesis_weights_1d(kernel, config.ky, image.height);
    for (int jy = 0; jy < field.jot_height; ++jy) {
        for (int jx = 0; jx < field.jot_width; ++jx) {
            double acc = 0.0;
            for (const auto& ey : wy.rows[jy]) {
                double row_acc = 0.0;
                for (const auto& ex : wx.rows[jx])
                    row_acc += ex.weight * image.at(ex.coeff, ey.coeff);
                acc += ey.weight * row_acc;
            }
            field.values[static_cast<std::size_t>(jy) * field.jot_width + jx] = scale * acc;
        }
    }
    return field;
}

}  // namespace

KernelWeights1D synthesis_weights_1d(KernelKind kind, int k, int coeff_count) {
    if (k < 1 || coeff_count < 1)
        throw std::invalid_argument("synthesis_weights_1d: bad dimensions");
    KernelWeights1D weights;
    weights.rows.resize(static_cast<std::size_t>(k) * coeff_count);
    if (kind == KernelKind::Boxcar) {
        for (int j = 0; j < k * coeff_count; ++j)
            weights.rows[j] = {{j / k, 1.0}};
        return weights;
    }
    const int support = bspline_support(kind);
    for (int j = 0; j < k * coeff_count; ++j) {
        // jot center in pixel coordinates (pixel centers at integers)
        const double x = (j + 0.5) / k - 0.5;
        const int n0 = static_cast<int>(std::floor(x)) - support;
        const int n1 = static_cast<int>(std::ceil(x)) + support;
        std::vector<KernelWeights1D::Entry> row;
        double sum = 0.0;
        for (int n = n0; n <= n1; ++n) {
            const double w = bspline_value(kind, x - n);
            if (w <= 0.0) continue;
            const int clamped = std::clamp(n, 0, coeff_count - 1);  // clamp-to-edge
            sum += w;
            bool merged = false;
            for (auto& e : row) {
                if (e.coeff == clamped) { e.weight += w; merged = true; break; }
            }
            if (!merged) row.push_back({clamped, w});
        }
        for (auto& e : row) e.weight /= sum;
        weights.rows[j] = std::move(row);
    }
    return weights;
}

ExposureField expose(const Image& image, const SensorConfig& config, KernelKind kernel) {
    validate_intensity(image);
    return expose_impl(image, config, kernel);
}

ExposureField expose_radiance(const Image& radiance, const SensorConfig& config,
                              KernelKind kernel) {
    validate_radiance(radiance);
    return expose_impl(radiance, config, kernel);
}

std::uint8_t sample_bit(double theta, int q, std::uint64_t seed, int m, int t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(t));
    return poisson_sample(theta, rng) >= q ? 1 : 0;
}

BitCube sample_bits(const ExposureField& theta, const ThresholdMap& qmap,
                    int T, std::uint64_t seed) {
    if (qmap.jot_width != theta.jot_width || qmap.jot_height != theta.jot_height)
        throw std::invalid_argument("sample_bits: threshold map does not tile the jot grid");
    if (T < 1) throw std::invalid_argument("sample_bits: T must be >= 1");

    BitCube cube;
    cube.jot_width = theta.jot_width;
    cube.jot_height = theta.jot_height;
    cube.frames = T;
    const int M = cube.jots();
    cube.bits.resize(static_cast<std::size_t>(M) * T);

    auto sample_rows = [&](int jy_begin, int jy_end) {
        for (int jy = jy_begin; jy < jy_end; ++jy) {
            for (int jx = 0; jx < theta.jot_width; ++jx) {
                const int m = jy * theta.jot_width + jx;
                const double th = theta.values[m];
                const int q = qmap.q_at(jx, jy);
                for (int t = 0; t < T; ++t)
                    cube.bits[static_cast<std::size_t>(t) * M + m] =
                        sample_bit(th, q, seed, m, t);
            }
        }
    };

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int n_threads = std::clamp(std::min(hw, theta.jot_height), 1, 16);
    if (n_threads <= 1 || static_cast<long long>(M) * T < 1 << 16) {
        sample_rows(0, theta.jot_height);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (theta.jot_height + n_threads - 1) / n_threads;
        for (int i = 0; i < n_threads; ++i) {
            const int lo = i * chunk;
            const int hi = std::min(theta.jot_height, lo + chunk);
            if (lo < hi) pool.emplace_back(sample_rows, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return cube;
}

void save_qisb(const BitCube& cube, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write QISB file: " + path);
    const std::uint32_t M = static_cast<std::uint32_t>(cube.jots());
    const std::uint32_t T = static_cast<std::uint32_t>(cube.frames);
    out.write("QISB", 4);
    out.write(reinterpret_cast<const char*>(&M), 4);
    out.write(reinterpret_cast<const char*>(&T), 4);
    const std::size_t plane_bytes = (M + 7) / 8;
    std::vector<std::uint8_t> plane(plane_bytes);
    for (int t = 0; t < cube.frames; ++t) {
        std::fill(plane.begin(), plane.end(), 0);
        for (std::uint32_t m = 0; m < M; ++m) {
            if (cube.bit(static_cast<int>(m), t)) plane[m >> 3] |= std::uint8_t(1u << (m & 7));
        }
        out.write(reinterpret_cast<const char*>(plane.data()),
                  static_cast<std::streamsize>(plane_bytes));
    }
    if (!out) throw std::runtime_error("failed writing QISB payload: " + path);
}

BitCube load_qisb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open QISB file: " + path);
    char magic[4];
    std::uint32_t M = 0, T = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&M), 4);
    in.read(reinterpret_cast<char*>(&T), 4);
    if (!in || std::string(magic, 4) != "QISB")
        throw std::runtime_error("not a QISB file: " + path);
    BitCube cube;
    // jot geometry is not stored; expose as a flat M x 1 grid until the
    // caller re-associates dimensions
    cube.jot_width = static_cast<int>(M);
    cube.jot_height = 1;
    cube.frames = static_cast<int>(T);
    cube.bits.resize(static_cast<std::size_t>(M) * T);
    const std::size_t plane_bytes = (M + 7) / 8;
    std::vector<std::uint8_t> plane(plane_bytes);
    for (std::uint32_t t = 0; t < T; ++t) {
        in.read(reinterpret_cast<char*>(plane.data()),
                static_cast<std::streamsize>(plane_bytes));
        if (!in) throw std::runtime_error("truncated QISB payload: " + path);
        for (std::uint32_t m = 0; m < M; ++m)
            cube.bits[static_cast<std::size_t>(t) * M + m] = (plane[m >> 3] >> (m & 7)) & 1u;
    }
    return cube;
}

void save_threshold_map(const ThresholdMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write threshold map: " + path);
    out << "blockw,blockh\n" << map.block_w << "," << map.block_h << "\n";
    for (int by = 0; by < map.blocks_y(); ++by) {
        for (int bx = 0; bx < map.blocks_x(); ++bx) {
            if (bx) out << ",";
            out << map.q_values[static_cast<std::size_t>(by) * map.blocks_x() + bx];
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing threshold map: " + path);
}

ThresholdMap load_threshold_map(const std::string& path, int jot_width, int jot_height) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open threshold map: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("blockw,blockh", 0) != 0)
        throw std::runtime_error("threshold map missing blockw,blockh header: " + path);
    ThresholdMap map;
    map.jot_width = jot_width;
    map.jot_height = jot_height;
    char comma = 0;
    if (!std::getline(in, line)) throw std::runtime_error("threshold map truncated: " + path);
    {
        std::istringstream ss(line);
        if (!(ss >> map.block_w >> comma >> map.block_h) || comma != ',')
            throw std::runtime_error("bad threshold block size line: " + path);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            map.q_values.push_back(std::stoi(cell));
    }
    if (map.block_w < 1 || map.block_h < 1 ||
        jot_width % map.block_w != 0 || jot_height % map.block_h != 0 ||
        map.q_values.size() != static_cast<std::size_t>(map.blocks_x()) * map.blocks_y())
        throw std::runtime_error("threshold map does not tile the jot grid: " + path);
    return map;
}

}  // namespace qis
