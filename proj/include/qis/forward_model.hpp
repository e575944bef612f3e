#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qis/image.hpp"

namespace qis {

enum class KernelKind { Boxcar, LinearBSpline, QuadraticBSpline, CubicBSpline };

KernelKind parse_kernel(const std::string& name);
std::string kernel_name(KernelKind kind);

struct SensorConfig {
    double alpha = 300.0;   // sensor gain, photons per unit intensity
    int kx = 2;             // jots per pixel horizontally
    int ky = 2;             // jots per pixel vertically
    int T = 25;             // temporal frames
    int q_max = 16;
    double tau = 1.0;       // shutter duty cycle in (0,1]
    std::uint64_t seed = 0;

    int K() const { return kx * ky; }
    void validate() const;  // throws std::invalid_argument
};

/// Per-jot mean photon counts theta = alpha * tau * G * c, on the jot grid
/// (width*kx) x (height*ky), row-major.
struct ExposureField {
    int jot_width = 0;
    int jot_height = 0;
    std::vector<double> values;

    int jots() const { return jot_width * jot_height; }
    double at(int jx, int jy) const {
        return values[static_cast<std::size_t>(jy) * jot_width + jx];
    }
};

/// Binary measurements, one byte per bit, frame-major: bit(m,t) at
/// index t*M + m with m = jy*jot_width + jx.
struct BitCube {
    int jot_width = 0;
    int jot_height = 0;
    int frames = 0;
    std::vector<std::uint8_t> bits;

    int jots() const { return jot_width * jot_height; }
    std::uint8_t bit(int m, int t) const {
        return bits[static_cast<std::size_t>(t) * jots() + m];
    }
};

/// Per-block integer thresholds over the jot grid. Blocks of block_w x block_h
/// jots must tile the grid exactly.
struct ThresholdMap {
    int block_w = 1;
    int block_h = 1;
    int jot_width = 0;
    int jot_height = 0;
    std::vector<int> q_values;  // row-major over the block grid

    int blocks_x() const { return jot_width / block_w; }
    int blocks_y() const { return jot_height / block_h; }
    int q_at(int jx, int jy) const {
        return q_values[static_cast<std::size_t>(jy / block_h) * blocks_x() + jx / block_w];
    }
    int& q_block(int bx, int by) {
        return q_values[static_cast<std::size_t>(by) * blocks_x() + bx];
    }

    static ThresholdMap uniform(int jot_width, int jot_height, int q,
                                int block_w = 1, int block_h = 1);
    void validate(int q_max) const;
};

/// 1-D synthesis weights: for each of k*coeff_count jot positions, the
/// (coefficient index, weight) pairs of one kernel row. Weights of every row
/// sum to 1; the 1/K exposure normalization is applied separately.
struct KernelWeights1D {
    struct Entry { int coeff; double weight; };
    std::vector<std::vector<Entry>> rows;  // one per jot position
};

KernelWeights1D synthesis_weights_1d(KernelKind kind, int k, int coeff_count);

/// theta_m = alpha * tau * (G c)_m for an intensity image in [0,1].
ExposureField expose(const Image& image, const SensorConfig& config,
                     KernelKind kernel = KernelKind::Boxcar);

/// Same synthesis without the [0,1] range check, for radiance maps.
ExposureField expose_radiance(const Image& radiance, const SensorConfig& config,
                              KernelKind kernel = KernelKind::Boxcar);

/// Single measurement bit: Y ~ Poisson(theta) thresholded at q, drawn from the
/// (seed, m, t) counter stream. sample_bits is defined jot-by-jot in terms of
/// this, so any sub-cube is reproducible independent of iteration order.
std::uint8_t sample_bit(double theta, int q, std::uint64_t seed, int m, int t);

BitCube sample_bits(const ExposureField& theta, const ThresholdMap& qmap,
                    int T, std::uint64_t seed);

/// Packed binary container: magic "QISB", u32 M, u32 T, then T planes of
/// ceil(M/8) bytes, LSB-first within each byte.
void save_qisb(const BitCube& cube, const std::string& path);
BitCube load_qisb(const std::string& path);

/// ThresholdMap CSV: header line "blockw,blockh", then the block grid.
void save_threshold_map(const ThresholdMap& map, const std::string& path);
ThresholdMap load_threshold_map(const std::string& path, int jot_width, int jot_height);

}  // namespace qis
