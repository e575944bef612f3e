#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "qis/forward_model.hpp"
#include "qis/rng.hpp"
#include "qis/special_functions.hpp"

using namespace qis;

namespace {

SensorConfig basic_config() {
    SensorConfig cfg;
    cfg.alpha = 300.0;
    cfg.kx = 2;
    cfg.ky = 2;
    cfg.T = 25;
    cfg.q_max = 16;
    cfg.tau = 1.0;
    cfg.seed = 7;
    return cfg;
}

Image random_image(int w, int h, std::uint64_t key) {
    CounterRng rng(key);
    Image img(w, h);
    for (auto& p : img.pixels) p = 0.05 + 0.9 * rng.uniform();
    return img;
}

// dense reference: evaluate the separable kernel sum directly from the
// basis function, clamping coefficients to the image border
double bspline_ref(KernelKind kind, double t) {
    const double a = std::abs(t);
    if (kind == KernelKind::LinearBSpline) return a < 1.0 ? 1.0 - a : 0.0;
    if (kind == KernelKind::QuadraticBSpline) {
        if (a <= 0.5) return 0.75 - a * a;
        if (a < 1.5) return 0.5 * (1.5 - a) * (1.5 - a);
        return 0.0;
    }
    if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a < 2.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
    return 0.0;
}

double dense_expose_ref(const Image& img, const SensorConfig& cfg, KernelKind kind,
                        int jx, int jy) {
    const double x = (jx + 0.5) / cfg.kx - 0.5;
    const double y = (jy + 0.5) / cfg.ky - 0.5;
    double acc = 0.0, wsum = 0.0;
    for (int n = -3; n < img.height + 3; ++n) {
        for (int m = -3; m < img.width + 3; ++m) {
            const double w = bspline_ref(kind, x - m) * bspline_ref(kind, y - n);
            if (w <= 0.0) continue;
            const int cx = std::clamp(m, 0, img.width - 1);
            const int cy = std::clamp(n, 0, img.height - 1);
            acc += w * img.at(cx, cy);
            wsum += w;
        }
    }
    return cfg.alpha * cfg.tau / cfg.K() * acc / wsum;
}

}  // namespace

TEST_CASE("kernel names round trip") {
    for (auto kind : {KernelKind::Boxcar, KernelKind::LinearBSpline,
                      KernelKind::QuadraticBSpline, KernelKind::CubicBSpline})
        CHECK(parse_kernel(kernel_name(kind)) == kind);
    CHECK_THROWS_AS(parse_kernel("gauss"), std::invalid_argument);
}

TEST_CASE("config validation") {
    SensorConfig cfg = basic_config();
    CHECK_NOTHROW(cfg.validate());
    cfg.tau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = basic_config();
    cfg.kx = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("synthesis weight rows sum to one") {
    for (auto kind : {KernelKind::Boxcar, KernelKind::LinearBSpline,
                      KernelKind::QuadraticBSpline, KernelKind::CubicBSpline}) {
        const KernelWeights1D w = synthesis_weights_1d(kind, 3, 7);
        REQUIRE(w.rows.size() == 21);
        for (const auto& row : w.rows) {
            double sum = 0.0;
            for (const auto& e : row) {
                CHECK(e.coeff >= 0);
                CHECK(e.coeff < 7);
                sum += e.weight;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("boxcar exposure of a constant image") {
    SensorConfig cfg = basic_config();
    Image img(5, 4, 0.5);
    const ExposureField field = expose(img, cfg);
    CHECK(field.jot_width == 10);
    CHECK(field.jot_height == 8);
    for (double v : field.values)
        CHECK(v == doctest::Approx(cfg.alpha * 0.5 / 4.0).epsilon(1e-14));
}

TEST_CASE("b-spline exposure matches a dense reference") {
    SensorConfig cfg = basic_config();
    cfg.kx = 3;
    cfg.ky = 2;
    const Image img = random_image(6, 5, 11);
    for (auto kind : {KernelKind::LinearBSpline, KernelKind::QuadraticBSpline,
                      KernelKind::CubicBSpline}) {
        const ExposureField field = expose(img, cfg, kind);
        for (int jy = 0; jy < field.jot_height; ++jy)
            for (int jx = 0; jx < field.jot_width; ++jx)
                CHECK(field.at(jx, jy) ==
                      doctest::Approx(dense_expose_ref(img, cfg, kind, jx, jy))
                          .epsilon(1e-10));
    }
}

TEST_CASE("constant image is invariant under every kernel") {
    SensorConfig cfg = basic_config();
    Image img(4, 4, 0.3);
    for (auto kind : {KernelKind::LinearBSpline, KernelKind::QuadraticBSpline,
                      KernelKind::CubicBSpline}) {
        const ExposureField field = expose(img, cfg, kind);
        for (double v : field.values)
            CHECK(v == doctest::Approx(cfg.alpha * 0.3 / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("sample_bits equals jot-wise sample_bit in any order") {
    SensorConfig cfg = basic_config();
    const Image img = random_image(6, 6, 3);
    const ExposureField field = expose(img, cfg);
    const ThresholdMap qmap = ThresholdMap::uniform(field.jot_width, field.jot_height, 4);
    const BitCube cube = sample_bits(field, qmap, 9, 42);
    // walk in reverse order, regenerating every stream independently
    for (int t = cube.frames - 1; t >= 0; --t)
        for (int m = cube.jots() - 1; m >= 0; --m)
            CHECK(cube.bit(m, t) == sample_bit(field.values[m], 4, 42, m, t));
}

TEST_CASE("threaded sampling is identical to the serial path") {
    SensorConfig cfg = basic_config();
    Image img(40, 40, 0.4);
    const ExposureField field = expose(img, cfg);  // 80x80 jots
    const ThresholdMap qmap = ThresholdMap::uniform(field.jot_width, field.jot_height, 5);
    const BitCube big = sample_bits(field, qmap, 11, 9);  // over the threading cutoff
    for (int m : {0, 1234, 6399})
        for (int t = 0; t < 11; ++t)
            CHECK(big.bit(m, t) == sample_bit(field.values[m], 5, 9, m, t));
}

TEST_CASE("bit mean tracks 1 - Psi") {
    SensorConfig cfg = basic_config();
    for (double c : {0.1, 0.5, 0.9}) {
        for (int q : {1, 8, 16}) {
            Image img(16, 16, c);
            const ExposureField field = expose(img, cfg);
            const ThresholdMap qmap =
                ThresholdMap::uniform(field.jot_width, field.jot_height, q);
            const BitCube cube = sample_bits(field, qmap, 40, 1000 + q);
            const double n = static_cast<double>(cube.bits.size());
            const double mean =
                std::accumulate(cube.bits.begin(), cube.bits.end(), 0.0) / n;
            const double p = 1.0 - psi(q, cfg.alpha * c / 4.0);
            const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
            CHECK(std::abs(mean - p) < 5.0 * sigma + 1e-9);
        }
    }
}

TEST_CASE("qisb round trip") {
    SensorConfig cfg = basic_config();
    const Image img = random_image(5, 3, 77);
    const ExposureField field = expose(img, cfg);
    const ThresholdMap qmap = ThresholdMap::uniform(field.jot_width, field.jot_height, 3);
    const BitCube cube = sample_bits(field, qmap, 7, 5);

    const std::string path = "test_roundtrip.qisb";
    save_qisb(cube, path);
    const BitCube loaded = load_qisb(path);
    CHECK(loaded.frames == cube.frames);
    CHECK(loaded.jots() == cube.jots());
    CHECK(loaded.bits == cube.bits);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_qisb("does_not_exist.qisb"), std::runtime_error);
}

TEST_CASE("threshold map round trip and validation") {
    ThresholdMap map;
    map.block_w = 2;
    map.block_h = 2;
    map.jot_width = 4;
    map.jot_height = 4;
    map.q_values = {3, 9, 12, 1};
    CHECK(map.q_at(0, 0) == 3);
    CHECK(map.q_at(3, 1) == 9);
    CHECK(map.q_at(1, 2) == 12);
    CHECK_NOTHROW(map.validate(16));
    CHECK_THROWS_AS(map.validate(8), std::invalid_argument);  // q=9,12 over range

    const std::string path = "test_map.csv";
    save_threshold_map(map, path);
    const ThresholdMap loaded = load_threshold_map(path, 4, 4);
    CHECK(loaded.block_w == 2);
    CHECK(loaded.q_values == map.q_values);
    std::remove(path.c_str());
}
