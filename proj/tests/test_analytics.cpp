#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "qis/analytics.hpp"
#include "qis/special_functions.hpp"

using namespace qis;

namespace {

SensorConfig paper_config() {
    SensorConfig cfg;
    cfg.alpha = 300.0;
    cfg.kx = 2;
    cfg.ky = 2;
    cfg.T = 50;
    cfg.q_max = 60;
    return cfg;
}

// independent oracle: I(c) = (dPsi/dc)^2 / (Psi (1-Psi)) with the derivative
// taken by central differences of psi itself
double fisher_fd_oracle(double c, int q, const SensorConfig& cfg) {
    const double scale = cfg.alpha * cfg.tau / cfg.K();
    const double h = 1e-6 * c;
    const double p = psi(q, scale * c);
    const double dp = (psi(q, scale * (c + h)) - psi(q, scale * (c - h))) / (2.0 * h);
    return dp * dp / (p * (1.0 - p));
}

}  // namespace

TEST_CASE("fisher information matches the finite-difference oracle") {
    const SensorConfig cfg = paper_config();
    for (double c : {0.1, 0.3, 0.5, 0.8}) {
        for (int q : {5, 20, 37, 50}) {
            const double scale = cfg.alpha * cfg.tau / cfg.K();
            const double p = psi(q, scale * c);
            if (p < 1e-9 || 1.0 - p < 1e-9) continue;  // degenerate, rejected by the API
            const double fd = fisher_fd_oracle(c, q, cfg);
            CHECK(fisher_information(c, q, cfg) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
    CHECK_THROWS_AS(fisher_information(0.0, 5, cfg), std::domain_error);
    // Psi degenerate far from the transition
    CHECK_THROWS_AS(fisher_information(1.0, 1, cfg), std::domain_error);
}

TEST_CASE("snr identities") {
    const SensorConfig cfg = paper_config();
    const double c = 0.5;
    const int q = 38;
    const double snr = snr_db(c, q, cfg);
    const double expected = 10.0 * std::log10(c * c * fisher_information(c, q, cfg)) +
                            10.0 * std::log10(200.0);
    CHECK(snr == doctest::Approx(expected).epsilon(1e-12));

    const double lb = snr_lower_bound(c, q, cfg);
    const double theta = jot_exposure(c, cfg);
    CHECK(lb == doctest::Approx(2.0 * (std::log(2.0) - theta + q * std::log(theta) -
                                       std::lgamma(double(q))))
                    .epsilon(1e-12));
}

TEST_CASE("output and exposure referred snr formulas") {
    const double theta = 10.0;
    const int q = 11, K = 4, T = 25;
    const double p = psi(q, theta);
    CHECK(snr_output_referred(theta, q, K, T) ==
          doctest::Approx(std::sqrt(100.0 * (1.0 - p) / p)).epsilon(1e-12));
    const double gain = std::exp(-theta + q * std::log(theta) - std::lgamma(double(q)));
    CHECK(snr_exposure_referred(theta, q, K, T) ==
          doctest::Approx(gain * std::sqrt(100.0 / (p * (1.0 - p)))).epsilon(1e-12));
}

TEST_CASE("oracle threshold rule") {
    const SensorConfig cfg = paper_config();
    CHECK(oracle_threshold(0.5, cfg).q == 38);  // floor(300*0.5/4)+1
    CHECK_FALSE(oracle_threshold(0.5, cfg).clamped);
    const auto clamped = oracle_threshold(0.999, cfg);
    CHECK(clamped.q == 60);
    CHECK(clamped.clamped);
    CHECK_THROWS_AS(oracle_threshold(0.0, cfg), std::domain_error);
}

TEST_CASE("snr argmax stays within one of the lower-bound argmax") {
    const SensorConfig cfg = paper_config();
    // values chosen so the jot exposure is never an integer (argmax ties)
    for (double c : {0.21, 0.45, 0.7}) {
        const double theta = jot_exposure(c, cfg);
        int lb_best = 1;
        double best = -1e300;
        for (int q = 1; q <= 70; ++q) {
            const double v = snr_lower_bound(c, q, cfg);
            if (v > best) { best = v; lb_best = q; }
        }
        CHECK(lb_best == static_cast<int>(std::floor(theta)) + 1);
        CHECK(std::abs(snr_argmax_q(c, cfg, 70) - lb_best) <= 1);
    }
}

TEST_CASE("bit density moments") {
    const SensorConfig cfg = paper_config();
    const auto m = bit_density_moments(0.5, 38, cfg);
    const double p = psi(38, 37.5);
    CHECK(m.mean == doctest::Approx(p).epsilon(1e-14));
    CHECK(m.variance == doctest::Approx(p * (1.0 - p) / 200.0).epsilon(1e-14));
}

TEST_CASE("checkerboard design basic shape") {
    SensorConfig cfg;
    cfg.alpha = 60.0;
    cfg.kx = 2;
    cfg.ky = 2;
    cfg.T = 25;
    cfg.q_max = 16;
    const auto d = checkerboard_design(cfg, 0.01, 1.0, 0.05);
    CHECK(d.q1 >= 1);
    CHECK(d.q1 <= d.q2);
    CHECK(d.q2 <= 16);
    CHECK(d.q1 < d.q2);  // two distinct thresholds beat any uniform pair
    CHECK(std::isfinite(d.objective));
    CHECK_THROWS_AS(checkerboard_design(cfg, 0.5, 0.4, 0.01), std::invalid_argument);
}

TEST_CASE("phase transition rows are coherent") {
    const SensorConfig cfg = paper_config();
    const auto rows = phase_transition_curve(0.5, cfg, 20, 56, 2e-4);
    REQUIRE(rows.size() == 37);
    const auto dset = delta_admissible_set(37.5, 2e-4, 4, 50, 60);
    REQUIRE(dset.has_value());
    for (const auto& r : rows) {
        CHECK(r.in_delta_set == dset->contains(r.q));
        CHECK(r.bit_density == doctest::Approx(1.0 - psi(r.q, 37.5)).epsilon(1e-12));
        if (r.in_delta_set)
            CHECK(r.e_chat_ratio == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("csv writers emit the documented headers") {
    const SensorConfig cfg = paper_config();
    write_snr_csv(snr_table(cfg, {0.5}, 30, 32), "test_snr.csv", "stamp");
    std::ifstream in("test_snr.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "# stamp");
    std::getline(in, line);
    CHECK(line == "c,q,snr_db,fisher,lower_bound");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
    in.close();
    std::remove("test_snr.csv");

    write_phase_csv(phase_transition_curve(0.5, cfg, 30, 31), "test_phase.csv");
    std::ifstream pin("test_phase.csv");
    std::getline(pin, line);
    CHECK(line == "q,e_chat_ratio,bit_density,snr_db,in_delta_set");
    pin.close();
    std::remove("test_phase.csv");
}
