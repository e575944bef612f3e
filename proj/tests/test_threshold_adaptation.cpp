#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "qis/special_functions.hpp"
#include "qis/threshold_adaptation.hpp"

using namespace qis;

namespace {

SensorConfig adapt_config() {
    SensorConfig cfg;
    cfg.alpha = 300.0;
    cfg.kx = 2;
    cfg.ky = 2;
    cfg.T = 20;
    cfg.q_max = 16;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("bisection step follows the bracket rule") {
    BisectionState s = initial_bisection_state(16);
    CHECK(s.q_a == 1);
    CHECK(s.q_b == 16);
    CHECK(s.q_m == 9);

    // density 0.9 at q_M=9: too many ones, raise the lower end
    CHECK(bisection_step(s, 0.9, 0.02));
    CHECK(s.q_a == 9);
    CHECK(s.q_b == 16);
    CHECK(s.q_m == 13);
    CHECK_FALSE(s.converged);

    // density within tol converges in place
    CHECK(bisection_step(s, 0.51, 0.02));
    CHECK(s.converged);
    CHECK(s.q_m == 13);

    // converged state is a no-op
    const BisectionState before = s;
    CHECK_FALSE(bisection_step(s, 0.1, 0.02));
    CHECK(s.q_m == before.q_m);
    CHECK(s.frames_consumed == before.frames_consumed);
}

TEST_CASE("bracket invariant and termination bound") {
    // adversarial density sequences keep q_A < q_B until convergence and
    // terminate within ceil(log2 q_max) + 1 steps
    for (int pattern = 0; pattern < 8; ++pattern) {
        BisectionState s = initial_bisection_state(16);
        int steps = 0;
        while (!s.converged) {
            CHECK(s.q_a < s.q_b);
            CHECK(s.q_m > s.q_a);
            CHECK(s.q_m <= s.q_b);
            const double d = (pattern >> (steps % 3)) & 1 ? 0.9 : 0.1;
            bisection_step(s, d, 0.02);
            ++steps;
            REQUIRE(steps <= 5);
        }
    }
}

TEST_CASE("analytic densities reach the threshold transition") {
    for (double theta = 1.0; theta <= 15.0; theta += 0.25) {
        const auto fp = bisect_analytic(theta, 16, 0.02);
        CHECK(fp.iterations <= 5);
        // fixed point straddles the half-density transition or the bracket
        // collapsed onto it
        const double d_here = 1.0 - psi(fp.q, theta);
        const double d_next = 1.0 - psi(fp.q + 1, theta);
        const bool straddles = d_here >= 0.5 - 0.02 && d_next < 0.5 + 0.02;
        const int oracle = static_cast<int>(std::floor(theta)) + 1;
        CHECK((straddles || std::abs(fp.q - oracle) <= 1));
    }
}

TEST_CASE("oracle map uses block mean intensity") {
    const SensorConfig cfg = adapt_config();
    Image img(2, 1);
    img.at(0, 0) = 0.1;   // theta 7.5  -> q 8
    img.at(1, 0) = 0.21;  // theta 15.75 -> q 16
    const ThresholdMap map = oracle_map(img, cfg);
    CHECK(map.q_at(0, 0) == 8);
    CHECK(map.q_at(2, 0) == 16);
}

TEST_CASE("run_bisection on a constant image converges uniformly") {
    const SensorConfig cfg = adapt_config();
    Image img(6, 6, 0.1);  // theta = 7.5
    BisectionOptions opts;
    opts.adapt_frames = 8;
    opts.block_w = 4;  // 2x2 pixel blocks, 16 bits per frame
    opts.block_h = 4;
    opts.tol = 0.05;
    const AdaptationReport report = run_bisection(img, cfg, opts);

    std::set<int> qs(report.final_map.q_values.begin(), report.final_map.q_values.end());
    CHECK(qs.size() <= 3);  // sampling noise may split neighbours
    for (int q : qs) CHECK(std::abs(q - 8) <= 2);
    CHECK(report.adapt_frames_used + report.reconstruction_frames == cfg.T);
    CHECK(report.adapt_frames_used <= 8);
    CHECK(report.mse_to_oracle.size() == static_cast<std::size_t>(report.adapt_frames_used));
    for (const auto& row : report.trace) {
        CHECK(row.q_a >= 1);
        CHECK(row.q_b <= 16);
        CHECK(row.bit_density >= 0.0);
        CHECK(row.bit_density <= 1.0);
    }
}

TEST_CASE("run_bisection error paths") {
    const SensorConfig cfg = adapt_config();
    Image img(4, 4, 0.5);
    BisectionOptions opts;
    opts.adapt_frames = 0;
    CHECK_THROWS_AS(run_bisection(img, cfg, opts), std::invalid_argument);
    opts.adapt_frames = cfg.T;
    CHECK_THROWS_AS(run_bisection(img, cfg, opts), std::invalid_argument);
    opts.adapt_frames = 4;
    opts.block_w = 3;  // not a multiple of kx
    CHECK_THROWS_AS(run_bisection(img, cfg, opts), std::invalid_argument);
}

TEST_CASE("adaptation reduces distance to the oracle map") {
    const SensorConfig cfg = adapt_config();
    Image img(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.at(x, y) = 0.05 + 0.9 * x / 7.0;

    double first = 0.0, last = 0.0;
    const int seeds = 12;
    for (int s = 0; s < seeds; ++s) {
        SensorConfig run_cfg = cfg;
        run_cfg.seed = 100 + s;
        BisectionOptions opts;
        opts.adapt_frames = 8;
        opts.tol = 0.05;
        const AdaptationReport r = run_bisection(img, run_cfg, opts);
        REQUIRE(!r.mse_to_oracle.empty());
        first += r.mse_to_oracle.front();
        last += r.mse_to_oracle.back();
    }
    CHECK(last < first);
}

TEST_CASE("markov step transition rule") {
    CounterRng rng(99);
    MarkovState s;
    s.q = 5;
    s.sub_state = 8;
    s.L = 4;
    s.beta = 1.0;  // never transitions
    for (int i = 0; i < 50; ++i) markov_step(s, i % 2, 16, rng);
    CHECK(s.q == 5);
    CHECK(s.sub_state == 8);

    s.beta = 0.0;  // always transitions
    s.sub_state = 15;
    markov_step(s, 1, 16, rng);  // overflow
    CHECK(s.q == 6);
    CHECK(s.sub_state == 8);
    s.sub_state = 0;
    markov_step(s, 0, 16, rng);  // underflow
    CHECK(s.q == 5);
    CHECK(s.sub_state == 8);

    // clamping at the ends
    s.q = 16;
    s.sub_state = 15;
    markov_step(s, 1, 16, rng);
    CHECK(s.q == 16);
    CHECK(s.sub_state == 15);
    s.q = 1;
    s.sub_state = 0;
    markov_step(s, 0, 16, rng);
    CHECK(s.q == 1);
    CHECK(s.sub_state == 0);

    CHECK_THROWS_AS(markov_step(s, 2, 16, rng), std::invalid_argument);
}

TEST_CASE("markov chain drifts toward the oracle under constant exposure") {
    // bright constant exposure: bits mostly 1 below the transition, pushing
    // the threshold upward
    const double theta = 9.5;
    const int q_max = 16;
    double mean_q = 0.0;
    const int chains = 100;
    for (int chain = 0; chain < chains; ++chain) {
        CounterRng rng(2000 + chain);
        MarkovState s;
        s.beta = 0.25;
        for (int step = 0; step < 600; ++step) {
            CounterRng bit_rng(7000 + chain, step, 0);
            const int bit = poisson_sample(theta, bit_rng) >= s.q ? 1 : 0;
            markov_step(s, bit, q_max, rng);
        }
        mean_q += s.q;
    }
    mean_q /= chains;
    CHECK(mean_q > 7.0);
    CHECK(mean_q < 13.0);
}

TEST_CASE("conditional reset limits") {
    SensorConfig cfg = adapt_config();
    cfg.T = 16;

    Image dark(4, 4, 0.0);
    const auto zero = conditional_reset_reconstruct(dark, cfg, ResetDirection::Ascending);
    for (double v : zero.estimate.pixels) CHECK(v == 0.0);

    // saturating scene: every frame fires, estimate hits the digital ceiling
    SensorConfig hot = cfg;
    hot.alpha = 5000.0;
    Image bright(4, 4, 1.0);
    const auto sat = conditional_reset_reconstruct(bright, hot, ResetDirection::Descending);
    double q_sum = 0.0;
    for (int t = 0; t < hot.T; ++t) q_sum += hot.q_max - t % hot.q_max;
    const double ceiling = hot.K() / (hot.alpha * hot.tau) * q_sum / hot.T;
    for (double v : sat.raw_estimate.pixels)
        CHECK(v == doctest::Approx(ceiling).epsilon(1e-12));
}

TEST_CASE("checkerboard map parity") {
    CheckerboardDesign d{4, 12, 0.0};
    const ThresholdMap map = checkerboard_map(d, 4, 4, 2, 2);
    CHECK(map.q_at(0, 0) == 4);
    CHECK(map.q_at(2, 0) == 12);
    CHECK(map.q_at(0, 2) == 12);
    CHECK(map.q_at(2, 2) == 4);

    CheckerboardDesign u{7, 7, 0.0};
    const ThresholdMap um = checkerboard_map(u, 4, 4, 2, 2);
    for (int q : um.q_values) CHECK(q == 7);
}

TEST_CASE("adaptation trace csv header") {
    std::vector<AdaptationTraceRow> trace(1);
    trace[0].iteration = 2;
    trace[0].block_id = 3;
    trace[0].q_a = 1;
    trace[0].q_b = 8;
    trace[0].q_m = 5;
    trace[0].bit_density = 0.25;
    write_adaptation_trace(trace, "test_trace.csv", "stamp");
    std::ifstream in("test_trace.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "# stamp");
    std::getline(in, line);
    CHECK(line == "iteration,block_id,q_a,q_b,q_m,bit_density,converged");
    std::getline(in, line);
    CHECK(line == "2,3,1,8,5,0.25,0");
    in.close();
    std::remove("test_trace.csv");
}
