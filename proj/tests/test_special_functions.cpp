#include <stdexcept>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qis/special_functions.hpp"

using namespace qis;

namespace {

// Independent oracle: Poisson CDF P(Y < q) with every term evaluated
// through lgamma, no recurrence shared with the implementation.
double poisson_cdf_oracle(int q, double theta) {
    double sum = 0.0;
    for (int k = 0; k < q; ++k)
        sum += std::exp(k * std::log(theta) - theta - std::lgamma(k + 1.0));
    return sum;
}

}  // namespace

TEST_CASE("psi matches the direct Poisson CDF") {
    for (int q : {1, 2, 3, 7, 16, 40, 60}) {
        for (double theta : {0.01, 0.5, 1.0, 4.0, 15.0, 37.5, 80.0, 200.0}) {
            CHECK(psi(q, theta) == doctest::Approx(poisson_cdf_oracle(q, theta))
                                       .epsilon(1e-12)
                                       .scale(1.0));
        }
    }
}

TEST_CASE("psi boundary values and monotonicity") {
    CHECK(psi(1, 0.0) == 1.0);
    CHECK(psi(5, 0.0) == 1.0);
    CHECK(psi(1, 800.0) == 0.0);  // log-domain path underflows to zero
    CHECK(psi(3, 1e4) == 0.0);

    for (int q = 1; q < 30; ++q)
        CHECK(psi(q, 12.0) < psi(q + 1, 12.0));  // increasing in q
    double prev = 1.0;
    for (double theta = 0.5; theta < 40.0; theta += 0.5) {
        const double v = psi(10, theta);
        CHECK(v <= prev);  // decreasing in theta
        prev = v;
    }

    CHECK_THROWS_AS(psi(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(psi(1, -0.1), std::domain_error);
}

TEST_CASE("psi_derivative matches central differences") {
    const double h = 1e-6;
    for (int q : {1, 2, 8, 25}) {
        for (double theta : {0.3, 2.0, 9.0, 30.0}) {
            const double fd = (psi(q, theta + h) - psi(q, theta - h)) / (2.0 * h);
            CHECK(psi_derivative(q, theta) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(psi_derivative(2, 0.0), std::domain_error);
}

TEST_CASE("psi_inverse round trip") {
    for (int q : {1, 2, 5, 16, 48, 60}) {
        for (double z : {1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-6}) {
            const double theta = psi_inverse(q, z);
            CHECK(theta > 0.0);
            CHECK(psi(q, theta) == doctest::Approx(z).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(psi_inverse(3, 0.0), std::domain_error);
    CHECK_THROWS_AS(psi_inverse(3, 1.0), std::domain_error);
}

TEST_CASE("q_admissible_set agrees with a brute-force scan") {
    for (double theta : {0.7, 3.0, 12.0, 37.5, 90.0}) {
        for (double eps : {0.001, 0.045, 0.2}) {
            const int q_max = 200;
            int lo = 0, hi = -1;
            for (int q = 1; q <= q_max; ++q) {
                const double p = psi(q, theta);
                if (p >= eps && p <= 1.0 - eps) {
                    if (lo == 0) lo = q;
                    hi = q;
                }
            }
            const auto set = q_admissible_set(theta, eps, q_max);
            if (lo == 0) {
                CHECK_FALSE(set.has_value());
            } else {
                REQUIRE(set.has_value());
                CHECK(set->lo == lo);
                CHECK(set->hi == hi);
            }
        }
    }
}

TEST_CASE("q_admissible_set empty when nothing qualifies") {
    // q_max far below the transition leaves Psi ~ 0 everywhere
    CHECK_FALSE(q_admissible_set(200.0, 0.05, 10).has_value());
}

TEST_CASE("delta_epsilon formula") {
    CHECK(delta_epsilon(2e-4, 4, 50) ==
          doctest::Approx(1.0 - std::pow(1e-4, 1.0 / 200.0)).epsilon(1e-14));
    CHECK_THROWS_AS(delta_epsilon(0.0, 4, 50), std::domain_error);
    CHECK_THROWS_AS(delta_epsilon(0.5, 0, 50), std::domain_error);
}
