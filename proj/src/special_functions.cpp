#include "qis/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qis {

namespace {

// theta above which e^{-theta} underflows double range and the partial sum
// has to be accumulated in the log domain.
constexpr double kLogDomainThreshold = 700.0;

double psi_partial_sum(int q, double theta) {
    // t_{k+1} = t_k * theta / (k+1), starting from t_0 = e^{-theta}
    double term = std::exp(-theta);
    double sum = term;
    for (int k = 1; k < q; ++k) {
        term *= theta / k;
        sum += term;
    }
    return sum;
}

double psi_log_domain(int q, double theta) {
    // log t_k = k log(theta) - theta - lgamma(k+1); sum with a running max
    const double lt = std::log(theta);
    double max_log = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < q; ++k) {
        max_log = std::max(max_log, k * lt - theta - std::lgamma(k + 1.0));
    }
    if (max_log == -std::numeric_limits<double>::infinity()) return 0.0;
    double scaled = 0.0;
    for (int k = 0; k < q; ++k) {
        scaled += std::exp(k * lt - theta - std::lgamma(k + 1.0) - max_log);
    }
    const double log_sum = max_log + std::log(scaled);
    return log_sum < -745.0 ? 0.0 : std::exp(log_sum);
}

}  // namespace

double psi(int q, double theta) {
    if (q < 1) throw std::domain_error("psi: threshold q must be >= 1");
    if (theta < 0.0) throw std::domain_error("psi: theta must be >= 0");
    if (theta == 0.0) return 1.0;
    const double value = theta > kLogDomainThreshold ? psi_log_domain(q, theta)
                                                     : psi_partial_sum(q, theta);
    return std::clamp(value, 0.0, 1.0);
}

double psi_derivative(int q, double theta) {
    if (q < 1) throw std::domain_error("psi_derivative: threshold q must be >= 1");
    if (theta <= 0.0) throw std::domain_error("psi_derivative: theta must be > 0");
    return -std::exp((q - 1) * std::log(theta) - theta - std::lgamma(static_cast<double>(q)));
}

double psi_inverse(int q, double z) {
    if (q < 1) throw std::domain_error("psi_inverse: threshold q must be >= 1");
    if (!(z > 0.0 && z < 1.0)) throw std::domain_error("psi_inverse: z must be in (0,1)");

    constexpr double kTol = 1e-12;  // absolute tolerance on Psi

    // Psi_q is strictly decreasing in theta with Psi_q(0) = 1, so bracket
    // [lo, hi] with psi(lo) >= z >= psi(hi).
    double lo = 0.0;
    double hi = q + 10.0 * std::sqrt(static_cast<double>(q)) + 50.0;
    while (psi(q, hi) > z) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("psi_inverse: bracket expansion failed");
    }

    double theta = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = psi(q, theta) - z;
        if (std::abs(f) <= kTol) return theta;
        if (f > 0.0) lo = theta; else hi = theta;

        double next = theta;
        const double d = theta > 0.0 ? psi_derivative(q, theta) : 0.0;
        if (d < 0.0) next = theta - f / d;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // safeguard
        if (next == theta && hi - lo <= 1e-15 * std::max(1.0, theta)) return theta;
        theta = next;
    }
    // Monotone bracketing cannot stall; reaching here indicates a defect.
    throw std::runtime_error("psi_inverse: did not converge");
}

std::optional<AdmissibleSet> q_admissible_set(double theta, double epsilon, int q_max) {
    if (theta <= 0.0) throw std::domain_error("q_admissible_set: theta must be > 0");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::domain_error("q_admissible_set: epsilon must be in (0, 1/2)");
    if (q_max < 1) throw std::domain_error("q_admissible_set: q_max must be >= 1");

    // Psi_q(theta) is strictly increasing in q. lo = first q with Psi >= eps,
    // hi = last q with Psi <= 1-eps.
    auto first_at_least = [&](double bound) {
        int a = 1, b = q_max + 1;  // invariant: psi(b) >= bound or b == q_max+1
        while (a < b) {
            const int mid = a + (b - a) / 2;
            if (psi(mid, theta) >= bound) b = mid; else a = mid + 1;
        }
        return a;  // q_max+1 when none
    };
    const int lo = first_at_least(epsilon);
    if (lo > q_max) return std::nullopt;
    const int hi = first_at_least(std::nextafter(1.0 - epsilon, 2.0)) - 1;
    if (hi < lo) return std::nullopt;
    return AdmissibleSet{lo, hi, epsilon};
}

double delta_epsilon(double delta, int K, int T) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("delta_epsilon: delta must be in (0,1)");
    if (K < 1 || T < 1) throw std::domain_error("delta_epsilon: K and T must be >= 1");
    return 1.0 - std::pow(delta / 2.0, 1.0 / (static_cast<double>(K) * T));
}

std::optional<AdmissibleSet> delta_admissible_set(double theta, double delta,
                                                  int K, int T, int q_max) {
    return q_admissible_set(theta, delta_epsilon(delta, K, T), q_max);
}

}  // namespace qis
