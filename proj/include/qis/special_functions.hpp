#pragma once

#include <optional>

namespace qis {

/// Maximal contiguous range of integer thresholds q with
/// epsilon <= Psi_q(theta) <= 1 - epsilon.
struct AdmissibleSet {
    int lo = 0;
    int hi = 0;
    double epsilon = 0.0;

    bool contains(int q) const { return lo <= q && q <= hi; }
    int width() const { return hi - lo + 1; }
};

/// Normalized upper incomplete Gamma function for integer shape,
/// Psi_q(theta) = sum_{k=0}^{q-1} theta^k e^{-theta} / k!.
/// Equals P(Y < q) for Y ~ Poisson(theta). Result is clamped to [0,1].
/// Throws std::domain_error on q < 1 or theta < 0.
double psi(int q, double theta);

/// d/dtheta Psi_q(theta) = -theta^(q-1) e^(-theta) / Gamma(q), always <= 0.
/// Throws std::domain_error on q < 1 or theta <= 0.
double psi_derivative(int q, double theta);

/// Inverse of psi in theta for fixed q: returns theta > 0 with
/// |Psi_q(theta) - z| <= 1e-12. Requires z strictly inside (0,1).
double psi_inverse(int q, double z);

/// Maximal interval [lo,hi] within [1,q_max] where
/// epsilon <= Psi_q(theta) <= 1-epsilon. Psi_q(theta) is increasing in q,
/// so the admissible q form a contiguous interval; found by binary search.
/// Returns nullopt when no q qualifies.
std::optional<AdmissibleSet> q_admissible_set(double theta, double epsilon, int q_max);

/// Tolerance derived from the saturation-probability bound:
/// epsilon = 1 - (delta/2)^(1/(K*T)).
double delta_epsilon(double delta, int K, int T);

/// q_admissible_set with epsilon = delta_epsilon(delta, K, T).
std::optional<AdmissibleSet> delta_admissible_set(double theta, double delta,
                                                  int K, int T, int q_max);

}  // namespace qis
