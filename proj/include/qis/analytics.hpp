#pragma once

#include <string>
#include <vector>

#include "qis/forward_model.hpp"

namespace qis {

/// One point of the SNR-vs-intensity family.
struct SnrPoint {
    double c = 0.0;
    int q = 1;
    double snr_db = 0.0;
    double fisher = 0.0;
    double lower_bound = 0.0;  // L_q(c), natural-log units
};

struct OracleThreshold {
    int q = 1;
    bool clamped = false;  // hit the [1, q_max] boundary
};

struct CheckerboardDesign {
    int q1 = 1;
    int q2 = 1;
    double objective = 0.0;  // integrated CRLB
};

struct PhaseTransitionRow {
    int q = 1;
    double e_chat_ratio = 0.0;  // analytic E[chat]/c with half-count clamp
    double bit_density = 0.0;   // 1 - Psi_q(theta)
    double snr_db = 0.0;
    bool in_delta_set = false;
};

/// Mean photon count per jot at intensity c.
inline double jot_exposure(double c, const SensorConfig& config) {
    return config.alpha * config.tau * c / config.K();
}

/// Fisher information of one binary measurement about c,
/// (alpha*tau/K)^2 e^{-2 theta} theta^{2q-2} / (Gamma(q)^2 Psi (1-Psi)).
/// Throws std::domain_error when Psi_q(theta) is 0 or 1 to machine precision.
double fisher_information(double c, int q, const SensorConfig& config);

/// 10 log10(c^2 I_q(c)) + 10 log10(KT).
double snr_db(double c, int q, const SensorConfig& config);

/// sqrt(KT (1-Psi)/Psi), the ratio E[S]/sqrt(Var S).
double snr_output_referred(double theta, int q, int K, int T);

/// e^{-theta} theta^q / Gamma(q) * sqrt(KT / (Psi (1-Psi))).
double snr_exposure_referred(double theta, int q, int K, int T);

/// L_q(c) = 2 (ln 2 - theta + q ln theta - ln Gamma(q)).
double snr_lower_bound(double c, int q, const SensorConfig& config);

/// q* = floor(alpha*tau*c/K) + 1, clamped to [1, q_max].
OracleThreshold oracle_threshold(double c, const SensorConfig& config);

/// Exhaustive integer argmax of snr_db over [1, q_hi].
int snr_argmax_q(double c, const SensorConfig& config, int q_hi);

struct BitDensityMoments {
    double mean = 0.0;      // E[gamma] = Psi
    double variance = 0.0;  // Psi (1-Psi) / KT
};
BitDensityMoments bit_density_moments(double c, int q, const SensorConfig& config);

/// Two-threshold checkerboard design: exhaustive (q1 <= q2) search minimizing
/// the trapezoid integral over c of CRLB(q1,q2,c), where the CRLB is the
/// reciprocal of the summed per-threshold information terms. Grid points with
/// degenerate Psi contribute a large finite penalty.
CheckerboardDesign checkerboard_design(const SensorConfig& config, double c_min,
                                       double c_max, double grid_step = 0.01);

std::vector<PhaseTransitionRow> phase_transition_curve(double c, const SensorConfig& config,
                                                       int q_lo, int q_hi,
                                                       double delta = 2e-4);

/// SNR family table rows (c, q, snr_db, fisher, lower_bound).
std::vector<SnrPoint> snr_table(const SensorConfig& config, const std::vector<double>& cs,
                                int q_lo, int q_hi);

void write_snr_csv(const std::vector<SnrPoint>& points, const std::string& path,
                   const std::string& comment = "");
void write_phase_csv(const std::vector<PhaseTransitionRow>& rows, const std::string& path,
                     const std::string& comment = "");

}  // namespace qis
