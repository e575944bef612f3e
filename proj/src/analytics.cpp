#include "qis/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qis/special_functions.hpp"

namespace qis {

namespace {

constexpr double kDegeneratePsi = 1e-12;
constexpr double kDegeneratePenalty = 1e12;

// log of e^{-2 theta} theta^{2q-2} / (Gamma(q)^2 Psi (1-Psi)); the shared
// core of the Fisher information and the CRLB terms.
double log_information_core(double theta, int q, double psi_val) {
    return -2.0 * theta + (2.0 * q - 2.0) * std::log(theta) -
           2.0 * std::lgamma(static_cast<double>(q)) - std::log(psi_val) -
           std::log1p(-psi_val);
}

}  // namespace

double fisher_information(double c, int q, const SensorConfig& config) {
    if (!(c > 0.0)) throw std::domain_error("fisher_information: c must be > 0");
    const double theta = jot_exposure(c, config);
    const double p = psi(q, theta);
    if (p < kDegeneratePsi || 1.0 - p < kDegeneratePsi)
        throw std::domain_error("fisher_information: Psi degenerate at this (c,q)");
    const double gain = config.alpha * config.tau / config.K();
    return gain * gain * std::exp(log_information_core(theta, q, p));
}

double snr_db(double c, int q, const SensorConfig& config) {
    const double fisher = fisher_information(c, q, config);
    const double KT = static_cast<double>(config.K()) * config.T;
    return 10.0 * std::log10(c * c * fisher) + 10.0 * std::log10(KT);
}

double snr_output_referred(double theta, int q, int K, int T) {
    const double p = psi(q, theta);
    if (p < kDegeneratePsi || 1.0 - p < kDegeneratePsi)
        throw std::domain_error("snr_output_referred: Psi degenerate");
    return std::sqrt(static_cast<double>(K) * T * (1.0 - p) / p);
}

double snr_exposure_referred(double theta, int q, int K, int T) {
    const double p = psi(q, theta);
    if (p < kDegeneratePsi || 1.0 - p < kDegeneratePsi)
        throw std::domain_error("snr_exposure_referred: Psi degenerate");
    const double log_gain = -theta + q * std::log(theta) - std::lgamma(static_cast<double>(q));
    return std::exp(log_gain) * std::sqrt(static_cast<double>(K) * T / (p * (1.0 - p)));
}

double snr_lower_bound(double c, int q, const SensorConfig& config) {
    const double theta = jot_exposure(c, config);
    if (!(theta > 0.0)) throw std::domain_error("snr_lower_bound: theta must be > 0");
    return 2.0 * (std::log(2.0) - theta + q * std::log(theta) -
                  std::lgamma(static_cast<double>(q)));
}

OracleThreshold oracle_threshold(double c, const SensorConfig& config) {
    if (!(c > 0.0)) throw std::domain_error("oracle_threshold: c must be > 0");
    const int raw = static_cast<int>(std::floor(jot_exposure(c, config))) + 1;
    OracleThreshold result;
    result.q = std::clamp(raw, 1, config.q_max);
    result.clamped = (result.q != raw);
    return result;
}

int snr_argmax_q(double c, const SensorConfig& config, int q_hi) {
    int best_q = 1;
    double best = -std::numeric_limits<double>::infinity();
    for (int q = 1; q <= q_hi; ++q) {
        double s;
        try {
            s = snr_db(c, q, config);
        } catch (const std::domain_error&) {
            continue;
        }
        if (s > best) { best = s; best_q = q; }
    }
    return best_q;
}

BitDensityMoments bit_density_moments(double c, int q, const SensorConfig& config) {
    const double p = psi(q, jot_exposure(c, config));
    const double KT = static_cast<double>(config.K()) * config.T;
    return {p, p * (1.0 - p) / KT};
}

CheckerboardDesign checkerboard_design(const SensorConfig& config, double c_min,
                                       double c_max, double grid_step) {
    if (!(c_min > 0.0 && c_min < c_max && c_max <= 1.0))
        throw std::invalid_argument("checkerboard_design: need 0 < c_min < c_max <= 1");
    if (!(grid_step > 0.0)) throw std::invalid_argument("checkerboard_design: bad grid step");

    std::vector<double> grid;
    for (double c = c_min; c <= c_max + 1e-12; c += grid_step) grid.push_back(std::min(c, c_max));

    // information term per threshold, zero where Psi is degenerate
    const int qm = config.q_max;
    std::vector<std::vector<double>> info(qm + 1, std::vector<double>(grid.size(), 0.0));
    const double gain2 = config.alpha * config.alpha / (2.0 * config.K());
    for (int q = 1; q <= qm; ++q) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double theta = config.alpha * grid[i] / config.K();
            const double p = psi(q, theta);
            if (p < kDegeneratePsi || 1.0 - p < kDegeneratePsi) continue;
            info[q][i] = gain2 * std::exp(log_information_core(theta, q, p));
        }
    }

    CheckerboardDesign best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<double> crlb(grid.size());
    for (int q1 = 1; q1 <= qm; ++q1) {
        for (int q2 = q1; q2 <= qm; ++q2) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double total = info[q1][i] + info[q2][i];
                crlb[i] = total > 0.0 ? std::min(1.0 / total, kDegeneratePenalty)
                                      : kDegeneratePenalty;
            }
            double integral = 0.0;
            for (std::size_t i = 1; i < grid.size(); ++i)
                integral += 0.5 * (crlb[i - 1] + crlb[i]) * (grid[i] - grid[i - 1]);
            if (integral < best.objective) best = {q1, q2, integral};
        }
    }
    return best;
}

std::vector<PhaseTransitionRow> phase_transition_curve(double c, const SensorConfig& config,
                                                       int q_lo, int q_hi, double delta) {
    if (!(c > 0.0)) throw std::domain_error("phase_transition_curve: c must be > 0");
    const double theta = jot_exposure(c, config);
    const double KT = static_cast<double>(config.K()) * config.T;
    const double gamma_lo = 1.0 / (2.0 * KT);
    const auto dset = delta_admissible_set(theta, delta, config.K(), config.T,
                                           std::max(config.q_max, q_hi));
    std::vector<PhaseTransitionRow> rows;
    for (int q = q_lo; q <= q_hi; ++q) {
        PhaseTransitionRow row;
        row.q = q;
        const double p = psi(q, theta);
        row.bit_density = 1.0 - p;
        const double gamma = std::clamp(p, gamma_lo, 1.0 - gamma_lo);
        row.e_chat_ratio = psi_inverse(q, gamma) / theta;
        try {
            row.snr_db = snr_db(c, q, config);
        } catch (const std::domain_error&) {
            row.snr_db = -std::numeric_limits<double>::infinity();
        }
        row.in_delta_set = dset && dset->contains(q);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SnrPoint> snr_table(const SensorConfig& config, const std::vector<double>& cs,
                                int q_lo, int q_hi) {
    std::vector<SnrPoint> points;
    for (double c : cs) {
        for (int q = q_lo; q <= q_hi; ++q) {
            SnrPoint p;
            p.c = c;
            p.q = q;
            try {
                p.fisher = fisher_information(c, q, config);
                p.snr_db = snr_db(c, q, config);
            } catch (const std::domain_error&) {
                p.fisher = 0.0;
                p.snr_db = -std::numeric_limits<double>::infinity();
            }
            p.lower_bound = snr_lower_bound(c, q, config);
            points.push_back(p);
        }
    }
    return points;
}

void write_snr_csv(const std::vector<SnrPoint>& points, const std::string& path,
                   const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out.precision(12);
    out << "c,q,snr_db,fisher,lower_bound\n";
    for (const auto& p : points)
        out << p.c << "," << p.q << "," << p.snr_db << "," << p.fisher << ","
            << p.lower_bound << "\n";
}

void write_phase_csv(const std::vector<PhaseTransitionRow>& rows, const std::string& path,
                     const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    out.precision(12);
    out << "q,e_chat_ratio,bit_density,snr_db,in_delta_set\n";
    for (const auto& r : rows)
        out << r.q << "," << r.e_chat_ratio << "," << r.bit_density << "," << r.snr_db
            << "," << (r.in_delta_set ? 1 : 0) << "\n";
}

}  // namespace qis
