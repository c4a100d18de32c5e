#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ggm/model.hpp"
#include "ggm/special_k2.hpp"

namespace ggm {

// Configuration of a tau sweep over the closed-form census.  The census
// is valid for k = 2 with 2p = q_w, where tau means theta^{q_w} + theta^{-q_w}.
struct ScanConfig {
    double tau_min;
    double tau_max;
    int steps;
    int k = 2;
    double p = 0.5;
    double q_w = 1.0;
    double eps = 1e-14;

    void validate() const {
        if (!(tau_min > 2.0)) throw std::invalid_argument("scan: tau_min must exceed 2");
        if (!(tau_min < tau_max)) throw std::invalid_argument("scan: tau_min must be below tau_max");
        if (steps < 1) throw std::invalid_argument("scan: steps must be >= 1");
        if (k != 2 || std::abs(2.0 * p - q_w) > 1e-12 * std::max(1.0, q_w))
            throw std::invalid_argument("scan: census requires k = 2 and 2p = q_w");
    }
};

struct PhaseScanRow {
    double tau;
    double theta;
    int n_symmetric;
    int n_asym_ordered;
    int n_asym_unordered;
    int d1_sign;
    int d2_sign;
    int paper_thm2_count;
    bool is_critical;
};

inline constexpr const char* kPhaseScanCsvHeader =
    "tau,theta,n_symmetric,n_asym_ordered,n_asym_unordered,d1_sign,d2_sign,"
    "paper_thm2_count,is_critical";

// Rows in ascending tau, endpoints included (steps == 1 emits tau_min only).
inline std::vector<PhaseScanRow> compute_phase_scan(const ScanConfig& config) {
    config.validate();
    std::vector<PhaseScanRow> rows;
    rows.reserve(static_cast<std::size_t>(config.steps));
    for (int i = 0; i < config.steps; ++i) {
        const double frac = config.steps == 1
                                ? 0.0
                                : static_cast<double>(i) / static_cast<double>(config.steps - 1);
        const double tau = config.tau_min + frac * (config.tau_max - config.tau_min);
        const k2::CountReport rep = k2::count_report(tau);
        PhaseScanRow row{};
        row.tau = tau;
        // theta of the underlying model: theta^{q_w} + theta^{-q_w} = tau.
        row.theta = std::exp(std::log(theta_from_tau(tau)) / config.q_w);
        row.n_symmetric = rep.n_symmetric;
        row.n_asym_ordered = rep.n_asym_ordered;
        row.n_asym_unordered = rep.n_asym_unordered;
        row.d1_sign = rep.d1_sign;
        row.d2_sign = rep.d2_sign;
        row.paper_thm2_count = rep.paper_thm2_count;
        row.is_critical = rep.is_critical;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ggm
