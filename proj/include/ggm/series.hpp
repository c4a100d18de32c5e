#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "ggm/compensated.hpp"
#include "ggm/errors.hpp"
#include "ggm/model.hpp"

namespace ggm {

// One residue-class weight sum c[d] = sum over m == d (mod n) of
// theta^(alpha(|m|)|m|), truncated at |m| <= truncation_m with a proven
// geometric tail bound below the requested epsilon.
struct WeightSum {
    double value = 0.0;
    double tail_bound = 0.0;
    std::int64_t truncation_m = 0;
};

namespace detail {

inline constexpr std::int64_t kTruncationCap = 1'000'000;

// Smallest M such that the two-sided geometric tail
// 2*r^(M+1)/(1-r), r = theta^min(p,q_w), drops below eps.
inline std::int64_t choose_truncation(const ModelParams& params, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("series: eps must be positive");
    const double c0 = std::min(params.p, params.q_w);
    const double log_r = c0 * std::log(params.theta);  // < 0
    const double r = std::exp(log_r);
    if (!(r < 1.0))
        throw NumericalError("series: theta^min(p,q_w) >= 1, sums do not converge");
    const auto tail = [&](std::int64_t m) {
        return 2.0 * std::exp(static_cast<double>(m + 1) * log_r) / (1.0 - r);
    };
    const double est = std::log(eps * (1.0 - r) / 2.0) / log_r - 1.0;
    std::int64_t m = est > 1.0 ? static_cast<std::int64_t>(est) : 1;
    while (tail(m) >= eps) {
        if (++m > kTruncationCap)
            throw NumericalError(
                "series: truncation cap " + std::to_string(kTruncationCap) +
                " reached before the tail bound fell below eps (theta too close to 1)");
    }
    return m;
}

}  // namespace detail

// c[d] for the period-n grouping of the boundary-law sums.  Terms are
// accumulated in ascending |m| with m and -m paired, using compensated
// addition, so the value is deterministic across platforms and calls.
inline WeightSum residue_weight_sum(std::int64_t d, std::int64_t n,
                                    const ModelParams& params, double eps) {
    if (n < 1) throw std::invalid_argument("residue_weight_sum: n must be >= 1");
    const std::int64_t m_max = detail::choose_truncation(params, eps);
    const std::int64_t dd = ((d % n) + n) % n;
    const double log_theta = std::log(params.theta);

    NeumaierSum acc;
    if (dd == 0) acc.add(1.0);  // m = 0 term
    for (std::int64_t t = 1; t <= m_max; ++t) {
        const bool plus = (t % n) == dd;
        const bool minus = ((n - (t % n)) % n) == dd;
        if (!plus && !minus) continue;
        const double term = std::exp(alpha_weight(t, params) * log_theta);
        if (plus) acc.add(term);
        if (minus) acc.add(term);
    }

    const double c0 = std::min(params.p, params.q_w);
    const double r = std::exp(c0 * log_theta);
    WeightSum out;
    out.value = acc.value();
    out.tail_bound = 2.0 * std::exp(static_cast<double>(m_max + 1) * c0 * log_theta) / (1.0 - r);
    out.truncation_m = m_max;
    return out;
}

// Closed forms of the five coefficients that appear once the period-4
// ansatz is substituted into the boundary-law system and the geometric
// series are summed (valid for any theta in (0,1)):
//   A = 2 theta^q / (1 - theta^{2q})        combined odd classes
//   B = (1 + theta^{4p}) / (1 - theta^{4p}) residue 0 mod 4
//   C = 2 theta^{2p} / (1 - theta^{4p})     residue 2 mod 4
//   D = (1 + theta^{2p}) / (1 - theta^{2p}) all even classes
//   E = theta^q / (1 - theta^{2q})          residues 1, 3 mod 4
// A is stored as 2*E so the pair is exact by construction.
struct Se1Coefficients {
    double A, B, C, D, E;
};

inline Se1Coefficients se1_coefficients(const ModelParams& params) {
    const double th = params.theta;
    const double t_q = std::pow(th, params.q_w);
    const double t_2q = std::pow(th, 2.0 * params.q_w);
    const double t_2p = std::pow(th, 2.0 * params.p);
    const double t_4p = std::pow(th, 4.0 * params.p);
    Se1Coefficients se1{};
    se1.E = t_q / (1.0 - t_2q);
    se1.A = 2.0 * se1.E;
    se1.B = (1.0 + t_4p) / (1.0 - t_4p);
    se1.C = 2.0 * t_2p / (1.0 - t_4p);
    se1.D = (1.0 + t_2p) / (1.0 - t_2p);
    return se1;
}

}  // namespace ggm
