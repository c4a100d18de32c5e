#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ggm {

// Parameters of the generalized SOS model on a Cayley tree of order k.
// The coupling J and inverse temperature beta enter only through
// theta = exp(-J*beta) in (0,1).  p weighs even height differences,
// q_w odd ones ("q_w" because q is also the customary name of the
// boundary-law period); p == q_w recovers the plain SOS model.
struct ModelParams {
    double theta;
    double p;
    double q_w;
    int k;

    ModelParams(double theta_, double p_, double q_w_, int k_)
        : theta(theta_), p(p_), q_w(q_w_), k(k_) {
        if (!(theta > 0.0) || !(theta < 1.0))
            throw std::invalid_argument("ModelParams: theta must lie in (0,1), got " +
                                        std::to_string(theta_));
        if (!(p > 0.0))
            throw std::invalid_argument("ModelParams: p must be positive");
        if (!(q_w > 0.0))
            throw std::invalid_argument("ModelParams: q_w must be positive");
        if (k < 1)
            throw std::invalid_argument("ModelParams: k must be >= 1");
    }
};

// Exponent carried by a height difference m: alpha(|m|)*|m|, i.e. p*|m|
// for even |m| and q_w*|m| for odd |m|.  Zero at m = 0.
inline double alpha_weight(std::int64_t m, const ModelParams& params) {
    if (m == 0) return 0.0;
    const std::int64_t a = m < 0 ? -m : m;
    const double w = (a % 2 == 0) ? params.p : params.q_w;
    return w * static_cast<double>(a);
}

// Single-edge Boltzmann weight theta^(alpha(|i-j|)*|i-j|).  Computed in
// log space so long-distance weights do not accumulate pow-chain drift.
inline double transfer_q(std::int64_t i, std::int64_t j, const ModelParams& params) {
    const double w = alpha_weight(i - j, params);
    if (w == 0.0) return 1.0;
    return std::exp(w * std::log(params.theta));
}

// Unique root of theta + 1/theta = tau inside (0,1).  Evaluated as
// 2/(tau + sqrt(tau^2-4)) to dodge the cancellation in the textbook form
// (tau - sqrt(tau^2-4))/2.
inline double theta_from_tau(double tau) {
    if (!(tau > 2.0))
        throw std::invalid_argument("theta_from_tau: tau must exceed 2, got " +
                                    std::to_string(tau));
    return 2.0 / (tau + std::sqrt(tau * tau - 4.0));
}

inline double tau_from_theta(double theta) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("tau_from_theta: theta must lie in (0,1)");
    return theta + 1.0 / theta;
}

// Strong type for the reparameterization tau = theta + 1/theta > 2 under
// which the k=2, 2p=q case of the boundary-law system becomes polynomial.
class Tau {
  public:
    explicit Tau(double value) : value_(value) {
        if (!(value > 2.0))
            throw std::invalid_argument("Tau: value must exceed 2");
    }

    static Tau from_theta(double theta) { return Tau(tau_from_theta(theta)); }

    double value() const { return value_; }
    double theta() const { return theta_from_tau(value_); }

  private:
    double value_;
};

}  // namespace ggm
