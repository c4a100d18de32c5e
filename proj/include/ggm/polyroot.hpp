#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ggm {

// Dense real polynomial, coefficients in descending degree order.
class Poly {
  public:
    explicit Poly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.size() < 2)
            throw std::invalid_argument("Poly: degree must be >= 1");
        if (coeffs_.front() == 0.0)
            throw std::invalid_argument("Poly: leading coefficient must be nonzero");
        for (double c : coeffs_)
            if (!std::isfinite(c)) throw std::invalid_argument("Poly: non-finite coefficient");
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    double operator()(double x) const {
        double acc = coeffs_.front();
        for (std::size_t i = 1; i < coeffs_.size(); ++i) acc = acc * x + coeffs_[i];
        return acc;
    }

  private:
    std::vector<double> coeffs_;
};

// Number of sign changes in the coefficient sequence, zeros skipped.
// Upper bound on the count of positive roots, matching it in parity.
inline int descartes_positive_bound(const Poly& poly) {
    int changes = 0;
    int prev = 0;
    for (double c : poly.coeffs()) {
        if (c == 0.0) continue;
        const int s = c > 0.0 ? 1 : -1;
        if (prev != 0 && s != prev) ++changes;
        prev = s;
    }
    return changes;
}

// 1 + max |a_i / a_0|: every root has magnitude below this.
inline double cauchy_root_bound(const Poly& poly) {
    const auto& c = poly.coeffs();
    double m = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) m = std::max(m, std::abs(c[i] / c[0]));
    return 1.0 + m;
}

// Deterministic midpoint bisection; endpoints must bracket a sign change.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("bisect: tol must be positive");
    if (!(lo < hi)) throw std::invalid_argument("bisect: need lo < hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("bisect: f(lo) and f(hi) do not bracket a root");
    while (hi - lo >= tol) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) break;  // interval at floating-point resolution
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return lo + (hi - lo) / 2.0;
}

// Discriminant of a*x^3 + b*x^2 + c*x + d: positive iff three distinct
// real roots, negative iff one real root, zero iff a repeated root.
inline double cubic_discriminant(const Poly& poly) {
    if (poly.degree() != 3)
        throw std::invalid_argument("cubic_discriminant: degree must be exactly 3");
    const double a = poly.coeffs()[0];
    const double b = poly.coeffs()[1];
    const double c = poly.coeffs()[2];
    const double d = poly.coeffs()[3];
    return 18.0 * a * b * c * d - 4.0 * b * b * b * d + b * b * c * c -
           4.0 * a * c * c * c - 27.0 * a * a * d * d;
}

}  // namespace ggm
