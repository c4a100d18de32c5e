#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ggm/compensated.hpp"
#include "ggm/errors.hpp"
#include "ggm/model.hpp"
#include "ggm/series.hpp"

namespace ggm {

// Candidate period-n boundary law in the u-convention: the underlying
// boundary law values are z_i = u_i^k, and the fixed-point relation
// u_i = N_i/N_0 forces u_0 = 1, which pins the scale gauge.
struct PeriodicBoundaryLaw {
    std::vector<double> u;

    explicit PeriodicBoundaryLaw(std::vector<double> values) : u(std::move(values)) {
        if (u.empty()) throw std::invalid_argument("PeriodicBoundaryLaw: empty");
        if (u.front() != 1.0)
            throw std::invalid_argument("PeriodicBoundaryLaw: u[0] must equal 1");
        for (double v : u)
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument("PeriodicBoundaryLaw: values must be positive finite");
    }

    static PeriodicBoundaryLaw constant(int n) {
        return PeriodicBoundaryLaw(std::vector<double>(static_cast<std::size_t>(n), 1.0));
    }

    int n() const { return static_cast<int>(u.size()); }
};

// Circulant coefficient matrix of the period-n system: entry(i,r) is the
// weight of u_r^k in row i, equal to c[(r-i) mod n] where c[d] is the
// residue-class sum over m == d (mod n).
class CoefficientMatrix {
  public:
    CoefficientMatrix(std::vector<double> generator)
        : c_(std::move(generator)) {
        if (c_.empty()) throw std::invalid_argument("CoefficientMatrix: empty generator");
        for (double v : c_)
            if (!(v > 0.0)) throw std::invalid_argument("CoefficientMatrix: entries must be positive");
    }

    int n() const { return static_cast<int>(c_.size()); }
    const std::vector<double>& generator() const { return c_; }

    double entry(int i, int r) const {
        const int n_ = n();
        return c_[static_cast<std::size_t>((((r - i) % n_) + n_) % n_)];
    }

    double row_sum() const {
        NeumaierSum s;
        for (double v : c_) s.add(v);
        return s.value();
    }

  private:
    std::vector<double> c_;
};

inline CoefficientMatrix build_matrix(int n, const ModelParams& params, double eps) {
    if (n < 1) throw std::invalid_argument("build_matrix: n must be >= 1");
    std::vector<double> c(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) c[static_cast<std::size_t>(d)] = residue_weight_sum(d, n, params, eps).value;
    return CoefficientMatrix(std::move(c));
}

namespace detail {

// Double-double helpers (error-free transforms).  The solver evaluates
// its residual in roughly 2x106-bit precision: at a branch-merge point the
// plain double residual rounds to exactly zero on a plateau of radius
// ~cbrt(eps) around the root, which would make distinct Newton iterates
// indistinguishable; the extended residual shrinks that plateau below the
// dedupe radius.
struct DD {
    double hi = 0.0;
    double lo = 0.0;
};

inline DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_norm(double hi, double lo) {
    const double s = hi + lo;
    return {s, lo - (s - hi)};
}

inline DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    return quick_norm(s.hi, s.lo + a.lo + b.lo);
}

inline DD two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline DD dd_mul(DD a, DD b) {
    DD p = two_prod(a.hi, b.hi);
    return quick_norm(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline DD dd_pow_int(double base, int k) {
    DD acc{1.0, 0.0};
    for (int i = 0; i < k; ++i) acc = dd_mul(acc, DD{base, 0.0});
    return acc;
}

// N_i = sum_d c[d] * u[(i+d) mod n]^k, accumulated over d in a fixed
// ascending order.  The canonical order makes every N_i bit-identical for
// constant laws, so the residual of the free state is exactly zero.
inline std::vector<double> row_values(const std::vector<double>& u,
                                      const CoefficientMatrix& matrix, int k) {
    const int n = matrix.n();
    std::vector<double> uk(u.size());
    for (std::size_t r = 0; r < u.size(); ++r)
        uk[r] = std::pow(u[r], static_cast<double>(k));
    std::vector<double> rows(static_cast<std::size_t>(n));
    const auto& c = matrix.generator();
    for (int i = 0; i < n; ++i) {
        NeumaierSum acc;
        for (int d = 0; d < n; ++d) acc.add(c[static_cast<std::size_t>(d)] * uk[static_cast<std::size_t>((i + d) % n)]);
        rows[static_cast<std::size_t>(i)] = acc.value();
    }
    return rows;
}

inline std::vector<DD> row_values_dd(const std::vector<double>& u,
                                     const CoefficientMatrix& matrix, int k) {
    const int n = matrix.n();
    std::vector<DD> uk(u.size());
    for (std::size_t r = 0; r < u.size(); ++r) uk[r] = dd_pow_int(u[r], k);
    std::vector<DD> rows(static_cast<std::size_t>(n));
    const auto& c = matrix.generator();
    for (int i = 0; i < n; ++i) {
        DD acc{0.0, 0.0};
        for (int d = 0; d < n; ++d)
            acc = dd_add(acc, dd_mul(DD{c[static_cast<std::size_t>(d)], 0.0},
                                     uk[static_cast<std::size_t>((i + d) % n)]));
        rows[static_cast<std::size_t>(i)] = acc;
    }
    return rows;
}

// Extended-precision fixed-point residual F_i = u_i*N_0 - N_i, i = 1..n-1.
inline std::vector<double> residual_dd(const std::vector<double>& u,
                                       const CoefficientMatrix& matrix, int k) {
    const int n = matrix.n();
    const std::vector<DD> rows = row_values_dd(u, matrix, k);
    std::vector<double> f(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) {
        DD v = dd_mul(rows[0], DD{u[static_cast<std::size_t>(i)], 0.0});
        v = dd_add(v, DD{-rows[static_cast<std::size_t>(i)].hi, -rows[static_cast<std::size_t>(i)].lo});
        f[static_cast<std::size_t>(i - 1)] = v.hi + v.lo;
    }
    return f;
}

}  // namespace detail

// Fixed-point residual r_i = u_i * N_0 - N_i.  r_0 == 0 identically under
// the u_0 = 1 normalization; it is reported anyway.
inline std::vector<double> residual(const PeriodicBoundaryLaw& law,
                                    const CoefficientMatrix& matrix, int k) {
    if (law.n() != matrix.n())
        throw std::invalid_argument("residual: law and matrix periods differ");
    const std::vector<double> rows = detail::row_values(law.u, matrix, k);
    std::vector<double> r(law.u.size());
    for (std::size_t i = 0; i < law.u.size(); ++i) r[i] = law.u[i] * rows[0] - rows[i];
    return r;
}

inline double max_abs_residual(const PeriodicBoundaryLaw& law,
                               const CoefficientMatrix& matrix, int k) {
    double m = 0.0;
    for (double v : residual(law, matrix, k)) m = std::max(m, std::abs(v));
    return m;
}

// Jacobian of F_i(v) = u_i*N_0 - N_i, i = 1..n-1, with respect to
// v = (u_1, ..., u_{n-1}):
//   J_ij = delta_ij * N_0 + u_i * k * c[j] * u_j^{k-1} - k * c[(j-i) mod n] * u_j^{k-1}.
// Row-major (n-1) x (n-1).
inline std::vector<double> fixed_point_jacobian(const std::vector<double>& u,
                                                const CoefficientMatrix& matrix, int k) {
    const int n = matrix.n();
    const std::vector<double> rows = detail::row_values(u, matrix, k);
    const double n0 = rows[0];
    std::vector<double> jac(static_cast<std::size_t>((n - 1) * (n - 1)), 0.0);
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            const double ukm1 = std::pow(u[static_cast<std::size_t>(j)], static_cast<double>(k - 1));
            double v = (i == j) ? n0 : 0.0;
            v += u[static_cast<std::size_t>(i)] * k * matrix.entry(0, j) * ukm1;
            v -= k * matrix.entry(i, j) * ukm1;
            jac[static_cast<std::size_t>((i - 1) * (n - 1) + (j - 1))] = v;
        }
    }
    return jac;
}

struct Solution {
    PeriodicBoundaryLaw law;
    double residual;  // max-norm of the fixed-point residual
    std::string branch_label;
};

// Deduplicated solutions, lexicographically sorted by u.
struct SolutionSet {
    std::vector<Solution> solutions;
};

struct NewtonReport {
    SolutionSet set;
    int converged_starts = 0;
    int failed_starts = 0;      // diverged, singular Jacobian, or left the positive orthant
    int unresolved_starts = 0;  // residual below tol but position not resolved (branch merge)
    std::vector<std::string> warnings;
};

namespace detail {

// Gaussian elimination with partial pivoting on a dense row-major system.
// Returns false on a (numerically) singular matrix.  pivot_ratio reports
// max|pivot|/min|pivot| as a cheap conditioning signal.
inline bool solve_dense(std::vector<double> a, std::vector<double> b, int n,
                        std::vector<double>& x, double& pivot_ratio) {
    double pmax = 0.0;
    double pmin = std::numeric_limits<double>::infinity();
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(a[static_cast<std::size_t>(col * n + col)]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(a[static_cast<std::size_t>(r * n + col)]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0) return false;
        pmax = std::max(pmax, best);
        pmin = std::min(pmin, best);
        if (piv != col) {
            for (int cc = col; cc < n; ++cc)
                std::swap(a[static_cast<std::size_t>(col * n + cc)], a[static_cast<std::size_t>(piv * n + cc)]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
        }
        const double d = a[static_cast<std::size_t>(col * n + col)];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[static_cast<std::size_t>(r * n + col)] / d;
            if (f == 0.0) continue;
            for (int cc = col; cc < n; ++cc)
                a[static_cast<std::size_t>(r * n + cc)] -= f * a[static_cast<std::size_t>(col * n + cc)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<std::size_t>(r)];
        for (int cc = r + 1; cc < n; ++cc) s -= a[static_cast<std::size_t>(r * n + cc)] * x[static_cast<std::size_t>(cc)];
        x[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r * n + r)];
    }
    pivot_ratio = pmax / pmin;
    return true;
}

struct StartOutcome {
    enum class Kind { converged, failed, unresolved } kind;
    std::vector<double> u;
    double max_residual = 0.0;
    bool condition_warning = false;
    bool degenerate = false;  // final Jacobian numerically singular (branch merge)
};

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm_inf(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

// Damped Newton from one start.  The step is halved until the residual
// 2-norm decreases and the iterate stays in the positive orthant (the map
// has poles on the boundary).  Iteration continues past the residual
// tolerance until the step itself is resolved, which polishes regular
// roots to machine precision; near branch merges the position cannot be
// resolved below ~sqrt(eps) and the start is reported unresolved instead
// of contributing a spurious near-duplicate.
inline StartOutcome newton_from(std::vector<double> u, const CoefficientMatrix& matrix,
                                int k, double tol) {
    constexpr int kMaxIterations = 140;
    constexpr int kMaxHalvings = 40;
    constexpr double kStepResolved = 1e-12;    // relative: regular-root exit
    constexpr double kStepCertificate = 1e-10; // a point this resolved sits on a root
    const int n = matrix.n();
    const int dim = n - 1;

    StartOutcome out{StartOutcome::Kind::failed, {}, 0.0, false};
    double last_step = std::numeric_limits<double>::infinity();
    double pivot_ratio = 1.0;

    const auto eval_residual = [&](const std::vector<double>& uu) {
        return residual_dd(uu, matrix, k);
    };

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const std::vector<double> f = eval_residual(u);
        const double fmax = norm_inf(f);
        if (fmax == 0.0) {
            last_step = 0.0;
            break;
        }
        const std::vector<double> jac = fixed_point_jacobian(u, matrix, k);
        std::vector<double> step;
        std::vector<double> rhs(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) rhs[i] = -f[i];
        if (!solve_dense(jac, rhs, dim, step, pivot_ratio)) break;
        if (pivot_ratio > 1e12) out.condition_warning = true;
        last_step = norm_inf(step);
        const double scale = std::max(1.0, norm_inf(u));
        if (last_step < kStepResolved * scale) break;

        const double f2 = norm2(f);
        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h < kMaxHalvings; ++h) {
            std::vector<double> trial = u;
            bool positive = true;
            for (int i = 1; i < n; ++i) {
                trial[static_cast<std::size_t>(i)] += lambda * step[static_cast<std::size_t>(i - 1)];
                if (!(trial[static_cast<std::size_t>(i)] > 0.0)) positive = false;
            }
            if (positive && norm2(eval_residual(trial)) < f2) {
                u = std::move(trial);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;  // stalled: either converged to noise floor or degenerate
    }

    const std::vector<double> f = eval_residual(u);
    const double fmax = norm_inf(f);
    const double scale = std::max(1.0, norm_inf(u));
    if (fmax < tol && last_step < kStepCertificate * scale) {
        std::vector<double> probe;
        std::vector<double> rhs(f.size(), 0.0);
        const bool solvable =
            solve_dense(fixed_point_jacobian(u, matrix, k), rhs, dim, probe, pivot_ratio);
        out.degenerate = !solvable || pivot_ratio > 1e10;
        out.kind = StartOutcome::Kind::converged;
        out.u = std::move(u);
        out.max_residual = fmax;
    } else if (fmax < tol) {
        out.kind = StartOutcome::Kind::unresolved;
        out.condition_warning = true;
    }
    return out;
}

}  // namespace detail

// Multi-start grid: every u[i] drawn from a fixed value set, u[0] pinned
// to 1.  Seven values for n <= 4 (the asymmetric branches wander above 10
// for large tau), five for n == 5; larger periods fall back to a coarse
// grid capped at 6561 starts.
inline std::vector<PeriodicBoundaryLaw> default_start_grid(int n) {
    if (n < 1) throw std::invalid_argument("default_start_grid: n must be >= 1");
    std::vector<PeriodicBoundaryLaw> starts;
    if (n == 1) {
        starts.push_back(PeriodicBoundaryLaw::constant(1));
        return starts;
    }
    std::vector<double> values;
    if (n <= 4)
        values = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    else if (n == 5)
        values = {0.25, 0.5, 1.0, 2.0, 4.0};
    else
        values = {0.5, 1.0, 2.0};
    const int dim = n - 1;
    const std::size_t cap = 6561;
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
        std::vector<double> u(static_cast<std::size_t>(n), 1.0);
        for (int i = 0; i < dim; ++i) u[static_cast<std::size_t>(i + 1)] = values[idx[static_cast<std::size_t>(i)]];
        starts.push_back(PeriodicBoundaryLaw(std::move(u)));
        if (starts.size() >= cap) break;
        int pos = dim - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == values.size()) {
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return starts;
}

// Multi-start damped Newton on the period-n system.  Converged points are
// deduplicated at 1e-8 in the max norm (keeping the lower-residual
// representative) and returned lexicographically sorted, so the result is
// deterministic and independent of start enumeration order.
inline NewtonReport solve_newton(int n, const ModelParams& params,
                                 const std::vector<PeriodicBoundaryLaw>& starts,
                                 double tol = 1e-10, double series_eps = 1e-14) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_newton: tol must be positive");
    if (starts.empty()) throw std::invalid_argument("solve_newton: starts must be non-empty");
    constexpr double kDedupeTol = 1e-8;
    constexpr double kResidualCeiling = 1e-8;

    const CoefficientMatrix matrix = build_matrix(n, params, series_eps);
    NewtonReport report;

    if (n == 1) {
        // Normalization pins the only unknown; the free state is the solution.
        report.set.solutions.push_back(Solution{PeriodicBoundaryLaw::constant(1), 0.0, "newton"});
        report.converged_starts = static_cast<int>(starts.size());
        return report;
    }

    struct Candidate {
        std::vector<double> u;
        double residual;
        bool degenerate;
    };
    std::vector<Candidate> found;
    bool condition_warned = false;
    bool merge_warned = false;
    for (const PeriodicBoundaryLaw& start : starts) {
        if (start.n() != n) throw std::invalid_argument("solve_newton: start period mismatch");
        detail::StartOutcome outcome = detail::newton_from(start.u, matrix, params.k, tol);
        if (outcome.condition_warning && !condition_warned) {
            report.warnings.push_back(
                "near-singular Jacobian encountered; tau is close to a branch merge point");
            condition_warned = true;
        }
        switch (outcome.kind) {
            case detail::StartOutcome::Kind::converged:
                ++report.converged_starts;
                found.push_back(Candidate{std::move(outcome.u), outcome.max_residual,
                                          outcome.degenerate});
                break;
            case detail::StartOutcome::Kind::unresolved:
                ++report.unresolved_starts;
                break;
            case detail::StartOutcome::Kind::failed:
                ++report.failed_starts;
                break;
        }
    }

    const auto lex_less = [](const Candidate& a, const Candidate& b) { return a.u < b.u; };
    std::sort(found.begin(), found.end(), lex_less);
    // Points sitting on a numerically singular Jacobian cannot be located
    // better than ~sqrt(jacobian noise); pairs of such points merge at a
    // widened radius so a branch-merge root is reported once.
    std::vector<Candidate> unique;
    for (Candidate& cand : found) {
        bool merged = false;
        for (Candidate& kept : unique) {
            double dist = 0.0;
            for (std::size_t i = 0; i < cand.u.size(); ++i)
                dist = std::max(dist, std::abs(cand.u[i] - kept.u[i]));
            const double radius =
                (cand.degenerate && kept.degenerate) ? 1e-6 : kDedupeTol;
            if (dist < radius) {
                if (radius > kDedupeTol && !merge_warned) {
                    report.warnings.push_back(
                        "degenerate root cluster merged at 1e-6; position is "
                        "resolution-limited at this tau");
                    merge_warned = true;
                }
                if (cand.residual < kept.residual) kept = std::move(cand);
                merged = true;
                break;
            }
        }
        if (!merged) unique.push_back(std::move(cand));
    }
    std::sort(unique.begin(), unique.end(), lex_less);

    for (Candidate& entry : unique) {
        if (entry.residual >= kResidualCeiling) continue;
        report.set.solutions.push_back(
            Solution{PeriodicBoundaryLaw(std::move(entry.u)), entry.residual, "newton"});
    }
    return report;
}

inline NewtonReport solve_newton(int n, const ModelParams& params, double tol = 1e-10,
                                 double series_eps = 1e-14) {
    return solve_newton(n, params, default_start_grid(n), tol, series_eps);
}

// Numerical witness of the periodicity reduction: the right side of the
// raw boundary-law equation, evaluated with a fixed summation window
// around the origin, must take the same value at raw heights i and i+n
// for an n-periodic law.  Returns the worst deviation over i in
// [1, i_range].  The window is enlarged beyond the plain eps-truncation so
// that the amplification by the law values k*(z_max/z_min)^k stays below
// the advertised 10*eps.
inline double verify_periodicity_reduction(const PeriodicBoundaryLaw& law,
                                           const ModelParams& params, int i_range,
                                           double eps) {
    if (i_range < 1) throw std::invalid_argument("verify_periodicity_reduction: i_range >= 1");
    const int n = law.n();
    std::vector<double> z(law.u.size());
    double z_max = 0.0;
    double z_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = std::pow(law.u[i], static_cast<double>(params.k));
        z_max = std::max(z_max, z[i]);
        z_min = std::min(z_min, z[i]);
    }
    const double amplification =
        4.0 * params.k * (z_max / z_min) * std::pow(z_max / z_min, static_cast<double>(params.k - 1)) *
        std::max(1.0, z_max);
    const double eps_inner = std::max(eps / amplification, 1e-300);
    const std::int64_t m_inner = detail::choose_truncation(params, eps_inner);
    const std::int64_t window = m_inner + i_range + n;
    const double log_theta = std::log(params.theta);

    const auto raw_sum = [&](std::int64_t center) {
        NeumaierSum acc;
        for (std::int64_t j = -window; j <= window; ++j) {
            const double w = alpha_weight(center - j, params);
            acc.add(std::exp(w * log_theta) * z[static_cast<std::size_t>(((j % n) + n) % n)]);
        }
        return acc.value();
    };

    const double den = raw_sum(0);
    const auto rhs = [&](std::int64_t i) {
        return std::pow(raw_sum(i) / den, static_cast<double>(params.k));
    };

    double dev = 0.0;
    for (int i = 1; i <= i_range; ++i)
        dev = std::max(dev, std::abs(rhs(i) - rhs(i + n)));
    return dev;
}

}  // namespace ggm
