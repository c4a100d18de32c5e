#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ggm/compensated.hpp"
#include "ggm/errors.hpp"
#include "ggm/model.hpp"
#include "ggm/periodic_system.hpp"

namespace ggm {

// One row of the height-chain kernel P(i, j) = l(j) Q(j,i) / sum_s l(s) Q(s,i),
// where l is the boundary law itself, i.e. l(j) = u_{j mod n}^k.  probs
// covers j in [center-window, center+window]; tail_mass_bound carries the
// probability mass outside the window, so probs plus the bound accounts
// for the whole row.
struct TransitionRow {
    std::int64_t center = 0;
    int window = 0;
    std::vector<double> probs;  // index o + window maps to j = center + o
    double tail_mass_bound = 0.0;

    double prob_at(std::int64_t j) const {
        const std::int64_t o = j - center;
        if (o < -window || o > window) return 0.0;
        return probs[static_cast<std::size_t>(o + window)];
    }
};

namespace detail {

inline std::vector<double> law_values(const PeriodicBoundaryLaw& law, const ModelParams& params) {
    std::vector<double> l(law.u.size());
    for (std::size_t i = 0; i < l.size(); ++i)
        l[i] = std::pow(law.u[i], static_cast<double>(params.k));
    return l;
}

// Denominators of the kernel rows, one per height residue:
// den(d) = sum over s in Z of l(s) theta^{w(s-d)} grouped by residue class.
inline std::vector<double> row_denominators(const std::vector<double>& l,
                                            const CoefficientMatrix& matrix) {
    const int n = matrix.n();
    std::vector<double> den(static_cast<std::size_t>(n));
    const auto& c = matrix.generator();
    for (int i = 0; i < n; ++i) {
        NeumaierSum acc;
        for (int d = 0; d < n; ++d)
            acc.add(c[static_cast<std::size_t>(d)] * l[static_cast<std::size_t>((i + d) % n)]);
        den[static_cast<std::size_t>(i)] = acc.value();
    }
    return den;
}

}  // namespace detail

// Kernel row at height i.  The denominator is the full sum over the
// integers (residue-class sums with tail below eps); the in-window
// numerators are evaluated directly, and whatever mass the window misses
// is reported as tail_mass_bound, so the row satisfies
// sum(probs) + tail_mass_bound = 1 up to rounding.
inline TransitionRow transition_row(std::int64_t i, const PeriodicBoundaryLaw& law,
                                    const ModelParams& params, int window, double eps) {
    if (window < 1) throw std::invalid_argument("transition_row: window must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("transition_row: eps must be positive");
    const int n = law.n();
    const std::vector<double> l = detail::law_values(law, params);
    const CoefficientMatrix matrix = build_matrix(n, params, eps);
    const std::vector<double> den = detail::row_denominators(l, matrix);
    const double d = den[static_cast<std::size_t>(((i % n) + n) % n)];
    const double log_theta = std::log(params.theta);

    TransitionRow row;
    row.center = i;
    row.window = window;
    row.probs.resize(static_cast<std::size_t>(2 * window + 1));
    NeumaierSum in_window;
    for (int o = -window; o <= window; ++o) {
        const std::int64_t j = i + o;
        const double w = alpha_weight(o, params);
        const double p = l[static_cast<std::size_t>(((j % n) + n) % n)] * std::exp(w * log_theta) / d;
        row.probs[static_cast<std::size_t>(o + window)] = p;
        in_window.add(p);
    }
    row.tail_mass_bound = std::max(0.0, 1.0 - in_window.value());
    return row;
}

// Normalisability in the sense of the double sum
// sum_{w_x} prod_{z in boundary(x)} sum_{w_z} Q(w_x, w_z) l(w_z):
// for a positive n-periodic law the inner sum g is n-periodic with
// g_min > 0, so the outer sum dominates an infinite constant series and
// diverges.  Periodic laws are therefore never normalisable; g_min is the
// reported witness.
struct NormalisabilityReport {
    bool normalisable = false;
    double g_min = 0.0;
    std::vector<double> residue_inner_sums;  // g over one period of heights
};

inline NormalisabilityReport check_normalisability(const PeriodicBoundaryLaw& law,
                                                   const ModelParams& params,
                                                   double eps = 1e-14) {
    const std::vector<double> l = detail::law_values(law, params);
    const CoefficientMatrix matrix = build_matrix(law.n(), params, eps);
    NormalisabilityReport rep;
    rep.residue_inner_sums = detail::row_denominators(l, matrix);
    rep.g_min = rep.residue_inner_sums.front();
    for (double g : rep.residue_inner_sums) rep.g_min = std::min(rep.g_min, g);
    rep.normalisable = false;
    return rep;
}

// Height and gradient configuration on a finite rooted Cayley subtree of
// depth d: the root plus k children per vertex, vertices indexed
// level-order (children of v are v*k+1 .. v*k+k).  The root height is
// pinned to 0; gradients[v-1] is the height difference along the edge
// into vertex v.
struct GradientSample {
    int depth = 0;
    int k = 0;
    std::vector<std::int64_t> heights;
    std::vector<std::int64_t> gradients;
    std::int64_t clamped_draws = 0;  // draws that fell into the folded tail mass
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform double in [0,1) keyed by (seed, vertex index).  The vertex index
// encodes the root path, so draws are independent of traversal order.
inline double vertex_uniform(std::uint64_t seed, std::uint64_t vertex) {
    const std::uint64_t h = splitmix64(splitmix64(seed) ^ splitmix64(vertex + 1));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Draws one height configuration, children sampled from the kernel row of
// their parent by inverse CDF over the window.  Mass beyond the window is
// folded onto the nearest window edge and counted in clamped_draws; the
// whole sample fails if any row leaves tail mass >= 1e-6.
inline GradientSample sample_tree(const PeriodicBoundaryLaw& law, const ModelParams& params,
                                  int depth, std::uint64_t seed, int window,
                                  double eps = 1e-14) {
    if (depth < 1) throw std::invalid_argument("sample_tree: depth must be >= 1");
    if (window < 1) throw std::invalid_argument("sample_tree: window must be >= 1");
    const int n = law.n();
    const int k = params.k;

    // One canonical row per height residue; a row for center i is the
    // residue row shifted by i.
    std::vector<std::vector<double>> cdf(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const TransitionRow row = transition_row(r, law, params, window, eps);
        if (row.tail_mass_bound >= 1e-6)
            throw NumericalError("sample_tree: window too small, tail mass " +
                                 std::to_string(row.tail_mass_bound));
        std::vector<double>& c = cdf[static_cast<std::size_t>(r)];
        c.resize(row.probs.size());
        NeumaierSum acc;
        for (std::size_t o = 0; o < row.probs.size(); ++o) {
            acc.add(row.probs[o]);
            c[o] = acc.value();
        }
    }

    std::size_t total = 1;
    std::size_t level = 1;
    for (int d = 0; d < depth; ++d) {
        level *= static_cast<std::size_t>(k);
        total += level;
    }

    GradientSample sample;
    sample.depth = depth;
    sample.k = k;
    sample.heights.assign(total, 0);
    sample.gradients.assign(total - 1, 0);

    for (std::size_t v = 0; v + 1 < total; ++v) {
        // v indexes the parent; emit its k children while they exist.
        for (int c = 1; c <= k; ++c) {
            const std::size_t child = v * static_cast<std::size_t>(k) + static_cast<std::size_t>(c);
            if (child >= total) break;
            const std::int64_t h = sample.heights[v];
            const std::vector<double>& row_cdf = cdf[static_cast<std::size_t>(((h % n) + n) % n)];
            const double u01 = detail::vertex_uniform(seed, static_cast<std::uint64_t>(child));
            std::size_t lo = 0;
            std::size_t hi = row_cdf.size() - 1;
            if (u01 >= row_cdf.back()) {
                lo = row_cdf.size() - 1;  // folded tail: nearest (far) window edge
                ++sample.clamped_draws;
            } else {
                while (lo < hi) {
                    const std::size_t mid = (lo + hi) / 2;
                    if (u01 < row_cdf[mid])
                        hi = mid;
                    else
                        lo = mid + 1;
                }
            }
            const std::int64_t offset = static_cast<std::int64_t>(lo) - window;
            sample.heights[child] = h + offset;
            sample.gradients[child - 1] = offset;
        }
    }
    return sample;
}

}  // namespace ggm
