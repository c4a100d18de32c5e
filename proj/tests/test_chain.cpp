#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "ggm/chain.hpp"
#include "ggm/model.hpp"
#include "ggm/special_k2.hpp"
#include "oracle_helpers.hpp"

using namespace ggm;

namespace {

ModelParams canonical(double tau) { return ModelParams(theta_from_tau(tau), 0.5, 1.0, 2); }

PeriodicBoundaryLaw branch2_law_tau9() {
    return PeriodicBoundaryLaw({1.0, 6.94812372457816423, 1.0, 2.23096777818638181});
}

double row_probability_sum(const TransitionRow& row) {
    NeumaierSum s;
    for (double p : row.probs) s.add(p);
    return s.value();
}

}  // namespace

TEST_CASE("constant-law row is the normalized weight profile, symmetric about 0") {
    const ModelParams params(0.5, 0.5, 1.0, 2);
    const PeriodicBoundaryLaw law = PeriodicBoundaryLaw::constant(1);
    const TransitionRow row = transition_row(0, law, params, 40, 1e-14);
    const double c_total = residue_weight_sum(0, 1, params, 1e-14).value;
    CHECK(row.prob_at(0) == Catch::Approx(1.0 / c_total).epsilon(1e-13));
    CHECK(row.prob_at(1) == Catch::Approx(0.5 / c_total).epsilon(1e-13));
    for (int j = 1; j <= 40; ++j) CHECK(row.prob_at(j) == row.prob_at(-j));
    CHECK(row_probability_sum(row) + row.tail_mass_bound ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("row normalization holds for structured laws and various centers") {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw law = branch2_law_tau9();
    for (std::int64_t center : {-7, -1, 0, 1, 2, 3, 12}) {
        for (int window : {5, 15, 30}) {
            const TransitionRow row = transition_row(center, law, params, window, 1e-14);
            CHECK(row_probability_sum(row) + row.tail_mass_bound ==
                  Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("tau = 9 branch-2 law at window 30 leaves less than 1e-10 tail") {
    const ModelParams params = canonical(9.0);
    const TransitionRow row = transition_row(0, branch2_law_tau9(), params, 30, 1e-14);
    CHECK(row_probability_sum(row) >= 1.0 - 1e-10);
}

TEST_CASE("kernel rows are exactly shift-invariant under the period") {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw law = branch2_law_tau9();
    for (std::int64_t i : {-5, 0, 1, 3}) {
        const TransitionRow a = transition_row(i, law, params, 25, 1e-14);
        const TransitionRow b = transition_row(i + 4, law, params, 25, 1e-14);
        for (std::size_t o = 0; o < a.probs.size(); ++o) CHECK(a.probs[o] == b.probs[o]);
    }
}

TEST_CASE("palindromic laws give reflection-symmetric rows at the origin") {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw sym({1.0, 4.26556443707463741, 1.0, 4.26556443707463741});
    const TransitionRow row = transition_row(0, sym, params, 30, 1e-14);
    for (int j = 1; j <= 30; ++j)
        CHECK(row.prob_at(j) == Catch::Approx(row.prob_at(-j)).epsilon(1e-12));
}

TEST_CASE("check_normalisability refutes normalisability with a positive witness") {
    const ModelParams half(0.5, 0.5, 1.0, 2);
    const NormalisabilityReport constant = check_normalisability(PeriodicBoundaryLaw::constant(1), half);
    CHECK_FALSE(constant.normalisable);
    const double c_total = residue_weight_sum(0, 1, half, 1e-14).value;
    CHECK(constant.g_min == Catch::Approx(c_total).epsilon(1e-13));
    CHECK(constant.g_min > 1.0);

    const ModelParams p9 = canonical(9.0);
    const NormalisabilityReport b2 = check_normalisability(branch2_law_tau9(), p9);
    CHECK_FALSE(b2.normalisable);
    CHECK(b2.g_min > 0.0);
    CHECK(b2.residue_inner_sums.size() == 4);

    const ModelParams p5 = canonical(5.0);
    const NormalisabilityReport hl = check_normalisability(PeriodicBoundaryLaw({1.0, 0.5}), p5);
    CHECK_FALSE(hl.normalisable);
    CHECK(hl.g_min > 0.0);
}

TEST_CASE("sample_tree structure and determinism") {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw law = branch2_law_tau9();
    const GradientSample one = sample_tree(law, params, 1, 7, 40);
    CHECK(one.heights.size() == 3);
    CHECK(one.gradients.size() == 2);
    CHECK(one.heights[0] == 0);
    CHECK(one.gradients[0] == one.heights[1] - one.heights[0]);
    CHECK(one.gradients[1] == one.heights[2] - one.heights[0]);

    const GradientSample a = sample_tree(law, params, 6, 42, 40);
    const GradientSample b = sample_tree(law, params, 6, 42, 40);
    CHECK(a.heights == b.heights);
    CHECK(a.gradients == b.gradients);
    const GradientSample c = sample_tree(law, params, 6, 43, 40);
    CHECK(a.heights != c.heights);

    // every edge gradient is consistent with the implicit tree indexing
    for (std::size_t v = 1; v < a.heights.size(); ++v) {
        const std::size_t parent = (v - 1) / 2;
        CHECK(a.gradients[v - 1] == a.heights[v] - a.heights[parent]);
    }
}

TEST_CASE("sample_tree rejects windows with visible tail mass") {
    const ModelParams hot(0.95, 1.0, 1.0, 2);
    CHECK_THROWS_AS(sample_tree(PeriodicBoundaryLaw::constant(1), hot, 1, 1, 1), NumericalError);
}

TEST_CASE("empirical root-edge gradients match the exact kernel") {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw law = branch2_law_tau9();
    const int window = 40;
    const TransitionRow row = transition_row(0, law, params, window, 1e-14);

    const std::int64_t trees = 50000;  // 1e5 root-edge draws at k = 2
    std::vector<std::int64_t> counts(row.probs.size(), 0);
    std::int64_t draws = 0;
    for (std::int64_t t = 0; t < trees; ++t) {
        const GradientSample s = sample_tree(law, params, 1, 1000 + static_cast<std::uint64_t>(t), window);
        for (int c = 0; c < params.k; ++c) {
            counts[static_cast<std::size_t>(s.gradients[static_cast<std::size_t>(c)] + window)] += 1;
            ++draws;
        }
    }
    CHECK(draws == 2 * trees);

    // chi-square against the exact kernel at significance 1e-3
    CHECK(oracle::chi_square_p_value(counts, row.probs, draws) > 1e-3);

    // per-gradient frequencies within 4 standard errors where well-populated
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double p = row.probs[i];
        if (p * static_cast<double>(draws) < 10.0) continue;
        const double freq = static_cast<double>(counts[i]) / static_cast<double>(draws);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
        CHECK(std::abs(freq - p) <= 4.0 * se);
    }
}
