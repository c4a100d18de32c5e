// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria.  Run through ctest or directly:
//   ./build/tests/acceptance

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ggm/chain.hpp"
#include "ggm/model.hpp"
#include "ggm/periodic_system.hpp"
#include "ggm/polyroot.hpp"
#include "ggm/series.hpp"
#include "ggm/special_k2.hpp"
#include "oracle_helpers.hpp"

namespace {

using namespace ggm;

int g_failures = 0;

void criterion(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams canonical(double tau) { return ModelParams(theta_from_tau(tau), 0.5, 1.0, 2); }

double law_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// -------------------------------------------------------------------- 1

void criterion_critical_values() {
    const auto t0 = std::chrono::steady_clock::now();
    const double tau1 = bisect([](double t) { return k2::p_at(t); }, 5.0, 6.0, 1e-12);
    const double s1 = seconds_since(t0);
    const auto t1 = std::chrono::steady_clock::now();
    const double tau2 = bisect([](double t) { return k2::q_at(t); }, 6.0, 7.0, 1e-12);
    const double s2 = seconds_since(t1);

    const bool ok = std::abs(tau1 - 5.73) < 0.005 && std::abs(tau2 - 6.261) < 0.001 &&
                    std::abs(k2::p_at(tau1)) < 1e-10 && std::abs(k2::q_at(tau2)) < 1e-10 &&
                    s1 < 1e-3 && s2 < 1e-3;
    criterion(1, "critical tau values from bisection", ok,
              "tau1=" + fmt(tau1) + " tau2=" + fmt(tau2) + " |P|=" + fmt(std::abs(k2::p_at(tau1))) +
                  " |Q|=" + fmt(std::abs(k2::q_at(tau2))) + " times " + fmt(s1) + "s/" + fmt(s2) +
                  "s");
}

// -------------------------------------------------------------------- 2

void criterion_merge_identities() {
    const double sqrt_term_at_8 = std::sqrt((8.0 - 2.0) * k2::p_at(8.0));
    const double d1_at_8 = k2::discriminant_d1(8.0);
    const auto asym8 = k2::asymmetric_solutions(8.0);
    const bool branch1_degenerate =
        asym8.degenerate.size() == 1 && std::abs(asym8.degenerate[0].a - 1.0) <= 1e-10 &&
        asym8.degenerate[0].branch == k2::XYPoint::Branch::minus;

    const k2::CriticalTaus crit = k2::critical_taus(1e-13);
    const auto pts = k2::xy_solutions(crit.tau2);
    const double dbl = pts.back().x / 2.0;
    const double sym_resid = std::abs(2.0 * dbl * dbl - crit.tau2 * dbl + 2.0);

    const bool ok = sqrt_term_at_8 == 36.0 && std::abs(d1_at_8) <= 1e-8 && branch1_degenerate &&
                    sym_resid <= 1e-8;
    criterion(2, "exact merge identities at tau = 8 and tau2", ok,
              "sqrt((6)P(8))=" + fmt(sqrt_term_at_8) + " D1(8)=" + fmt(d1_at_8) +
                  " double-root-sym-residual=" + fmt(sym_resid));
}

// -------------------------------------------------------------------- 3

void criterion_symmetric_counts() {
    const std::vector<double> taus = {2.5, 3.0, 4.0, 5.0, 10.0};
    const std::vector<std::size_t> expected = {1, 1, 1, 3, 3};
    bool ok = true;
    std::string detail = "counts";
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const auto sols = k2::symmetric_solutions(taus[i]);
        ok = ok && sols.values.size() == expected[i];
        detail += " " + std::to_string(sols.values.size());
        if (sols.values.size() == 3)
            ok = ok && std::abs(sols.values[0] * sols.values[2] - 1.0) < 1e-12;
    }
    criterion(3, "2-periodic solution counts over tau", ok, detail);
}

// -------------------------------------------------------------------- 4

void criterion_newton_cross_validation() {
    bool ok = true;
    std::string detail;
    for (double tau : {6.5, 7.0, 9.0, 12.0}) {
        const auto t0 = std::chrono::steady_clock::now();
        const NewtonReport rep = solve_newton(4, canonical(tau));
        const double elapsed = seconds_since(t0);

        // recall of the ansatz-slice closed forms, as stated
        const ModelParams params = canonical(tau);
        const CoefficientMatrix matrix = build_matrix(4, params, 1e-14);
        std::vector<std::vector<double>> slice;
        for (double s : k2::symmetric_solutions(tau).values) slice.push_back({1.0, s, 1.0, s});
        for (const k2::Pair& p : k2::asymmetric_solutions(tau).pairs)
            slice.push_back({1.0, p.a, 1.0, p.b});
        double worst_slice = 0.0;
        for (const auto& want : slice) {
            double best = 1e300;
            for (const Solution& got : rep.set.solutions)
                best = std::min(best, law_distance(got.law.u, want));
            worst_slice = std::max(worst_slice, best);
        }

        // and exact multiset equality against the full anchored census
        const auto census = k2::anchored_period4_laws(tau);
        double worst_census = rep.set.solutions.size() == census.size() ? 0.0 : 1e300;
        for (const auto& want : census) {
            double best = 1e300;
            for (const Solution& got : rep.set.solutions)
                best = std::min(best, law_distance(got.law.u, want.law.u));
            worst_census = std::max(worst_census, best);
        }

        double worst_resid = 0.0;
        for (const Solution& s : rep.set.solutions)
            worst_resid = std::max(worst_resid, max_abs_residual(s.law, matrix, params.k));

        ok = ok && worst_slice < 1e-8 && worst_census < 1e-8 && worst_resid < 1e-8 &&
             elapsed < 5.0;
        detail += "tau=" + fmt(tau) + ":" + std::to_string(rep.set.solutions.size()) + "sol/" +
                  fmt(worst_census) + "/" + fmt(elapsed) + "s ";
    }
    criterion(4, "period-4 Newton vs closed forms", ok, detail);
}

// -------------------------------------------------------------------- 5

void criterion_brute_force_census() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string table = "thm2 table:";
    for (double tau : {5.0, 6.0, 6.5, 7.0, 8.0, 9.0}) {
        const std::vector<oracle::UffPoint> brute = oracle::uff_census(tau);
        std::vector<std::pair<double, double>> expected;
        for (double s : k2::symmetric_solutions(tau).values) expected.emplace_back(s, s);
        for (const k2::Pair& p : k2::asymmetric_solutions(tau).pairs)
            expected.emplace_back(p.a, p.b);
        std::sort(expected.begin(), expected.end());
        bool equal = brute.size() == expected.size();
        if (equal) {
            for (std::size_t i = 0; i < expected.size(); ++i)
                equal = equal && std::abs(brute[i].a - expected[i].first) < 1e-6 &&
                        std::abs(brute[i].b - expected[i].second) < 1e-6;
        }
        ok = ok && equal;
        // the stated table is emitted alongside, never asserted
        table += " tau=" + fmt(tau) + ":" +
                 std::to_string(k2::count_report(tau).paper_thm2_count);
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 30.0;
    criterion(5, "grid census equals discriminant census", ok,
              table + " runtime=" + fmt(elapsed) + "s");
}

// -------------------------------------------------------------------- 6

void criterion_series_closed_forms() {
    double worst_coeff = 0.0;
    double worst_uff = 0.0;
    for (double theta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const ModelParams params(theta, 0.5, 1.0, 2);
        const Se1Coefficients se1 = se1_coefficients(params);
        const double c0 = residue_weight_sum(0, 4, params, 1e-15).value;
        const double c1 = residue_weight_sum(1, 4, params, 1e-15).value;
        const double c2 = residue_weight_sum(2, 4, params, 1e-15).value;
        const double c3 = residue_weight_sum(3, 4, params, 1e-15).value;
        const double d2 = residue_weight_sum(0, 2, params, 1e-15).value;
        worst_coeff = std::max({worst_coeff, std::abs(se1.B - c0), std::abs(se1.C - c2),
                                std::abs(se1.E - c1), std::abs(se1.E - c3),
                                std::abs(se1.A - (c1 + c3)), std::abs(se1.D - d2)});
        worst_uff = std::max(worst_uff, k2::derive_uff_from_se1(theta));
    }
    const bool ok = worst_coeff < 1e-12 && worst_uff < 1e-12;
    criterion(6, "closed-form coefficients vs truncated sums", ok,
              "max coefficient dev=" + fmt(worst_coeff) + " max rescale dev=" + fmt(worst_uff));
}

// -------------------------------------------------------------------- 7

void criterion_periodicity_reduction() {
    double worst = 0.0;
    int checked = 0;
    for (double tau : {6.5, 7.0, 9.0, 12.0}) {
        const ModelParams params = canonical(tau);
        for (const Solution& s : solve_newton(4, params).set.solutions) {
            worst = std::max(worst, verify_periodicity_reduction(s.law, params, 8, 1e-14));
            ++checked;
        }
    }
    criterion(7, "periodicity reduction below 1e-9", worst < 1e-9,
              std::to_string(checked) + " laws, max deviation=" + fmt(worst));
}

// -------------------------------------------------------------------- 8

void criterion_kernel_and_sampler() {
    const ModelParams params = canonical(9.0);
    const PeriodicBoundaryLaw law({1.0, 6.94812372457816423, 1.0, 2.23096777818638181});

    bool rows_ok = true;
    for (std::int64_t center : {-3, 0, 2, 9}) {
        const TransitionRow row = transition_row(center, law, params, 35, 1e-14);
        NeumaierSum s;
        for (double p : row.probs) s.add(p);
        rows_ok = rows_ok && std::abs(s.value() + row.tail_mass_bound - 1.0) <= 1e-10;
        const TransitionRow shifted = transition_row(center + 4, law, params, 35, 1e-14);
        for (std::size_t o = 0; o < row.probs.size(); ++o)
            rows_ok = rows_ok && std::abs(row.probs[o] - shifted.probs[o]) <= 1e-14;
    }

    const int window = 40;
    const TransitionRow root_row = transition_row(0, law, params, window, 1e-14);
    std::vector<std::int64_t> counts(root_row.probs.size(), 0);
    std::int64_t draws = 0;
    for (std::int64_t t = 0; t < 50000; ++t) {
        const GradientSample s =
            sample_tree(law, params, 1, 9000 + static_cast<std::uint64_t>(t), window);
        for (int c = 0; c < params.k; ++c) {
            counts[static_cast<std::size_t>(s.gradients[static_cast<std::size_t>(c)] + window)]++;
            ++draws;
        }
    }
    const double p_value = oracle::chi_square_p_value(counts, root_row.probs, draws);

    // byte-identical repeat runs, through the CLI when available
    bool bytes_ok = true;
    if (const char* cli = std::getenv("GGM_CLI")) {
        const std::string base = std::string(cli) +
                                 " sample --tau 9 --branch asym2_ab --depth 2 --seed 42"
                                 " --samples 300 --window 30 --out ";
        const std::string f1 = "/tmp/ggm_acc_sample_1.csv";
        const std::string f2 = "/tmp/ggm_acc_sample_2.csv";
        bytes_ok = std::system((base + f1).c_str()) == 0 && std::system((base + f2).c_str()) == 0;
        if (bytes_ok) {
            std::ifstream a(f1, std::ios::binary);
            std::ifstream b(f2, std::ios::binary);
            std::stringstream sa, sb;
            sa << a.rdbuf();
            sb << b.rdbuf();
            bytes_ok = !sa.str().empty() && sa.str() == sb.str();
        }
    } else {
        const GradientSample a = sample_tree(law, params, 4, 42, window);
        const GradientSample b = sample_tree(law, params, 4, 42, window);
        bytes_ok = a.heights == b.heights && a.gradients == b.gradients;
    }

    const bool ok = rows_ok && p_value > 1e-3 && bytes_ok;
    criterion(8, "kernel normalization, shift invariance, sampler", ok,
              std::to_string(draws) + " draws, chi-square p=" + fmt(p_value) +
                  (bytes_ok ? ", reruns byte-identical" : ", rerun mismatch"));
}

// -------------------------------------------------------------------- 9

void criterion_non_normalisability() {
    bool ok = true;
    int tested = 0;
    const ModelParams p9 = canonical(9.0);
    std::vector<PeriodicBoundaryLaw> laws;
    laws.push_back(PeriodicBoundaryLaw::constant(1));
    laws.push_back(PeriodicBoundaryLaw::constant(2));
    laws.push_back(PeriodicBoundaryLaw::constant(4));
    for (const Solution& s : solve_newton(2, p9).set.solutions) laws.push_back(s.law);
    for (const Solution& s : solve_newton(4, p9).set.solutions) laws.push_back(s.law);
    double min_witness = 1e300;
    for (const PeriodicBoundaryLaw& law : laws) {
        const NormalisabilityReport rep = check_normalisability(law, p9);
        ok = ok && !rep.normalisable && rep.g_min > 0.0;
        min_witness = std::min(min_witness, rep.g_min);
        ++tested;
    }
    criterion(9, "positive periodic laws are never normalisable", ok,
              std::to_string(tested) + " laws, min witness g_min=" + fmt(min_witness));
}

}  // namespace

int main() {
    criterion_critical_values();
    criterion_merge_identities();
    criterion_symmetric_counts();
    criterion_newton_cross_validation();
    criterion_brute_force_census();
    criterion_series_closed_forms();
    criterion_periodicity_reduction();
    criterion_kernel_and_sampler();
    criterion_non_normalisability();
    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
