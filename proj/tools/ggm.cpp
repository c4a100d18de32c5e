// Command-line front end: solve periodic boundary laws, sweep the phase
// structure over tau, verify solutions, and emit kernel/sampler data as
// CSV or JSON.  All output is deterministic for fixed flags (and seed).
//
// Exit codes: 0 success, 1 usage error, 2 verification failure,
// 3 numerical failure (truncation cap or sampling window exceeded).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ggm/chain.hpp"
#include "ggm/errors.hpp"
#include "ggm/model.hpp"
#include "ggm/periodic_system.hpp"
#include "ggm/phase_scan.hpp"
#include "ggm/polyroot.hpp"
#include "ggm/special_k2.hpp"

namespace {

using json = nlohmann::ordered_json;

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits: lossless binary64 round trip in CSV.
std::string real17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CommonOpts {
    std::optional<double> tau;
    std::optional<double> theta;
    int period = 4;
    int k = 2;
    double p = 0.5;
    double q_w = 1.0;
    double eps = 1e-14;
    double tol = 1e-12;
    std::string format = "csv";
    std::string out_path;
    std::uint64_t seed = 0;
    int window = 50;
    bool strict_paper = false;
};

void add_model_flags(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--tau", o.tau, "tau = theta + 1/theta (> 2)");
    sub->add_option("--theta", o.theta, "theta in (0,1)");
    sub->add_option("--k", o.k, "tree order (default 2)");
    sub->add_option("--p", o.p, "even-parity weight (default 0.5)");
    sub->add_option("--q", o.q_w, "odd-parity weight (default 1)");
    sub->add_option("--eps", o.eps, "series truncation epsilon (default 1e-14)");
}

void add_output_flags(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--format", o.format, "csv or json (default csv)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", o.out_path, "output path (default stdout)");
}

ggm::ModelParams make_params(const CommonOpts& o) {
    if (o.tau && o.theta)
        throw std::invalid_argument("--tau and --theta are mutually exclusive");
    double theta;
    if (o.theta)
        theta = *o.theta;
    else if (o.tau)
        theta = ggm::theta_from_tau(*o.tau);
    else
        throw std::invalid_argument("one of --tau or --theta is required");
    return ggm::ModelParams(theta, o.p, o.q_w, o.k);
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw std::invalid_argument("cannot open output path: " + path);
    return file;
}

// ---------------------------------------------------------------- critical

void run_critical(const CommonOpts& o) {
    const ggm::k2::CriticalTaus crit = ggm::k2::critical_taus(o.tol);
    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j;
        j["tau1"] = crit.tau1;
        j["tau2"] = crit.tau2;
        j["tau3"] = crit.tau3;
        j["residuals"] = {{"p_at_tau1", crit.p_residual},
                          {"q_at_tau2", crit.q_residual},
                          {"d1_at_tau3", crit.d1_residual},
                          {"d2_at_tau2", crit.d2_residual}};
        os << j.dump(2) << "\n";
    } else {
        os << "tau1,tau2,tau3,p_residual_tau1,q_residual_tau2,d1_residual_tau3,d2_residual_tau2\n"
           << real17(crit.tau1) << ',' << real17(crit.tau2) << ',' << real17(crit.tau3) << ','
           << real17(crit.p_residual) << ',' << real17(crit.q_residual) << ','
           << real17(crit.d1_residual) << ',' << real17(crit.d2_residual) << "\n";
    }
}

// ------------------------------------------------------------------- solve

struct MatchedSolution {
    const ggm::Solution* solution;
    std::string label = "newton";
    std::optional<std::vector<double>> closed_form;
    std::optional<double> discrepancy;
};

std::vector<MatchedSolution> match_closed_forms(const ggm::NewtonReport& report, int period,
                                                const ggm::ModelParams& params) {
    std::vector<MatchedSolution> matched;
    std::vector<ggm::k2::LabeledLaw> census;
    if (period == 4) {
        if (const std::optional<double> tau_eff = ggm::k2::effective_tau(params))
            census = ggm::k2::anchored_period4_laws(*tau_eff);
    }
    for (const ggm::Solution& s : report.set.solutions) {
        MatchedSolution m{&s};
        double best = std::numeric_limits<double>::infinity();
        const ggm::k2::LabeledLaw* best_law = nullptr;
        for (const ggm::k2::LabeledLaw& cand : census) {
            double dist = 0.0;
            for (std::size_t i = 0; i < s.law.u.size(); ++i)
                dist = std::max(dist, std::abs(s.law.u[i] - cand.law.u[i]));
            if (dist < best) {
                best = dist;
                best_law = &cand;
            }
        }
        if (best_law != nullptr && best < 1e-6) {
            m.label = best_law->label;
            m.closed_form = best_law->law.u;
            m.discrepancy = best;
        }
        matched.push_back(std::move(m));
    }
    return matched;
}

void run_solve(const CommonOpts& o) {
    if (o.period < 1) throw std::invalid_argument("--period must be >= 1");
    const ggm::ModelParams params = make_params(o);
    const ggm::NewtonReport report = ggm::solve_newton(o.period, params, o.tol, o.eps);
    const std::vector<MatchedSolution> matched = match_closed_forms(report, o.period, params);

    double max_disc = 0.0;
    bool any_cf = false;
    for (const MatchedSolution& m : matched)
        if (m.discrepancy) {
            any_cf = true;
            max_disc = std::max(max_disc, *m.discrepancy);
        }

    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j;
        j["tau"] = ggm::tau_from_theta(params.theta);
        j["theta"] = params.theta;
        j["period"] = o.period;
        j["k"] = params.k;
        j["p"] = params.p;
        j["q_w"] = params.q_w;
        json sols = json::array();
        for (std::size_t i = 0; i < matched.size(); ++i) {
            const MatchedSolution& m = matched[i];
            json js;
            js["index"] = i;
            js["branch"] = m.label;
            js["u"] = m.solution->law.u;
            js["residual"] = m.solution->residual;
            if (m.closed_form) {
                js["closed_form_u"] = *m.closed_form;
                js["closed_form_discrepancy"] = *m.discrepancy;
            } else {
                js["closed_form_u"] = nullptr;
                js["closed_form_discrepancy"] = nullptr;
            }
            sols.push_back(std::move(js));
        }
        j["solutions"] = std::move(sols);
        j["max_closed_form_discrepancy"] = any_cf ? json(max_disc) : json(nullptr);
        j["newton"] = {{"converged_starts", report.converged_starts},
                       {"failed_starts", report.failed_starts},
                       {"unresolved_starts", report.unresolved_starts},
                       {"warnings", report.warnings}};
        os << j.dump(2) << "\n";
    } else {
        os << "index,branch,residual,closed_form_discrepancy";
        for (int i = 0; i < o.period; ++i) os << ",u" << i;
        os << "\n";
        for (std::size_t i = 0; i < matched.size(); ++i) {
            const MatchedSolution& m = matched[i];
            os << i << ',' << m.label << ',' << real17(m.solution->residual) << ','
               << (m.discrepancy ? real17(*m.discrepancy) : "nan");
            for (double v : m.solution->law.u) os << ',' << real17(v);
            os << "\n";
        }
    }
}

// -------------------------------------------------------------------- scan

void run_scan(const CommonOpts& o, double tau_min, double tau_max, int steps) {
    ggm::ScanConfig config;
    config.tau_min = tau_min;
    config.tau_max = tau_max;
    config.steps = steps;
    config.k = o.k;
    config.p = o.p;
    config.q_w = o.q_w;
    config.eps = o.eps;
    const std::vector<ggm::PhaseScanRow> rows = ggm::compute_phase_scan(config);

    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j = json::array();
        for (const ggm::PhaseScanRow& r : rows) {
            j.push_back({{"tau", r.tau},
                         {"theta", r.theta},
                         {"n_symmetric", r.n_symmetric},
                         {"n_asym_ordered", r.n_asym_ordered},
                         {"n_asym_unordered", r.n_asym_unordered},
                         {"d1_sign", r.d1_sign},
                         {"d2_sign", r.d2_sign},
                         {"paper_thm2_count", r.paper_thm2_count},
                         {"is_critical", r.is_critical}});
        }
        os << j.dump(2) << "\n";
    } else {
        os << ggm::kPhaseScanCsvHeader << "\n";
        for (const ggm::PhaseScanRow& r : rows) {
            os << real17(r.tau) << ',' << real17(r.theta) << ',' << r.n_symmetric << ','
               << r.n_asym_ordered << ',' << r.n_asym_unordered << ',' << r.d1_sign << ','
               << r.d2_sign << ',' << r.paper_thm2_count << ',' << (r.is_critical ? 1 : 0)
               << "\n";
        }
    }
    if (o.strict_paper) {
        for (const ggm::PhaseScanRow& r : rows)
            if (r.paper_thm2_count != r.n_asym_unordered)
                throw VerificationFailure(
                    "strict-paper: table count " + std::to_string(r.paper_thm2_count) +
                    " != computed unordered census " + std::to_string(r.n_asym_unordered) +
                    " at tau = " + real17(r.tau));
    }
}

// ------------------------------------------------------------------ verify

void run_verify(const CommonOpts& o) {
    const ggm::ModelParams params = make_params(o);
    const ggm::NewtonReport report = ggm::solve_newton(o.period, params, o.tol, o.eps);
    const std::vector<MatchedSolution> matched = match_closed_forms(report, o.period, params);
    const ggm::CoefficientMatrix matrix = ggm::build_matrix(o.period, params, o.eps);
    const std::optional<double> tau_eff =
        o.period == 4 ? ggm::k2::effective_tau(params) : std::nullopt;

    constexpr double kResidualThreshold = 1e-8;
    constexpr double kPeriodicityThreshold = 1e-9;
    constexpr double kUffThreshold = 1e-9;

    struct Row {
        std::size_t index;
        std::string branch;
        double residual;
        double periodicity;
        std::optional<double> uff;
        double g_min;
        bool normalisable;
        bool pass;
    };
    std::vector<Row> out_rows;
    bool all_pass = true;
    for (std::size_t i = 0; i < matched.size(); ++i) {
        const ggm::Solution& s = *matched[i].solution;
        Row row{};
        row.index = i;
        row.branch = matched[i].label;
        row.residual = ggm::max_abs_residual(s.law, matrix, params.k);
        row.periodicity = ggm::verify_periodicity_reduction(s.law, params, 8, o.eps);
        if (tau_eff && std::abs(s.law.u[2] - 1.0) <= 1e-8) {
            const auto r = ggm::k2::uff_residual(s.law.u[1], s.law.u[3], *tau_eff);
            row.uff = std::max(std::abs(r[0]), std::abs(r[1]));
        }
        const ggm::NormalisabilityReport norm = ggm::check_normalisability(s.law, params, o.eps);
        row.g_min = norm.g_min;
        row.normalisable = norm.normalisable;
        row.pass = row.residual < kResidualThreshold &&
                   row.periodicity < kPeriodicityThreshold &&
                   (!row.uff || *row.uff < kUffThreshold) && !row.normalisable &&
                   row.g_min > 0.0;
        all_pass = all_pass && row.pass;
        out_rows.push_back(std::move(row));
    }

    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j;
        j["tau"] = ggm::tau_from_theta(params.theta);
        j["period"] = o.period;
        json rows = json::array();
        for (const Row& r : out_rows) {
            rows.push_back({{"index", r.index},
                            {"branch", r.branch},
                            {"residual", r.residual},
                            {"periodicity_deviation", r.periodicity},
                            {"uff_residual", r.uff ? json(*r.uff) : json(nullptr)},
                            {"g_min", r.g_min},
                            {"normalisable", r.normalisable},
                            {"pass", r.pass}});
        }
        j["solutions"] = std::move(rows);
        j["all_pass"] = all_pass;
        os << j.dump(2) << "\n";
    } else {
        os << "index,branch,residual,periodicity_deviation,uff_residual,g_min,normalisable,pass\n";
        for (const Row& r : out_rows) {
            os << r.index << ',' << r.branch << ',' << real17(r.residual) << ','
               << real17(r.periodicity) << ',' << (r.uff ? real17(*r.uff) : "nan") << ','
               << real17(r.g_min) << ',' << (r.normalisable ? 1 : 0) << ','
               << (r.pass ? 1 : 0) << "\n";
        }
    }
    if (!all_pass) throw VerificationFailure("verification thresholds exceeded");
}

// ------------------------------------------------------------ kernel/sample

ggm::PeriodicBoundaryLaw resolve_law(const CommonOpts& o, const std::string& u_csv,
                                     const std::string& branch,
                                     const ggm::ModelParams& params) {
    if (!u_csv.empty() && !branch.empty())
        throw std::invalid_argument("--u and --branch are mutually exclusive");
    if (!u_csv.empty()) {
        std::vector<double> u;
        std::stringstream ss(u_csv);
        std::string item;
        while (std::getline(ss, item, ',')) u.push_back(std::stod(item));
        return ggm::PeriodicBoundaryLaw(std::move(u));
    }
    if (branch.empty() || branch == "free")
        return ggm::PeriodicBoundaryLaw::constant(o.period);
    const std::optional<double> tau_eff = ggm::k2::effective_tau(params);
    if (o.period != 4 || !tau_eff)
        throw std::invalid_argument(
            "--branch selectors require --period 4 with k = 2 and 2p = q");
    for (ggm::k2::LabeledLaw& cand : ggm::k2::anchored_period4_laws(*tau_eff))
        if (cand.label == branch) return std::move(cand.law);
    throw std::invalid_argument("branch '" + branch + "' does not exist at this tau");
}

void run_kernel(const CommonOpts& o, const std::string& u_csv, const std::string& branch,
                std::int64_t center) {
    const ggm::ModelParams params = make_params(o);
    const ggm::PeriodicBoundaryLaw law = resolve_law(o, u_csv, branch, params);
    const ggm::TransitionRow row = ggm::transition_row(center, law, params, o.window, o.eps);
    if (row.tail_mass_bound >= 1e-6)
        throw ggm::NumericalError("kernel: window too small, tail mass " +
                                  std::to_string(row.tail_mass_bound));

    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j;
        j["center"] = center;
        j["window"] = o.window;
        j["tail_mass_bound"] = row.tail_mass_bound;
        json rows = json::array();
        ggm::NeumaierSum cum;
        for (int off = -o.window; off <= o.window; ++off) {
            const double p = row.probs[static_cast<std::size_t>(off + o.window)];
            cum.add(p);
            rows.push_back({{"j", center + off}, {"prob", p}, {"cumulative", cum.value()}});
        }
        j["rows"] = std::move(rows);
        os << j.dump(2) << "\n";
    } else {
        os << "j,prob,cumulative\n";
        ggm::NeumaierSum cum;
        for (int off = -o.window; off <= o.window; ++off) {
            const double p = row.probs[static_cast<std::size_t>(off + o.window)];
            cum.add(p);
            os << (center + off) << ',' << real17(p) << ',' << real17(cum.value()) << "\n";
        }
    }
}

void run_sample(const CommonOpts& o, const std::string& u_csv, const std::string& branch,
                int depth, std::int64_t samples) {
    if (depth < 1) throw std::invalid_argument("--depth must be >= 1");
    if (samples < 1) throw std::invalid_argument("--samples must be >= 1");
    const ggm::ModelParams params = make_params(o);
    const ggm::PeriodicBoundaryLaw law = resolve_law(o, u_csv, branch, params);
    const ggm::TransitionRow root_row = ggm::transition_row(0, law, params, o.window, o.eps);

    std::vector<std::int64_t> counts(static_cast<std::size_t>(2 * o.window + 1), 0);
    std::int64_t total = 0;
    for (std::int64_t t = 0; t < samples; ++t) {
        const ggm::GradientSample sample = ggm::sample_tree(
            law, params, depth, o.seed + static_cast<std::uint64_t>(t), o.window, o.eps);
        for (int c = 0; c < params.k; ++c) {
            const std::int64_t g = sample.gradients[static_cast<std::size_t>(c)];
            counts[static_cast<std::size_t>(g + o.window)] += 1;
            ++total;
        }
    }

    std::ofstream file;
    std::ostream& os = open_output(o.out_path, file);
    if (o.format == "json") {
        json j;
        j["samples"] = samples;
        j["root_edge_draws"] = total;
        j["seed"] = o.seed;
        json rows = json::array();
        for (int off = -o.window; off <= o.window; ++off) {
            const std::size_t idx = static_cast<std::size_t>(off + o.window);
            rows.push_back({{"gradient", off},
                            {"count", counts[idx]},
                            {"freq", static_cast<double>(counts[idx]) / static_cast<double>(total)},
                            {"exact_prob", root_row.probs[idx]}});
        }
        j["rows"] = std::move(rows);
        os << j.dump(2) << "\n";
    } else {
        os << "gradient,count,freq,exact_prob\n";
        for (int off = -o.window; off <= o.window; ++off) {
            const std::size_t idx = static_cast<std::size_t>(off + o.window);
            os << off << ',' << counts[idx] << ','
               << real17(static_cast<double>(counts[idx]) / static_cast<double>(total)) << ','
               << real17(root_row.probs[idx]) << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic boundary laws of the generalized SOS model on Cayley trees"};
    app.require_subcommand(1);

    CommonOpts o;

    CLI::App* critical = app.add_subcommand("critical", "critical tau values and residuals");
    critical->add_option("--tol", o.tol, "bisection tolerance (default 1e-12)");
    add_output_flags(critical, o);

    CLI::App* solve = app.add_subcommand("solve", "multi-start Newton solve at one tau/theta");
    add_model_flags(solve, o);
    solve->add_option("--period", o.period, "boundary-law period (required)")->required();
    solve->add_option("--tol", o.tol, "Newton residual tolerance (default 1e-12)");
    add_output_flags(solve, o);

    double tau_min = 0.0;
    double tau_max = 0.0;
    int steps = 1;
    CLI::App* scan = app.add_subcommand("scan", "closed-form census sweep over tau");
    scan->add_option("--tau-min", tau_min, "lower end of the sweep (> 2)")->required();
    scan->add_option("--tau-max", tau_max, "upper end of the sweep")->required();
    scan->add_option("--steps", steps, "number of rows (endpoints included)")->required();
    scan->add_option("--k", o.k, "tree order (must be 2)");
    scan->add_option("--p", o.p, "even-parity weight");
    scan->add_option("--q", o.q_w, "odd-parity weight (must equal 2p)");
    scan->add_option("--eps", o.eps, "series truncation epsilon");
    scan->add_flag("--strict-paper", o.strict_paper,
                   "exit 2 where the stated table disagrees with the census");
    add_output_flags(scan, o);

    CLI::App* verify = app.add_subcommand("verify", "residual checks for every solution at tau");
    add_model_flags(verify, o);
    verify->add_option("--period", o.period, "boundary-law period (default 4)");
    verify->add_option("--tol", o.tol, "Newton residual tolerance");
    add_output_flags(verify, o);

    std::string u_csv;
    std::string branch;
    std::int64_t center = 0;
    CLI::App* kernel = app.add_subcommand("kernel", "one transition-kernel row");
    add_model_flags(kernel, o);
    kernel->add_option("--period", o.period, "law period for --branch/free (default 4)");
    kernel->add_option("--u", u_csv, "explicit law, comma-separated (u0 = 1)");
    kernel->add_option("--branch", branch, "closed-form branch label (period 4)");
    kernel->add_option("--center", center, "row center height (default 0)");
    kernel->add_option("--window", o.window, "half-width of the kernel window (default 50)");
    add_output_flags(kernel, o);

    int depth = 1;
    std::int64_t samples = 1000;
    CLI::App* sample = app.add_subcommand("sample", "seeded sampler, root-edge gradient histogram");
    add_model_flags(sample, o);
    sample->add_option("--period", o.period, "law period for --branch/free (default 4)");
    sample->add_option("--u", u_csv, "explicit law, comma-separated (u0 = 1)");
    sample->add_option("--branch", branch, "closed-form branch label (period 4)");
    sample->add_option("--depth", depth, "tree depth (default 1)");
    sample->add_option("--seed", o.seed, "base RNG seed (default 0)");
    sample->add_option("--samples", samples, "number of sampled trees (default 1000)");
    sample->add_option("--window", o.window, "kernel window half-width (default 50)");
    add_output_flags(sample, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (critical->parsed()) run_critical(o);
        if (solve->parsed()) run_solve(o);
        if (scan->parsed()) run_scan(o, tau_min, tau_max, steps);
        if (verify->parsed()) run_verify(o);
        if (kernel->parsed()) run_kernel(o, u_csv, branch, center);
        if (sample->parsed()) run_sample(o, u_csv, branch, depth, samples);
    } catch (const VerificationFailure& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 2;
    } catch (const ggm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
