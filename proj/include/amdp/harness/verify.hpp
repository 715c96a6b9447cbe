#pragma once

// Property suites behind `amdp verify`. Each suite returns rows of
// (check, bound, estimate, stderr, verdict). Monte Carlo checks fail only
// when the estimate is past the bound by more than 4 standard errors.

#include "amdp/adversary.hpp"
#include "amdp/confidence.hpp"
#include "amdp/fpl.hpp"
#include "amdp/fpop.hpp"
#include "amdp/harness/config.hpp"
#include "amdp/harness/experiment.hpp"
#include "amdp/mdp.hpp"
#include "amdp/oracle.hpp"
#include "amdp/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace amdp::verify {

struct CheckRow {
    std::string name;
    double bound = 0;
    double estimate = 0;
    double stderr_ = 0;
    bool pass = false;
};

inline void write_rows(std::ostream& out, const std::vector<CheckRow>& rows, bool header = true) {
    if (header) out << "check,bound,estimate,stderr,verdict\n";
    for (const auto& r : rows)
        out << r.name << ',' << format_real(r.bound) << ',' << format_real(r.estimate) << ',' << format_real(r.stderr_)
            << ',' << (r.pass ? "pass" : "FAIL") << '\n';
}

inline bool all_pass(const std::vector<CheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

/// Random MDP with a random kernel and Uniform[0, scale] rewards.
inline std::pair<MdpSpec, RewardTensor> random_instance(Dims d, Rng& rng, double scale = 1.0) {
    MdpSpec spec{d.states, d.actions, d.horizon, TransitionKernel::random(d.states, d.actions, rng), 0};
    RewardTensor r(d);
    for (double& x : r.data()) x = scale * rng.uniform();
    return {std::move(spec), std::move(r)};
}

// -----------------------------------------------------------------------------
// Planning
// -----------------------------------------------------------------------------

inline std::vector<CheckRow> bellman_suite(std::size_t instances = 200, std::uint64_t seed = 101) {
    Rng rng(seed);
    double worst_residual = 0, worst_gap = 0, worst_eval = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < instances; ++i) {
        const Dims d{1 + rng() % 3, 1 + rng() % 3, 1 + rng() % 3};
        auto [spec, r] = random_instance(d, rng, 5.0);
        const auto plan = value_iteration(r, spec.kernel);
        for (std::size_t h = 1; h <= d.horizon; ++h)
            for (std::size_t s = 0; s < d.states; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < d.actions; ++a) {
                    double next = 0;
                    for (std::size_t n = 0; n < d.states; ++n) next += spec.kernel(s, a, n) * plan.values.v(h + 1, n);
                    worst_residual = std::max(worst_residual, std::abs(plan.values.q(h, s, a) - r(s, a, h) - next));
                    best = std::max(best, plan.values.q(h, s, a));
                }
                worst_residual = std::max(worst_residual, std::abs(plan.values.v(h, s) - best));
            }
        const double v1 = plan.values.v(1, 0);
        worst_eval = std::max(worst_eval, std::abs(policy_value(r, spec.kernel, plan.policy, 0) - v1));
        const double brute = oracle::brute_force_opt(r, spec.kernel, 0);
        worst_gap = std::max(worst_gap, std::abs(brute - v1));
        oracle::for_each_policy(d, [&](const DeterministicPolicy& pi) {
            min_margin = std::min(min_margin, v1 - policy_value(r, spec.kernel, pi, 0));
        });
    }
    return {
        {"bellman.residual", 1e-9, worst_residual, 0, worst_residual <= 1e-9},
        {"bellman.greedy_vs_bruteforce", 1e-9, worst_gap, 0, worst_gap <= 1e-9},
        {"bellman.greedy_dominates_all_policies", -1e-9, min_margin, 0, min_margin >= -1e-9},
        {"bellman.policy_value_of_greedy", 0, worst_eval, 0, worst_eval == 0.0},
    };
}

// -----------------------------------------------------------------------------
// Be-the-leader
// -----------------------------------------------------------------------------

/// Minimum btl_residual over seeded FPL runs on one random instance per run.
inline std::vector<CheckRow> btl_suite(std::size_t runs = 100, Dims d = {3, 2, 3}, std::size_t T = 50,
                                       std::uint64_t seed = 202) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < runs; ++i) {
        Rng rng(derive_seed(seed, i));
        MdpSpec spec{d.states, d.actions, d.horizon, TransitionKernel::random(d.states, d.actions, rng), 0};
        const auto adversary = AdversarySpec::make_iid_uniform(d, rng());
        const ExpParams params(recommended_eta(d.states, d.actions, d.horizon, T));
        const auto rec = oracle::record_fpl_run(spec, params, adversary, T, rng);
        worst = std::min(worst, oracle::btl_residual(rec));
    }
    return {{"btl.min_residual", -1e-6, worst, 0, worst >= -1e-6}};
}

// -----------------------------------------------------------------------------
// Stability of FPL's policy distribution
// -----------------------------------------------------------------------------

inline std::vector<CheckRow> stability_suite(std::size_t samples = 100000, std::uint64_t seed = 303) {
    std::vector<CheckRow> rows;
    Rng rng(seed);

    // S=2, A=2, H=2, eta=0.1, a short random history and a random extra episode.
    const Dims d{2, 2, 2};
    const MdpSpec spec{2, 2, 2, TransitionKernel::random(2, 2, rng), 0};
    std::vector<RewardTensor> history;
    for (int i = 0; i < 5; ++i) {
        RewardTensor r(d);
        for (double& x : r.data()) x = rng.uniform();
        history.push_back(std::move(r));
    }
    RewardTensor extra(d);
    for (double& x : extra.data()) x = rng.uniform();

    const ExpParams params(0.1);
    const auto rep = oracle::stability_check(spec, params, history, extra, samples, rng);
    for (const auto& e : rep.entries) {
        const std::string cell = "(s" + std::to_string(e.state) + ",h" + std::to_string(e.layer) + ",a" +
                                 std::to_string(e.action) + ")";
        // Report the nearer bound.
        const bool high = e.ratio >= 1.0;
        rows.push_back({"stability.ratio" + cell + (high ? ".upper" : ".lower"), high ? e.upper : e.lower, e.ratio,
                        e.ratio_se, e.pass});
    }
    rows.push_back({"stability.reported_ratios", static_cast<double>(d.size()), static_cast<double>(rep.entries.size()),
                    0, !rep.entries.empty()});
    rows.push_back({"stability.value_gap", 0, rep.value_gap, rep.value_gap_se, rep.value_pass});

    // H=1 closed form: S=1, A=2, action 0 leads by d.
    const MdpSpec experts{1, 2, 1, TransitionKernel::uniform(1, 2), 0};
    std::vector<RewardTensor> lead(7, RewardTensor(1, 2, 1));
    for (auto& r : lead) r.at(0, 0, 1) = 1.0;
    const double d_lead = 7.0;
    const auto table = oracle::mc_action_probs([&](Rng& g) { return FplAgent(experts, params, g); }, lead, samples, rng);
    const double expected = oracle::two_action_choice_prob(d_lead, params);
    const double p = table.prob(0, 1, 0);
    const double se = std::sqrt(expected * (1 - expected) / static_cast<double>(samples));
    rows.push_back({"stability.two_action_closed_form", expected, p, se, std::abs(p - expected) <= 4 * se});
    return rows;
}

// -----------------------------------------------------------------------------
// Exponential facts
// -----------------------------------------------------------------------------

/// ln(1-F) differences on a grid must land in [0, eta * Delta] exactly.
inline std::vector<CheckRow> fact1_suite() {
    double worst = 0;
    bool ok = true;
    for (double eta : {0.01, 0.1, 0.5, 1.0, 3.0}) {
        const ExpParams p(eta);
        for (int i = -200; i <= 200; ++i) {
            const double x = 0.05 * i;
            for (int j = 0; j <= 100; ++j) {
                const double delta = 0.03 * j;
                const double diff = log_survival(x, p) - log_survival(x + delta, p);
                const double cap = eta * delta;
                // Both sides are one rounding away from exact, so compare
                // with a relative allowance of a few ulps.
                const double ulp = 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(eta * (x + delta)));
                if (diff < 0.0 || diff > cap + ulp) ok = false;
                worst = std::max(worst, diff - cap);
            }
        }
    }
    return {{"fact1.lipschitz_excess", 0, worst, 0, ok}};
}

/// Monte Carlo E[max of m Exp(eta)] against (1 + ln m)/eta from above and
/// ln(m)/eta from below.
inline std::vector<CheckRow> fact2_suite(std::size_t trials = 100000, std::uint64_t seed = 505) {
    std::vector<CheckRow> rows;
    Rng rng(seed);
    for (double eta : {0.1, 1.0}) {
        const ExpParams p(eta);
        for (long long m : {2LL, 16LL, 64LL, 256LL}) {
            double sum = 0, sum2 = 0;
            for (std::size_t i = 0; i < trials; ++i) {
                double best = 0;
                for (long long j = 0; j < m; ++j) best = std::max(best, sample_exp(p, rng));
                sum += best;
                sum2 += best * best;
            }
            const double n = static_cast<double>(trials);
            const double mean = sum / n;
            const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
            const double upper = max_expectation_bound(m, p);
            const double lower = std::log(static_cast<double>(m)) / eta;
            const std::string tag = "(m=" + std::to_string(m) + ",eta=" + format_real(eta) + ")";
            rows.push_back({"fact2.upper" + tag, upper, mean, se, mean <= upper + 4 * se});
            rows.push_back({"fact2.lower" + tag, lower, mean, se, mean >= lower - 4 * se});
        }
    }
    return rows;
}

// -----------------------------------------------------------------------------
// Extended value iteration
// -----------------------------------------------------------------------------

inline std::vector<double> random_distribution(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    double total = 0;
    for (auto& x : p) total += (x = -std::log(rng.uniform_positive()));
    for (auto& x : p) x /= total;
    return p;
}

inline std::vector<CheckRow> evi_suite(std::size_t row_cases = 500, std::size_t plan_cases = 100,
                                       std::size_t grid_plans = 20, std::uint64_t seed = 606) {
    std::vector<CheckRow> rows;
    Rng rng(seed);

    // optimistic_row vs the grid oracle, S = 3, resolution 1e-3.
    constexpr double kRes = 1e-3;
    double worst_ratio = 0; // |grid - exact| / tolerance
    double worst_feas = 0;
    bool rows_ok = true;
    for (std::size_t i = 0; i < row_cases; ++i) {
        const auto p = random_distribution(3, rng);
        std::vector<double> w(3);
        for (auto& x : w) x = rng.uniform();
        const double b = rng() % 10 == 0 ? 0.0 : 2.5 * rng.uniform();
        const auto q = optimistic_row(p, b, w);
        double value = 0, l1 = 0, total = 0;
        for (int j = 0; j < 3; ++j) {
            value += q[j] * w[j];
            l1 += std::abs(q[j] - p[j]);
            total += q[j];
            if (q[j] < 0) rows_ok = false;
        }
        worst_feas = std::max({worst_feas, l1 - b, std::abs(total - 1.0)});
        const double grid = oracle::grid_l1_ball_max(p, b, w, kRes);
        const double tol = kRes * *std::max_element(w.begin(), w.end());
        if (std::abs(grid - value) > tol) rows_ok = false;
        if (tol > 0) worst_ratio = std::max(worst_ratio, std::abs(grid - value) / tol);
    }
    rows.push_back({"evi.optimistic_row_vs_grid", 1.0, worst_ratio, 0, rows_ok});
    rows.push_back({"evi.optimistic_row_feasible", 1e-9, worst_feas, 0, worst_feas <= 1e-9});

    // Zero radii reproduce value iteration bit for bit.
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < plan_cases; ++i) {
        const Dims d{1 + rng() % 4, 1 + rng() % 3, 1 + rng() % 4};
        auto [spec, r] = random_instance(d, rng, 10.0);
        ConfidenceSet cs{spec.kernel, std::vector<double>(d.states * d.actions, 0.0), 1, {}};
        const auto evi = extended_value_iteration(r, cs);
        const auto vi = value_iteration(r, spec.kernel);
        if (!(evi.policy == vi.policy) || !(evi.values == vi.values)) ++mismatches;
    }
    rows.push_back({"evi.zero_radii_bit_identical", 0, static_cast<double>(mismatches), 0, mismatches == 0});

    // Whole-plan value against the grid oracle, S=3, A=2, H=2.
    constexpr double kPlanRes = 1e-2, kPlanTol = 5e-2;
    double worst_plan = 0;
    for (std::size_t i = 0; i < grid_plans; ++i) {
        const Dims d{3, 2, 2};
        auto [spec, r] = random_instance(d, rng);
        ConfidenceSet cs{spec.kernel, std::vector<double>(6), 1, {}};
        for (auto& b : cs.radii) b = rng.uniform();
        const double exact = extended_value_iteration(r, cs).value(0);
        const double grid = oracle::grid_optimistic_value(r, cs, 0, kPlanRes);
        worst_plan = std::max(worst_plan, std::abs(exact - grid));
    }
    rows.push_back({"evi.plan_vs_grid", kPlanTol, worst_plan, 0, worst_plan <= kPlanTol});
    return rows;
}

// -----------------------------------------------------------------------------
// FPOP
// -----------------------------------------------------------------------------

/// Zero radii + true center: FPOP's policies equal FPL's on every episode.
inline std::vector<CheckRow> fpop_collapse_suite(std::size_t seeds = 20, Dims d = {3, 2, 3}, std::size_t T = 200,
                                                 std::uint64_t seed = 707) {
    std::size_t mismatched_runs = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
        Rng env(derive_seed(seed, i));
        const MdpSpec spec{d.states, d.actions, d.horizon, TransitionKernel::random(d.states, d.actions, env), 0};
        const auto adversary = AdversarySpec::make_switching(d, 8);
        const auto rec = recommended_params(d.states, d.actions, d.horizon, T);
        const ExpParams params(rec.eta);
        const Rng agent_seed(derive_seed(seed + 1, i));

        Rng fpl_rng = agent_seed;
        FplAgent fpl(spec, params, fpl_rng);
        auto fpop = FpopAgent::with_collapse(spec, T, params, rec.delta, agent_seed);
        Rng traj_rng(derive_seed(seed + 2, i));
        bool same = true;
        for (std::size_t t = 1; t <= T && same; ++t) {
            const auto a = fpl.select_policy();
            const auto b = fpop.select_policy();
            same = a == b;
            const auto r = next_reward(adversary, t);
            fpl.observe(r);
            fpop.end_episode(sample_trajectory(spec.kernel, b, 0, traj_rng), r);
        }
        if (!same) ++mismatched_runs;
    }
    return {{"fpop.collapse_policy_mismatches", 0, static_cast<double>(mismatched_runs), 0, mismatched_runs == 0}};
}

/// Fraction of epochs whose confidence set contains the true kernel, pooled
/// over seeded runs on one fixed random kernel.
inline std::vector<CheckRow> fpop_containment_suite(std::size_t seeds = 100, Dims d = {3, 2, 3}, std::size_t T = 2000,
                                                    std::uint64_t seed = 808) {
    RunConfig c;
    c.setting = Setting::Unknown;
    c.S = d.states;
    c.A = d.actions;
    c.H = d.horizon;
    c.T = T;
    c.adversary = AdversaryKind::Switching;
    c.adversary_period = 64;
    c.kernel_seed = seed;
    c.seeds.clear();
    for (std::size_t i = 0; i < seeds; ++i) c.seeds.push_back(seed * 1000 + i);
    const auto res = run_experiment(resolve(c));
    std::size_t epochs = 0, held = 0;
    for (const auto& s : res.seeds) {
        epochs += s.epochs;
        held += s.epochs_containing;
    }
    const double frac = epochs ? static_cast<double>(held) / static_cast<double>(epochs) : 0.0;
    return {{"fpop.containment_fraction", 0.99, frac, 0, frac >= 0.99 && !res.any_failed()}};
}

// -----------------------------------------------------------------------------
// Suite registry
// -----------------------------------------------------------------------------

using Suite = std::function<std::vector<CheckRow>()>;

inline const std::map<std::string, Suite>& suites() {
    static const std::map<std::string, Suite> registry{
        {"bellman", [] { return bellman_suite(); }},
        {"btl", [] { return btl_suite(); }},
        {"stability", [] { return stability_suite(); }},
        {"fact1", [] { return fact1_suite(); }},
        {"fact2", [] { return fact2_suite(); }},
        {"evi", [] { return evi_suite(); }},
        {"fpop", [] {
             auto rows = fpop_collapse_suite();
             auto more = fpop_containment_suite();
             rows.insert(rows.end(), more.begin(), more.end());
             return rows;
         }},
    };
    return registry;
}

inline std::string suite_names() {
    std::string out = "all";
    for (const auto& [name, _] : suites()) out += ", " + name;
    return out;
}

/// Runs one named suite, or every suite for "all".
inline std::vector<CheckRow> run_suite(const std::string& name) {
    if (name == "all") {
        std::vector<CheckRow> rows;
        for (const auto& [_, suite] : suites()) {
            auto r = suite();
            rows.insert(rows.end(), r.begin(), r.end());
        }
        return rows;
    }
    const auto it = suites().find(name);
    if (it == suites().end()) throw ConfigError("unknown suite '" + name + "' (valid: " + suite_names() + ")");
    return it->second();
}

} // namespace amdp::verify
