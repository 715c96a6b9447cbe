#pragma once

// Independent reference computations for tests and `amdp verify`:
// exhaustive policy search, grid search over L1 balls, closed-form FPL
// choice probabilities, and Monte Carlo estimates of how FPL's policy
// distribution moves after one more episode. Agents never call these.

#include "amdp/adversary.hpp"
#include "amdp/confidence.hpp"
#include "amdp/fpl.hpp"
#include "amdp/mdp.hpp"
#include "amdp/perturbation.hpp"
#include "amdp/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace amdp::oracle {

// -----------------------------------------------------------------------------
// Exhaustive search
// -----------------------------------------------------------------------------

inline constexpr std::uint64_t kMaxEnumeratedPolicies = std::uint64_t{1} << 20;

/// Number of deterministic policies, or 0 if it exceeds kMaxEnumeratedPolicies.
inline std::uint64_t policy_count(const Dims& d) {
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < d.states * d.horizon; ++i) {
        count *= d.actions;
        if (count > kMaxEnumeratedPolicies) return 0;
    }
    return count;
}

/// Calls fn(policy) for every deterministic policy, in odometer order.
template <class Fn>
void for_each_policy(const Dims& d, Fn&& fn) {
    if (policy_count(d) == 0)
        throw std::invalid_argument("too many policies to enumerate for " + to_string(d) + " (limit 2^20)");
    DeterministicPolicy pi(d.states, d.horizon);
    const std::size_t cells = d.states * d.horizon;
    while (true) {
        fn(static_cast<const DeterministicPolicy&>(pi));
        std::size_t c = 0;
        for (; c < cells; ++c) {
            const std::size_t s = c % d.states;
            const std::size_t h = c / d.states + 1;
            if (pi(s, h) + 1 < d.actions) {
                pi.set(s, h, pi(s, h) + 1);
                break;
            }
            pi.set(s, h, 0);
        }
        if (c == cells) return;
    }
}

/// max over all deterministic policies of policy_value.
inline double brute_force_opt(const RewardTensor& cumulative, const TransitionKernel& kernel, std::size_t start) {
    double best = -std::numeric_limits<double>::infinity();
    for_each_policy(cumulative.dims(), [&](const DeterministicPolicy& pi) {
        best = std::max(best, policy_value(cumulative, kernel, pi, start));
    });
    return best;
}

// -----------------------------------------------------------------------------
// Grid search over an L1 ball intersected with the simplex
// -----------------------------------------------------------------------------

/// max q.w over distributions q on the `resolution` grid with
/// ||q - p_row||_1 <= b. p_row itself is always a candidate. S <= 3.
inline double grid_l1_ball_max(std::span<const double> p_row, double b, std::span<const double> w, double resolution) {
    const std::size_t S = p_row.size();
    if (S < 1 || S > 3) throw std::invalid_argument("grid_l1_ball_max supports 1 <= S <= 3 (got " + std::to_string(S) + ")");
    if (w.size() != S) throw DimensionError("grid_l1_ball_max: w has the wrong length");
    if (!(resolution > 0.0 && resolution <= 0.1)) throw std::invalid_argument("resolution must lie in (0, 0.1]");

    constexpr double kSlack = 1e-12;
    double best = 0.0;
    for (std::size_t i = 0; i < S; ++i) best += p_row[i] * w[i];
    if (S == 1) return w[0];

    const auto steps = static_cast<long>(std::llround(1.0 / resolution));
    auto consider = [&](const double* q) {
        double l1 = 0.0, value = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            l1 += std::abs(q[i] - p_row[i]);
            value += q[i] * w[i];
        }
        if (l1 <= b + kSlack) best = std::max(best, value);
    };
    double q[3] = {0.0, 0.0, 0.0};
    for (long i = 0; i <= steps; ++i) {
        q[0] = static_cast<double>(i) / static_cast<double>(steps);
        if (S == 2) {
            q[1] = 1.0 - q[0];
            consider(q);
            continue;
        }
        for (long j = 0; i + j <= steps; ++j) {
            q[1] = static_cast<double>(j) / static_cast<double>(steps);
            q[2] = std::max(0.0, 1.0 - q[0] - q[1]);
            consider(q);
        }
    }
    return best;
}

/// Optimistic planning value w_1(start) with each row maximized on the grid.
/// Independent of optimistic_row: rows come from grid_l1_ball_max.
inline double grid_optimistic_value(const RewardTensor& reward, const ConfidenceSet& cset, std::size_t start,
                                    double resolution) {
    const Dims d = reward.dims();
    std::vector<double> next(d.states, 0.0), cur(d.states, 0.0);
    for (std::size_t h = d.horizon; h >= 1; --h) {
        for (std::size_t s = 0; s < d.states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < d.actions; ++a)
                best = std::max(best, reward(s, a, h) +
                                          grid_l1_ball_max(cset.center.row(s, a), cset.radius(s, a), next, resolution));
            cur[s] = best;
        }
        std::swap(cur, next);
    }
    return next[start];
}

// -----------------------------------------------------------------------------
// FPL choice probabilities
// -----------------------------------------------------------------------------

/// Pr[the action leading by d >= 0 is chosen] for S = H = 1, A = 2. The
/// difference of two i.i.d. Exp(eta) draws is Laplace with scale 1/eta.
inline double two_action_choice_prob(double d, const ExpParams& params) {
    if (d < 0.0) throw std::invalid_argument("two_action_choice_prob: lead must be >= 0 (swap the actions)");
    return 1.0 - 0.5 * std::exp(-params.eta() * d);
}

/// Frequencies of policy(s,h) = a over Monte Carlo samples.
class ActionProbTable {
public:
    ActionProbTable() = default;
    explicit ActionProbTable(Dims dims) : dims_(dims), counts_(dims.size(), 0) {}

    void tally(const DeterministicPolicy& pi) {
        for (std::size_t h = 1; h <= dims_.horizon; ++h)
            for (std::size_t s = 0; s < dims_.states; ++s) ++counts_[index(s, h, pi(s, h))];
        ++samples_;
    }

    const Dims& dims() const { return dims_; }
    std::uint64_t samples() const { return samples_; }
    std::uint64_t count(std::size_t s, std::size_t h, std::size_t a) const { return counts_[index(s, h, a)]; }
    double prob(std::size_t s, std::size_t h, std::size_t a) const {
        return samples_ ? static_cast<double>(count(s, h, a)) / static_cast<double>(samples_) : 0.0;
    }
    /// Binomial standard error of prob().
    double stderr_of(std::size_t s, std::size_t h, std::size_t a) const {
        if (!samples_) return 0.0;
        const double p = prob(s, h, a);
        return std::sqrt(p * (1.0 - p) / static_cast<double>(samples_));
    }

private:
    std::size_t index(std::size_t s, std::size_t h, std::size_t a) const {
        return ((h - 1) * dims_.states + s) * dims_.actions + a;
    }

    Dims dims_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t samples_ = 0;
};

/// Builds `samples` fresh agents via make_agent(rng) (each draws its own r_0),
/// feeds every one the same history and tallies select_policy().
template <class MakeAgent>
ActionProbTable mc_action_probs(MakeAgent&& make_agent, std::span<const RewardTensor> history, std::size_t samples,
                                Rng& rng) {
    std::optional<ActionProbTable> table;
    for (std::size_t i = 0; i < samples; ++i) {
        auto agent = make_agent(rng);
        for (const auto& r : history) agent.observe(r);
        const auto pi = agent.select_policy();
        if (!table) table.emplace(Dims{pi.num_states(), agent.dims().actions, pi.horizon()});
        table->tally(pi);
    }
    return table ? *table : ActionProbTable{};
}

// -----------------------------------------------------------------------------
// Stability of the greedy policy under one extra episode
// -----------------------------------------------------------------------------

inline constexpr double kSigmaSlack = 4.0;

struct RatioEntry {
    std::size_t state = 0, layer = 0, action = 0;
    double p_before = 0, p_after = 0;    // Pr[pi_t(s,h)=a], Pr[pi_{t+1}(s,h)=a]
    double se_before = 0, se_after = 0;
    double ratio = 0, ratio_se = 0;      // p_before / p_after and its delta-method error
    double lower = 0, upper = 0;
    bool pass = true;
};

struct RatioReport {
    std::size_t samples = 0;
    double noise_floor = 0;             // 10 / sqrt(N); smaller estimates are not compared
    std::vector<RatioEntry> entries;    // only (s,h,a) with both estimates above the floor
    std::size_t skipped = 0;

    // E[V^{pi_{t+1}}(r)] <= e^{eta H^2} E[V^{pi_t}(r)], r the extra reward
    bool has_value_check = false;
    double value_before = 0, value_after = 0, value_bound_factor = 0;
    double value_gap = 0, value_gap_se = 0; // mean and s.e. of V_after - factor * V_before
    bool value_pass = true;

    bool pass() const {
        if (!value_pass) return false;
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
};

template <class BoundFn>
RatioReport compare_tables(const ActionProbTable& before, const ActionProbTable& after, BoundFn&& log_bound) {
    RatioReport rep;
    const Dims d = before.dims();
    rep.samples = before.samples();
    rep.noise_floor = 10.0 / std::sqrt(static_cast<double>(rep.samples));
    for (std::size_t h = 1; h <= d.horizon; ++h) {
        for (std::size_t s = 0; s < d.states; ++s) {
            for (std::size_t a = 0; a < d.actions; ++a) {
                RatioEntry e{s, h, a, before.prob(s, h, a), after.prob(s, h, a), before.stderr_of(s, h, a),
                             after.stderr_of(s, h, a)};
                if (e.p_before < rep.noise_floor || e.p_after < rep.noise_floor) {
                    ++rep.skipped;
                    continue;
                }
                e.ratio = e.p_before / e.p_after;
                e.ratio_se = e.ratio * std::sqrt(std::pow(e.se_before / e.p_before, 2) + std::pow(e.se_after / e.p_after, 2));
                const double lb = log_bound(h);
                e.lower = std::exp(-lb);
                e.upper = std::exp(lb);
                e.pass = e.ratio >= e.lower - kSigmaSlack * e.ratio_se && e.ratio <= e.upper + kSigmaSlack * e.ratio_se;
                rep.entries.push_back(e);
            }
        }
    }
    return rep;
}

/// Draws r_0 `samples` times. For each draw, an FPL agent with that r_0
/// observes `history`, reports pi_t, observes `extra` and reports pi_{t+1};
/// both distributions come from the same draws. Ratios are checked against
/// e^{+-eta(H-h+1)} and values against e^{eta H^2}.
inline RatioReport stability_check(const MdpSpec& spec, const ExpParams& params, std::span<const RewardTensor> history,
                                   const RewardTensor& extra, std::size_t samples, Rng& rng) {
    const Dims d = spec.dims();
    if (!extra.all_within(0.0, 1.0)) throw std::invalid_argument("stability_check: extra reward must lie in [0,1]");
    ActionProbTable before(d), after(d);
    const double factor = std::exp(params.eta() * static_cast<double>(d.horizon * d.horizon));
    double sum_b = 0, sum_a = 0, sum_gap = 0, sum_gap2 = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        auto agent = FplAgent(spec, params, rng);
        for (const auto& r : history) agent.observe(r);
        const auto pi_t = agent.select_policy();
        agent.observe(extra);
        const auto pi_next = agent.select_policy();
        before.tally(pi_t);
        after.tally(pi_next);

        const double vb = policy_value(extra, spec.kernel, pi_t, spec.initial_state);
        const double va = policy_value(extra, spec.kernel, pi_next, spec.initial_state);
        const double gap = va - factor * vb;
        sum_b += vb;
        sum_a += va;
        sum_gap += gap;
        sum_gap2 += gap * gap;
    }
    const double H = static_cast<double>(d.horizon);
    auto rep = compare_tables(before, after, [&](std::size_t h) { return params.eta() * (H - static_cast<double>(h) + 1.0); });

    const double n = static_cast<double>(samples);
    rep.has_value_check = true;
    rep.value_before = sum_b / n;
    rep.value_after = sum_a / n;
    rep.value_bound_factor = factor;
    rep.value_gap = sum_gap / n;
    const double var = samples > 1 ? std::max(0.0, (sum_gap2 - n * rep.value_gap * rep.value_gap) / (n - 1.0)) : 0.0;
    rep.value_gap_se = std::sqrt(var / n);
    rep.value_pass = rep.value_gap <= kSigmaSlack * rep.value_gap_se + 1e-12;
    return rep;
}

/// Optimistic counterpart over a fixed confidence set: pi_t plans on
/// r_0 + cumulative, the lookahead policy on r_0 + cumulative + extra.
/// Ratios Pr[lookahead = a] / Pr[pi_t = a] are checked against e^{+-eta H}.
inline RatioReport optimistic_stability_check(const ConfidenceSet& cset, Dims dims, const ExpParams& params,
                                              const RewardTensor& cumulative, const RewardTensor& extra,
                                              std::size_t samples, Rng& rng) {
    ActionProbTable current(dims), lookahead(dims);
    const RewardTensor with_extra = cumulative + extra;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto r0 = sample_exp_tensor(params, dims, rng);
        current.tally(extended_value_iteration(r0 + cumulative, cset).policy);
        lookahead.tally(extended_value_iteration(r0 + with_extra, cset).policy);
    }
    const double H = static_cast<double>(dims.horizon);
    return compare_tables(lookahead, current, [&](std::size_t) { return params.eta() * H; });
}

// -----------------------------------------------------------------------------
// Be-the-leader residual
// -----------------------------------------------------------------------------

/// One realized FPL run: r_0, r_1..r_T and pi_1..pi_{T+1}, where pi_{T+1}
/// is greedy on r_{0:T}.
struct FplRunRecord {
    MdpSpec spec;
    RewardTensor perturbation;
    std::vector<RewardTensor> rewards;
    std::vector<DeterministicPolicy> policies;
};

inline FplRunRecord record_fpl_run(const MdpSpec& spec, const ExpParams& params, const AdversarySpec& adversary,
                                   std::size_t T, Rng& rng) {
    FplAgent agent(spec, params, rng);
    FplRunRecord rec{spec, agent.perturbation(), {}, {}};
    rec.policies.push_back(agent.select_policy());
    for (std::size_t t = 1; t <= T; ++t) {
        auto r = next_reward(adversary, t);
        agent.observe(r);
        rec.rewards.push_back(std::move(r));
        rec.policies.push_back(agent.select_policy());
    }
    return rec;
}

/// sum_{t=1}^T V^{pi_{t+1}}(r_t) - OPT + V^{pi_1}(r_0). Nonnegative on every
/// FPL realization up to rounding.
inline double btl_residual(const FplRunRecord& rec) {
    const auto T = rec.rewards.size();
    if (rec.policies.size() != T + 1)
        throw std::invalid_argument("btl_residual: need T+1 policies for T rewards (got " +
                                    std::to_string(rec.policies.size()) + " for " + std::to_string(T) + ")");
    const auto& k = rec.spec.kernel;
    const auto s1 = rec.spec.initial_state;
    double lookahead = 0.0;
    for (std::size_t t = 1; t <= T; ++t) lookahead += policy_value(rec.rewards[t - 1], k, rec.policies[t], s1);
    const double opt = opt_in_hindsight(accumulate(rec.spec.dims(), rec.rewards), k, s1).value;
    return lookahead - opt + policy_value(rec.perturbation, k, rec.policies[0], s1);
}

} // namespace amdp::oracle
