#pragma once

// Visit counting, empirical transition estimates, L1 confidence sets and
// extended value iteration (optimistic planning over the confidence set).

#include "amdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace amdp {

/// Lifetime counts N(s,a), N(s,a,s') and the within-epoch counts n(s,a).
class VisitCounters {
public:
    VisitCounters() = default;
    VisitCounters(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), visits_(states * actions, 0),
          transitions_(states * actions * states, 0), epoch_visits_(states * actions, 0) {}

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }

    std::uint64_t visits(std::size_t s, std::size_t a) const { return visits_[pair(s, a)]; }
    std::uint64_t transitions(std::size_t s, std::size_t a, std::size_t next) const {
        return transitions_[pair(s, a) * states_ + next];
    }
    std::uint64_t epoch_visits(std::size_t s, std::size_t a) const { return epoch_visits_[pair(s, a)]; }

    std::span<const std::uint64_t> visit_table() const { return visits_; }

    /// Every step bumps N and n. Steps before the last also record the
    /// observed successor in N(s,a,s'); the last step has none.
    void update(const Trajectory& traj) {
        const auto& steps = traj.steps;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto idx = pair(steps[i].state, steps[i].action);
            ++visits_[idx];
            ++epoch_visits_[idx];
            if (i + 1 < steps.size()) ++transitions_[idx * states_ + steps[i + 1].state];
        }
    }

    void reset_epoch() { std::fill(epoch_visits_.begin(), epoch_visits_.end(), 0); }

private:
    std::size_t pair(std::size_t s, std::size_t a) const { return s * actions_ + a; }

    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> transitions_;
    std::vector<std::uint64_t> epoch_visits_;
};

/// P_bar(s'|s,a) = N(s,a,s') / N(s,a). Rows with no recorded successor
/// are uniform; their radius covers the whole simplex anyway.
inline TransitionKernel empirical_kernel(const VisitCounters& counters) {
    const auto S = counters.num_states();
    const auto A = counters.num_actions();
    TransitionKernel k(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            std::uint64_t successors = 0;
            for (std::size_t n = 0; n < S; ++n) successors += counters.transitions(s, a, n);
            auto row = k.row(s, a);
            if (counters.visits(s, a) == 0 || successors == 0) {
                std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(S));
                continue;
            }
            // Divide by the successor total rather than N(s,a) so that rows
            // whose pair was also visited at the final layer still sum to 1.
            for (std::size_t n = 0; n < S; ++n)
                row[n] = static_cast<double>(counters.transitions(s, a, n)) / static_cast<double>(successors);
        }
    }
    return k;
}

/// sqrt(2 S ln(S A T / delta) / max{1, N}).
inline double confidence_radius(std::uint64_t count, std::size_t S, std::size_t A, std::size_t T, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    if (S < 1 || A < 1 || T < 1) throw std::invalid_argument("S, A and T must be >= 1");
    const double sat = static_cast<double>(S) * static_cast<double>(A) * static_cast<double>(T);
    const double n = static_cast<double>(std::max<std::uint64_t>(1, count));
    return std::sqrt(2.0 * static_cast<double>(S) * std::log(sat / delta) / n);
}

/// L1 balls of radius b(s,a) around the empirical kernel.
struct ConfidenceSet {
    TransitionKernel center;
    std::vector<double> radii; // indexed s * A + a
    std::size_t epoch = 0;
    std::vector<std::uint64_t> counts; // N(s,a) the radii were computed from

    double radius(std::size_t s, std::size_t a) const { return radii[s * center.num_actions() + a]; }

    /// True iff every row of `kernel` is within the ball of its (s,a).
    bool contains(const TransitionKernel& kernel, double slack = 0.0) const {
        for (std::size_t s = 0; s < center.num_states(); ++s) {
            for (std::size_t a = 0; a < center.num_actions(); ++a) {
                double l1 = 0.0;
                for (std::size_t n = 0; n < center.num_states(); ++n)
                    l1 += std::abs(kernel(s, a, n) - center(s, a, n));
                if (l1 > radius(s, a) + slack) return false;
            }
        }
        return true;
    }
};

inline ConfidenceSet make_confidence_set(const VisitCounters& counters, std::size_t T, double delta,
                                         std::size_t epoch) {
    const auto S = counters.num_states();
    const auto A = counters.num_actions();
    ConfidenceSet cs{empirical_kernel(counters), std::vector<double>(S * A), epoch,
                     std::vector<std::uint64_t>(counters.visit_table().begin(), counters.visit_table().end())};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) cs.radii[s * A + a] = confidence_radius(counters.visits(s, a), S, A, T, delta);
    return cs;
}

/// States sorted by descending value; equal values keep index order.
inline std::vector<std::size_t> descending_order(std::span<const double> w) {
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return w[i] > w[j]; });
    return order;
}

/// Writes into `out` the row in {q : ||q - p_row||_1 <= b} maximizing q.w,
/// given `order` = descending_order(w). Mass b/2 goes to the best state
/// (capped at 1), then the worst states are drained until the row sums to 1.
inline void optimistic_row_into(std::span<const double> p_row, double b, std::span<const std::size_t> order,
                                std::span<double> out) {
    std::copy(p_row.begin(), p_row.end(), out.begin());
    if (b <= 0.0 || order.empty()) return;

    const std::size_t top = order.front();
    out[top] = std::min(p_row[top] + b / 2.0, 1.0);

    double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (std::size_t j = order.size(); j-- > 0 && total > 1.0;) {
        const std::size_t s = order[j];
        const double others = total - out[s];
        if (others >= 1.0) {
            out[s] = 0.0;
            total = others;
        } else {
            out[s] = 1.0 - others;
            break;
        }
    }
}

inline std::vector<double> optimistic_row(std::span<const double> p_row, double b, std::span<const double> w_next) {
    if (p_row.size() != w_next.size()) throw DimensionError("optimistic_row: row and value vector differ in length");
    std::vector<double> out(p_row.size());
    const auto order = descending_order(w_next);
    optimistic_row_into(p_row, b, order, out);
    return out;
}

/// Output of extended value iteration. `transitions[h-1]` is the maximizing
/// kernel used at layer h; the state ordering is recomputed per layer, so
/// the maximizer can differ across layers.
struct OptimisticPlan {
    DeterministicPolicy policy;
    ValueTables values; // w_h(s) and the optimistic Q
    std::vector<TransitionKernel> transitions;

    double value(std::size_t start) const { return values.v(1, start); }
};

inline OptimisticPlan extended_value_iteration(const RewardTensor& reward, const ConfidenceSet& cset,
                                               PlanningStats* stats = nullptr) {
    const Dims d = reward.dims();
    detail::require_match(d, cset.center);

    OptimisticPlan plan{DeterministicPolicy(d.states, d.horizon), ValueTables(d),
                        std::vector<TransitionKernel>(d.horizon, TransitionKernel(d.states, d.actions))};
    for (std::size_t h = d.horizon; h >= 1; --h) {
        const auto next = plan.values.layer(h + 1);
        const auto order = descending_order(next);
        auto& layer_kernel = plan.transitions[h - 1];
        for (std::size_t s = 0; s < d.states; ++s) {
            std::size_t best = 0;
            double best_q = 0.0;
            for (std::size_t a = 0; a < d.actions; ++a) {
                auto row = layer_kernel.row(s, a);
                optimistic_row_into(cset.center.row(s, a), cset.radius(s, a), order, row);
                const double q = reward(s, a, h) + detail::expectation(row, next);
                plan.values.q(h, s, a) = q;
                if (a == 0 || q > best_q) {
                    best = a;
                    best_q = q;
                }
            }
            plan.values.v(h, s) = best_q;
            plan.policy.set(s, h, best);
        }
    }
    if (stats) {
        ++stats->backward_passes;
        stats->multiply_adds += d.states * d.actions * d.states * d.horizon;
    }
    return plan;
}

/// Value of `policy` under the plan's layered optimistic kernels.
inline double layered_policy_value(const RewardTensor& reward, const std::vector<TransitionKernel>& transitions,
                                   const DeterministicPolicy& policy, std::size_t start) {
    const Dims d = reward.dims();
    if (transitions.size() != d.horizon) throw DimensionError("need one kernel per layer");
    std::vector<double> next(d.states, 0.0), cur(d.states, 0.0);
    for (std::size_t h = d.horizon; h >= 1; --h) {
        const auto& k = transitions[h - 1];
        for (std::size_t s = 0; s < d.states; ++s) {
            const auto a = policy(s, h);
            cur[s] = reward(s, a, h) + detail::expectation(k.row(s, a), next);
        }
        std::swap(cur, next);
    }
    return next[start];
}

} // namespace amdp
