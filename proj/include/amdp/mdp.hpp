#pragma once

// Finite-horizon tabular MDPs: kernels, layered reward tensors, deterministic
// policies, backward value iteration, exact policy evaluation and
// trajectory sampling.
//
// Indexing convention: states and actions are 0-based, layers are 1-based
// (h in [1, H]). Value tables carry an extra terminal layer H+1 fixed at 0.

#include "amdp/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace amdp {

/// Tolerance on |sum_s' p(s'|s,a) - 1| for a kernel row to count as a distribution.
inline constexpr double kRowSumTolerance = 1e-9;

struct Dims {
    std::size_t states = 0;
    std::size_t actions = 0;
    std::size_t horizon = 0;

    std::size_t size() const { return states * actions * horizon; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
    std::ostringstream os;
    os << "S=" << d.states << " A=" << d.actions << " H=" << d.horizon;
    return os.str();
}

/// Thrown when operands disagree on S, A or H.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// -----------------------------------------------------------------------------
// TransitionKernel
// -----------------------------------------------------------------------------

/// p(s'|s,a), stored row-major with one contiguous row of S entries per (s,a).
class TransitionKernel {
public:
    TransitionKernel() = default;
    TransitionKernel(std::size_t states, std::size_t actions)
        : states_(states), actions_(actions), p_(states * actions * states, 0.0) {}

    static TransitionKernel uniform(std::size_t states, std::size_t actions) {
        TransitionKernel k(states, actions);
        for (auto& x : k.p_) x = 1.0 / static_cast<double>(states);
        return k;
    }

    /// Each (s,a) moves to state `next(s,a)` with probability one.
    template <class NextFn>
    static TransitionKernel deterministic(std::size_t states, std::size_t actions, NextFn next) {
        TransitionKernel k(states, actions);
        for (std::size_t s = 0; s < states; ++s)
            for (std::size_t a = 0; a < actions; ++a) k.at(s, a, next(s, a)) = 1.0;
        return k;
    }

    /// Every row drawn uniformly from the simplex (normalized Exp(1) draws).
    static TransitionKernel random(std::size_t states, std::size_t actions, Rng& rng) {
        TransitionKernel k(states, actions);
        for (std::size_t s = 0; s < states; ++s) {
            for (std::size_t a = 0; a < actions; ++a) {
                auto row = k.row(s, a);
                double total = 0.0;
                for (auto& x : row) {
                    x = -std::log(rng.uniform_positive());
                    total += x;
                }
                for (auto& x : row) x /= total;
            }
        }
        return k;
    }

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }

    double operator()(std::size_t s, std::size_t a, std::size_t next) const {
        return p_[offset(s, a) + next];
    }
    double& at(std::size_t s, std::size_t a, std::size_t next) { return p_[offset(s, a) + next]; }

    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {p_.data() + offset(s, a), states_};
    }
    std::span<double> row(std::size_t s, std::size_t a) { return {p_.data() + offset(s, a), states_}; }

    std::span<const double> data() const { return p_; }

    friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;

private:
    std::size_t offset(std::size_t s, std::size_t a) const { return (s * actions_ + a) * states_; }

    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> p_;
};

// -----------------------------------------------------------------------------
// RewardTensor
// -----------------------------------------------------------------------------

/// r(s,a,h). Layout is h-major, then s, then a (the replay-file order).
class RewardTensor {
public:
    RewardTensor() = default;
    explicit RewardTensor(Dims dims, double fill = 0.0) : dims_(dims), r_(dims.size(), fill) {}
    RewardTensor(std::size_t states, std::size_t actions, std::size_t horizon, double fill = 0.0)
        : RewardTensor(Dims{states, actions, horizon}, fill) {}

    const Dims& dims() const { return dims_; }
    std::size_t num_states() const { return dims_.states; }
    std::size_t num_actions() const { return dims_.actions; }
    std::size_t horizon() const { return dims_.horizon; }

    /// h is 1-based.
    double operator()(std::size_t s, std::size_t a, std::size_t h) const { return r_[index(s, a, h)]; }
    double& at(std::size_t s, std::size_t a, std::size_t h) { return r_[index(s, a, h)]; }

    std::span<const double> data() const { return r_; }
    std::span<double> data() { return r_; }

    RewardTensor& operator+=(const RewardTensor& other) {
        require_same(other);
        for (std::size_t i = 0; i < r_.size(); ++i) r_[i] += other.r_[i];
        return *this;
    }
    friend RewardTensor operator+(RewardTensor lhs, const RewardTensor& rhs) {
        lhs += rhs;
        return lhs;
    }

    bool all_within(double lo, double hi) const {
        for (double x : r_)
            if (!(x >= lo && x <= hi)) return false;
        return true;
    }
    bool all_nonnegative() const {
        for (double x : r_)
            if (!(x >= 0.0)) return false;
        return true;
    }

    friend bool operator==(const RewardTensor&, const RewardTensor&) = default;

private:
    std::size_t index(std::size_t s, std::size_t a, std::size_t h) const {
        return ((h - 1) * dims_.states + s) * dims_.actions + a;
    }
    void require_same(const RewardTensor& other) const {
        if (other.dims_ != dims_)
            throw DimensionError("reward tensor dimensions differ: " + to_string(dims_) + " vs " +
                                 to_string(other.dims_));
    }

    Dims dims_;
    std::vector<double> r_;
};

// -----------------------------------------------------------------------------
// Policies, value tables, trajectories
// -----------------------------------------------------------------------------

class DeterministicPolicy {
public:
    DeterministicPolicy() = default;
    DeterministicPolicy(std::size_t states, std::size_t horizon, std::size_t action = 0)
        : states_(states), horizon_(horizon), actions_(states * horizon, action) {}

    std::size_t num_states() const { return states_; }
    std::size_t horizon() const { return horizon_; }

    std::size_t operator()(std::size_t s, std::size_t h) const { return actions_[(h - 1) * states_ + s]; }
    void set(std::size_t s, std::size_t h, std::size_t a) { actions_[(h - 1) * states_ + s] = a; }

    std::span<const std::size_t> data() const { return actions_; }

    friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

private:
    std::size_t states_ = 0;
    std::size_t horizon_ = 0;
    std::vector<std::size_t> actions_;
};

/// V_h(s) for h in [1, H+1] (V_{H+1} = 0) and Q_h(s,a) for h in [1, H].
class ValueTables {
public:
    ValueTables() = default;
    explicit ValueTables(Dims dims)
        : dims_(dims), v_((dims.horizon + 1) * dims.states, 0.0), q_(dims.size(), 0.0) {}

    const Dims& dims() const { return dims_; }

    double v(std::size_t h, std::size_t s) const { return v_[(h - 1) * dims_.states + s]; }
    double& v(std::size_t h, std::size_t s) { return v_[(h - 1) * dims_.states + s]; }
    double q(std::size_t h, std::size_t s, std::size_t a) const { return q_[q_index(h, s, a)]; }
    double& q(std::size_t h, std::size_t s, std::size_t a) { return q_[q_index(h, s, a)]; }

    /// V_h as a vector over states.
    std::span<const double> layer(std::size_t h) const {
        return {v_.data() + (h - 1) * dims_.states, dims_.states};
    }

    friend bool operator==(const ValueTables&, const ValueTables&) = default;

private:
    std::size_t q_index(std::size_t h, std::size_t s, std::size_t a) const {
        return ((h - 1) * dims_.states + s) * dims_.actions + a;
    }

    Dims dims_;
    std::vector<double> v_;
    std::vector<double> q_;
};

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    std::vector<Step> steps; // steps[h-1] is layer h
    double realized_reward = 0.0;
};

struct MdpSpec {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t horizon = 0;
    TransitionKernel kernel;
    std::size_t initial_state = 0;

    Dims dims() const { return {num_states, num_actions, horizon}; }
};

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

struct Violation {
    enum class Kind { Size, InitialState, KernelShape, Entry, RowSum };
    Kind kind;
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t next_state = 0;
    std::string message;
};

inline std::vector<Violation> validate(const TransitionKernel& kernel) {
    std::vector<Violation> out;
    const auto S = kernel.num_states();
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < kernel.num_actions(); ++a) {
            double total = 0.0;
            for (std::size_t n = 0; n < S; ++n) {
                const double p = kernel(s, a, n);
                total += p;
                if (!(p >= 0.0 && p <= 1.0)) {
                    std::ostringstream os;
                    os << "p(" << n << "|" << s << "," << a << ") = " << p << " outside [0,1]";
                    out.push_back({Violation::Kind::Entry, s, a, n, os.str()});
                }
            }
            if (!(std::abs(total - 1.0) <= kRowSumTolerance)) {
                std::ostringstream os;
                os.precision(17);
                os << "row (s=" << s << ", a=" << a << ") sums to " << total;
                out.push_back({Violation::Kind::RowSum, s, a, 0, os.str()});
            }
        }
    }
    return out;
}

inline std::vector<Violation> validate(const MdpSpec& spec) {
    std::vector<Violation> out;
    if (spec.num_states < 1 || spec.num_actions < 1 || spec.horizon < 1) {
        out.push_back({Violation::Kind::Size, 0, 0, 0,
                       "S, A and H must all be >= 1 (got " + to_string(spec.dims()) + ")"});
        return out;
    }
    if (spec.initial_state >= spec.num_states)
        out.push_back({Violation::Kind::InitialState, spec.initial_state, 0, 0,
                       "initial state " + std::to_string(spec.initial_state) + " not in [0, S)"});
    if (spec.kernel.num_states() != spec.num_states || spec.kernel.num_actions() != spec.num_actions) {
        out.push_back({Violation::Kind::KernelShape, 0, 0, 0, "kernel shape does not match S and A"});
        return out;
    }
    auto kernel_issues = validate(spec.kernel);
    out.insert(out.end(), kernel_issues.begin(), kernel_issues.end());
    return out;
}

inline void require_valid(const MdpSpec& spec) {
    auto issues = validate(spec);
    if (!issues.empty()) throw std::invalid_argument("invalid MDP: " + issues.front().message);
}

// -----------------------------------------------------------------------------
// Planning
// -----------------------------------------------------------------------------

/// Instrumentation counters for planning passes.
struct PlanningStats {
    std::uint64_t backward_passes = 0;
    std::uint64_t multiply_adds = 0; // one per (s,a,s') term of an expectation
};

namespace detail {

inline void require_match(const Dims& dims, const TransitionKernel& kernel) {
    if (kernel.num_states() != dims.states || kernel.num_actions() != dims.actions)
        throw DimensionError("kernel (S=" + std::to_string(kernel.num_states()) +
                             " A=" + std::to_string(kernel.num_actions()) +
                             ") does not match reward tensor (" + to_string(dims) + ")");
}

/// sum_s' row[s'] * next[s'], accumulated in state order. Planning and
/// evaluation both route through here so equal inputs give equal bits.
inline double expectation(std::span<const double> row, std::span<const double> next) {
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * next[i];
    return acc;
}

} // namespace detail

struct PlanResult {
    DeterministicPolicy policy;
    ValueTables values;
};

/// Backward induction over h = H..1. Ties go to the lowest action index.
inline PlanResult value_iteration(const RewardTensor& reward, const TransitionKernel& kernel,
                                  PlanningStats* stats = nullptr) {
    const Dims d = reward.dims();
    detail::require_match(d, kernel);

    PlanResult out{DeterministicPolicy(d.states, d.horizon), ValueTables(d)};
    for (std::size_t h = d.horizon; h >= 1; --h) {
        const auto next = out.values.layer(h + 1);
        for (std::size_t s = 0; s < d.states; ++s) {
            std::size_t best = 0;
            double best_q = 0.0;
            for (std::size_t a = 0; a < d.actions; ++a) {
                const double q = reward(s, a, h) + detail::expectation(kernel.row(s, a), next);
                out.values.q(h, s, a) = q;
                if (a == 0 || q > best_q) {
                    best = a;
                    best_q = q;
                }
            }
            out.values.v(h, s) = best_q;
            out.policy.set(s, h, best);
        }
    }
    if (stats) {
        ++stats->backward_passes;
        stats->multiply_adds += d.states * d.actions * d.states * d.horizon;
    }
    return out;
}

/// V_h^pi(s) for every layer and state, under the given kernel.
inline ValueTables evaluate_policy(const RewardTensor& reward, const TransitionKernel& kernel,
                                   const DeterministicPolicy& policy) {
    const Dims d = reward.dims();
    detail::require_match(d, kernel);
    if (policy.num_states() != d.states || policy.horizon() != d.horizon)
        throw DimensionError("policy shape does not match reward tensor (" + to_string(d) + ")");

    ValueTables out(d);
    for (std::size_t h = d.horizon; h >= 1; --h) {
        const auto next = out.layer(h + 1);
        for (std::size_t s = 0; s < d.states; ++s) {
            for (std::size_t a = 0; a < d.actions; ++a)
                out.q(h, s, a) = reward(s, a, h) + detail::expectation(kernel.row(s, a), next);
            out.v(h, s) = out.q(h, s, policy(s, h));
        }
    }
    return out;
}

/// Exact expected cumulative reward of `policy` from `start` at layer 1.
inline double policy_value(const RewardTensor& reward, const TransitionKernel& kernel,
                           const DeterministicPolicy& policy, std::size_t start) {
    const Dims d = reward.dims();
    if (start >= d.states) throw DimensionError("start state out of range");
    return evaluate_policy(reward, kernel, policy).v(1, start);
}

/// Samples next state from a kernel row by inverse CDF.
inline std::size_t sample_next_state(std::span<const double> row, Rng& rng) {
    const double u = rng.uniform();
    double cdf = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t n = 0; n < row.size(); ++n) {
        if (row[n] <= 0.0) continue;
        last_positive = n;
        cdf += row[n];
        if (u < cdf) return n;
    }
    return last_positive; // u landed in the rounding gap above the final CDF value
}

inline Trajectory sample_trajectory(const TransitionKernel& kernel, const DeterministicPolicy& policy,
                                    std::size_t start, Rng& rng,
                                    const RewardTensor* reward = nullptr) {
    const std::size_t H = policy.horizon();
    Trajectory traj;
    traj.steps.reserve(H);
    std::size_t s = start;
    for (std::size_t h = 1; h <= H; ++h) {
        const std::size_t a = policy(s, h);
        traj.steps.push_back({s, a});
        if (reward) traj.realized_reward += (*reward)(s, a, h);
        if (h < H) s = sample_next_state(kernel.row(s, a), rng);
    }
    return traj;
}

/// Entrywise sum; the empty sum is the zero tensor of `dims`.
inline RewardTensor accumulate(Dims dims, std::span<const RewardTensor> rewards) {
    RewardTensor total(dims);
    for (const auto& r : rewards) total += r;
    return total;
}

struct HindsightOptimum {
    double value = 0.0;
    DeterministicPolicy policy;
};

/// Best fixed policy on a cumulative reward tensor, valued from `start`.
inline HindsightOptimum opt_in_hindsight(const RewardTensor& cumulative, const TransitionKernel& kernel,
                                         std::size_t start) {
    if (!cumulative.all_nonnegative())
        throw std::invalid_argument("opt_in_hindsight: cumulative rewards must be nonnegative");
    auto plan = value_iteration(cumulative, kernel);
    return {plan.values.v(1, start), std::move(plan.policy)};
}

} // namespace amdp
