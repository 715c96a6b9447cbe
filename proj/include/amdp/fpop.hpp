#pragma once

// FPOP: follow-the-perturbed-optimistic-policy for adversarial MDPs whose
// kernel is unknown. Learning proceeds in epochs; each epoch freezes one
// confidence set and one perturbation r_0.

#include "amdp/confidence.hpp"
#include "amdp/fpl.hpp"
#include "amdp/mdp.hpp"
#include "amdp/perturbation.hpp"
#include "amdp/rng.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace amdp {

struct FpopParams {
    double eta = 0.0;
    double delta = 0.0;
    bool eta_exceeds_limit = false; // eta > H^-2, outside the regime the analysis covers
    bool delta_degenerate = false;  // delta >= 1: no confidence level left (T = H = 1)

    bool warning() const { return eta_exceeds_limit || delta_degenerate; }
};

/// eta = sqrt(SA / (H^2 T)), delta = 1 / (H T).
inline FpopParams recommended_params(std::size_t S, std::size_t A, std::size_t H, std::size_t T) {
    const double h = static_cast<double>(H);
    const double t = static_cast<double>(T);
    FpopParams p;
    p.eta = std::sqrt(static_cast<double>(S) * static_cast<double>(A) / (h * h * t));
    p.delta = 1.0 / (h * t);
    p.eta_exceeds_limit = p.eta > 1.0 / (h * h);
    p.delta_degenerate = p.delta >= 1.0;
    return p;
}

struct EpochEvent {
    std::size_t episode = 0;   // the episode whose end triggered the switch
    std::size_t new_epoch = 0;
    std::size_t state = 0;     // first (s,a) in index order meeting the doubling rule
    std::size_t action = 0;
};

/// Debug configuration that makes FPOP plan exactly like FPL on a given
/// kernel: the center is pinned to `kernel`, radii are zero, and no epoch
/// ever starts (so r_0 is never resampled). Breaks the information boundary
/// on purpose; only the harness' collapse check uses it.
struct CollapseDebug {
    TransitionKernel kernel;
};

class FpopAgent {
public:
    FpopAgent(std::size_t S, std::size_t A, std::size_t H, std::size_t T, ExpParams params, double delta, Rng rng)
        : FpopAgent(Dims{S, A, H}, T, params, delta, std::move(rng), std::nullopt) {}

    static FpopAgent with_collapse(const MdpSpec& spec, std::size_t T, ExpParams params, double delta, Rng rng) {
        require_valid(spec);
        return FpopAgent(spec.dims(), T, params, delta, std::move(rng), CollapseDebug{spec.kernel});
    }

    /// Plans on r_0 + r_{1:t-1} over the current confidence set and caches
    /// the plan for optimistic_value().
    const DeterministicPolicy& select_policy(PlanningStats* stats = nullptr) {
        plan_ = extended_value_iteration(perturbation_ + cumulative_, cset_, stats);
        return plan_.policy;
    }

    /// w_1(s) of the most recent plan.
    double planned_value(std::size_t start) const { return plan_.value(start); }

    /// W(r, pi_t, P~_t, start): the current policy valued under the plan's
    /// optimistic kernels with reward `r`.
    double optimistic_value(const RewardTensor& r, std::size_t start) const {
        return layered_policy_value(r, plan_.transitions, plan_.policy, start);
    }

    std::optional<EpochEvent> end_episode(const Trajectory& traj, const RewardTensor& reward) {
        require_unit_rewards(reward, dims_);
        if (traj.steps.size() != dims_.horizon)
            throw std::invalid_argument("trajectory length " + std::to_string(traj.steps.size()) +
                                        " differs from horizon " + std::to_string(dims_.horizon));
        cumulative_ += reward;
        counters_.update(traj);
        const std::size_t finished = episode_++;

        if (collapse_) return std::nullopt;

        for (std::size_t s = 0; s < dims_.states; ++s) {
            for (std::size_t a = 0; a < dims_.actions; ++a) {
                const auto threshold = std::max<std::uint64_t>(1, epoch_start_counts_[s * dims_.actions + a]);
                if (counters_.epoch_visits(s, a) >= threshold) {
                    start_epoch();
                    return EpochEvent{finished, epoch_, s, a};
                }
            }
        }
        return std::nullopt;
    }

    std::size_t epoch() const { return epoch_; }
    std::size_t episode() const { return episode_; }
    const Dims& dims() const { return dims_; }
    const ExpParams& params() const { return params_; }
    double delta() const { return delta_; }
    std::size_t planned_episodes() const { return T_; }
    const RewardTensor& perturbation() const { return perturbation_; }
    const RewardTensor& cumulative() const { return cumulative_; }
    const VisitCounters& counters() const { return counters_; }
    const ConfidenceSet& confidence_set() const { return cset_; }
    const OptimisticPlan& plan() const { return plan_; }
    /// N(s,a) at the start of the current epoch.
    std::uint64_t epoch_start_count(std::size_t s, std::size_t a) const {
        return epoch_start_counts_[s * dims_.actions + a];
    }
    bool collapsed() const { return collapse_.has_value(); }

private:
    FpopAgent(Dims dims, std::size_t T, ExpParams params, double delta, Rng rng, std::optional<CollapseDebug> collapse)
        : params_(params), dims_(dims), T_(T), delta_(delta), rng_(std::move(rng)), collapse_(std::move(collapse)),
          counters_(dims.states, dims.actions), epoch_start_counts_(dims.states * dims.actions, 0),
          cumulative_(dims) {
        if (dims.states < 1 || dims.actions < 1 || dims.horizon < 1)
            throw std::invalid_argument("S, A and H must be >= 1");
        if (T < 1) throw std::invalid_argument("T must be >= 1");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");

        cset_ = make_confidence_set(counters_, T_, delta_, epoch_);
        if (collapse_) {
            cset_.center = collapse_->kernel;
            std::fill(cset_.radii.begin(), cset_.radii.end(), 0.0);
        }
        perturbation_ = sample_exp_tensor(params_, dims_, rng_);
        plan_ = extended_value_iteration(perturbation_, cset_);
    }

    void start_epoch() {
        ++epoch_;
        cset_ = make_confidence_set(counters_, T_, delta_, epoch_);
        const auto n = counters_.visit_table();
        epoch_start_counts_.assign(n.begin(), n.end());
        counters_.reset_epoch();
        perturbation_ = sample_exp_tensor(params_, dims_, rng_);
        plan_ = extended_value_iteration(perturbation_ + cumulative_, cset_);
    }

    ExpParams params_;
    Dims dims_;
    std::size_t T_;
    double delta_;
    Rng rng_;
    std::optional<CollapseDebug> collapse_;

    std::size_t epoch_ = 1;
    std::size_t episode_ = 1;
    VisitCounters counters_;
    std::vector<std::uint64_t> epoch_start_counts_;
    ConfidenceSet cset_;
    RewardTensor perturbation_;
    RewardTensor cumulative_;
    OptimisticPlan plan_;
};

} // namespace amdp
