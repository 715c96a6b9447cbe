#pragma once

// Follow-the-perturbed-leader for adversarial MDPs with a known kernel.

#include "amdp/mdp.hpp"
#include "amdp/perturbation.hpp"
#include "amdp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace amdp {

/// Thrown when the environment hands an agent a reward outside [0,1].
class RewardRangeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_unit_rewards(const RewardTensor& r, const Dims& expected) {
    if (r.dims() != expected)
        throw DimensionError("reward tensor " + to_string(r.dims()) + " does not match " + to_string(expected));
    if (!r.all_within(0.0, 1.0)) throw RewardRangeError("reward entries must lie in [0,1]");
}

/// eta = sqrt((1 + ln(SA)) / (H^2 T)).
inline double recommended_eta(std::size_t S, std::size_t A, std::size_t H, std::size_t T) {
    const double sa = static_cast<double>(S) * static_cast<double>(A);
    const double h = static_cast<double>(H);
    return std::sqrt((1.0 + std::log(sa)) / (h * h * static_cast<double>(T)));
}

/// The agent draws r_0 once and thereafter plays the greedy policy on
/// r_0 + r_{1:t-1}, recomputed from scratch each episode.
class FplAgent {
public:
    FplAgent(const MdpSpec& spec, ExpParams params, Rng& rng)
        : FplAgent(spec, params, sample_exp_tensor(params, spec.dims(), rng)) {}

    /// Deterministic r_0, for tests that need a fixed realization.
    static FplAgent with_perturbation(const MdpSpec& spec, ExpParams params, RewardTensor perturbation) {
        return FplAgent(spec, params, std::move(perturbation));
    }

    DeterministicPolicy select_policy(PlanningStats* stats = nullptr) const {
        return value_iteration(perturbation_ + cumulative_, kernel_, stats).policy;
    }

    void observe(const RewardTensor& reward) {
        require_unit_rewards(reward, dims_);
        cumulative_ += reward;
        ++episode_;
    }

    const RewardTensor& perturbation() const { return perturbation_; }
    const RewardTensor& cumulative() const { return cumulative_; }
    const TransitionKernel& kernel() const { return kernel_; }
    const ExpParams& params() const { return params_; }
    const Dims& dims() const { return dims_; }
    /// Index of the episode about to be played (starts at 1).
    std::size_t episode() const { return episode_; }

private:
    FplAgent(const MdpSpec& spec, ExpParams params, RewardTensor perturbation)
        : params_(params), dims_(spec.dims()), kernel_(spec.kernel),
          perturbation_(std::move(perturbation)), cumulative_(spec.dims()) {
        require_valid(spec);
        if (perturbation_.dims() != dims_) throw DimensionError("perturbation tensor has wrong shape");
    }

    ExpParams params_;
    Dims dims_;
    TransitionKernel kernel_;
    RewardTensor perturbation_;
    RewardTensor cumulative_;
    std::size_t episode_ = 1;
};

} // namespace amdp
