#pragma once

// Exponential perturbations and the two facts about Exp(eta) that the
// regret analysis leans on.

#include "amdp/mdp.hpp"
#include "amdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amdp {

/// Rate of the exponential distribution; the mean is 1/eta.
class ExpParams {
public:
    explicit ExpParams(double eta) : eta_(eta) {
        if (!(eta > 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("eta must be positive and finite (got " + std::to_string(eta) + ")");
    }
    double eta() const { return eta_; }

private:
    double eta_;
};

/// One Exp(eta) draw by inverse transform. u is uniform on (0,1].
inline double sample_exp(const ExpParams& params, Rng& rng) {
    return -std::log(rng.uniform_positive()) / params.eta();
}

/// S*A*H i.i.d. Exp(eta) entries, drawn in storage order.
///
/// An entry is zero only when u == 1 exactly (probability 2^-53).
inline RewardTensor sample_exp_tensor(const ExpParams& params, Dims dims, Rng& rng) {
    RewardTensor r(dims);
    for (double& x : r.data()) x = sample_exp(params, rng);
    return r;
}

/// ln(1 - F(x)) for the Exp(eta) c.d.f., i.e. min{0, -eta x}.
inline double log_survival(double x, const ExpParams& params) {
    return std::min(0.0, -params.eta() * x);
}

/// Upper bound (1 + ln m)/eta on E[max of m i.i.d. Exp(eta)].
inline double max_expectation_bound(long long m, const ExpParams& params) {
    if (m < 1) throw std::invalid_argument("max_expectation_bound: m must be >= 1");
    return (1.0 + std::log(static_cast<double>(m))) / params.eta();
}

} // namespace amdp
