#pragma once

// Oblivious reward sequences. Every generator is a pure function of
// (spec, t), so the sequence is fixed before the run starts.

#include "amdp/mdp.hpp"
#include "amdp/rng.hpp"

#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace amdp {

class AdversaryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AdversaryKind { Constant, IidUniform, Switching, Replay };

inline const char* to_string(AdversaryKind k) {
    switch (k) {
    case AdversaryKind::Constant: return "constant";
    case AdversaryKind::IidUniform: return "iid_uniform";
    case AdversaryKind::Switching: return "switching";
    case AdversaryKind::Replay: return "replay";
    }
    return "?";
}

inline AdversaryKind parse_adversary_kind(const std::string& name) {
    if (name == "constant") return AdversaryKind::Constant;
    if (name == "iid_uniform") return AdversaryKind::IidUniform;
    if (name == "switching") return AdversaryKind::Switching;
    if (name == "replay") return AdversaryKind::Replay;
    throw std::invalid_argument("unknown adversary kind '" + name +
                                "' (expected constant, iid_uniform, switching or replay)");
}

struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::Constant;
    Dims dims;
    RewardTensor constant;     // Constant
    std::size_t period = 1;    // Switching: block length k
    std::uint64_t seed = 0;    // IidUniform
    std::shared_ptr<const std::vector<RewardTensor>> replay; // Replay, episode t at index t-1

    static AdversarySpec make_constant(RewardTensor r) {
        if (!r.all_within(0.0, 1.0)) throw std::invalid_argument("constant adversary: rewards must lie in [0,1]");
        AdversarySpec spec;
        spec.kind = AdversaryKind::Constant;
        spec.dims = r.dims();
        spec.constant = std::move(r);
        return spec;
    }
    static AdversarySpec make_iid_uniform(Dims dims, std::uint64_t seed) {
        AdversarySpec spec;
        spec.kind = AdversaryKind::IidUniform;
        spec.dims = dims;
        spec.seed = seed;
        return spec;
    }
    static AdversarySpec make_switching(Dims dims, std::size_t period) {
        if (period < 1) throw std::invalid_argument("switching adversary: period must be >= 1");
        AdversarySpec spec;
        spec.kind = AdversaryKind::Switching;
        spec.dims = dims;
        spec.period = period;
        return spec;
    }
    static AdversarySpec make_replay(std::vector<RewardTensor> tensors) {
        if (tensors.empty()) throw AdversaryError("replay adversary: no tensors");
        AdversarySpec spec;
        spec.kind = AdversaryKind::Replay;
        spec.dims = tensors.front().dims();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            if (tensors[i].dims() != spec.dims) throw AdversaryError("replay adversary: inconsistent tensor shapes");
            if (!tensors[i].all_within(0.0, 1.0))
                throw AdversaryError("replay adversary: episode " + std::to_string(i + 1) + " has entries outside [0,1]");
        }
        spec.replay = std::make_shared<const std::vector<RewardTensor>>(std::move(tensors));
        return spec;
    }
};

/// r_t for episode t >= 1.
///
/// Switching puts reward 1 on every (s, a_blk, h) with
/// a_blk = floor((t-1)/k) mod A, and 0 elsewhere.
inline RewardTensor next_reward(const AdversarySpec& spec, std::size_t t) {
    if (t < 1) throw std::invalid_argument("episode index starts at 1");
    switch (spec.kind) {
    case AdversaryKind::Constant:
        return spec.constant;
    case AdversaryKind::IidUniform: {
        Rng rng(derive_seed(spec.seed, t));
        RewardTensor r(spec.dims);
        for (double& x : r.data()) x = rng.uniform();
        return r;
    }
    case AdversaryKind::Switching: {
        RewardTensor r(spec.dims);
        const std::size_t block = ((t - 1) / spec.period) % spec.dims.actions;
        for (std::size_t h = 1; h <= spec.dims.horizon; ++h)
            for (std::size_t s = 0; s < spec.dims.states; ++s) r.at(s, block, h) = 1.0;
        return r;
    }
    case AdversaryKind::Replay:
        if (!spec.replay || t > spec.replay->size())
            throw AdversaryError("replay adversary exhausted at episode " + std::to_string(t) + " (file holds " +
                                 std::to_string(spec.replay ? spec.replay->size() : 0) + ")");
        return (*spec.replay)[t - 1];
    }
    throw AdversaryError("unhandled adversary kind");
}

/// Reward source that may look at the agent's current policy. Offers no
/// regret guarantee; the harness only accepts one when explicitly told so.
using AdaptiveAdversary = std::function<RewardTensor(std::size_t t, const DeterministicPolicy& policy)>;

// -----------------------------------------------------------------------------
// Replay files
//
//   T S A H
//   <S*A*H values for episode 1, h-major, then s, then a>
//   ...
// -----------------------------------------------------------------------------

inline std::vector<RewardTensor> read_replay(std::istream& in) {
    std::size_t T = 0, S = 0, A = 0, H = 0;
    if (!(in >> T >> S >> A >> H)) throw AdversaryError("replay file: malformed header (expected 'T S A H')");
    if (T < 1 || S < 1 || A < 1 || H < 1) throw AdversaryError("replay file: header values must be >= 1");
    std::vector<RewardTensor> out;
    out.reserve(T);
    for (std::size_t t = 1; t <= T; ++t) {
        RewardTensor r(S, A, H);
        for (double& x : r.data()) {
            if (!(in >> x))
                throw AdversaryError("replay file: episode " + std::to_string(t) + " is truncated or malformed");
            if (!(x >= 0.0 && x <= 1.0))
                throw AdversaryError("replay file: episode " + std::to_string(t) + " has a value outside [0,1]");
        }
        out.push_back(std::move(r));
    }
    std::string extra;
    if (in >> extra) throw AdversaryError("replay file: trailing data after " + std::to_string(T) + " episodes");
    return out;
}

inline std::vector<RewardTensor> load_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AdversaryError("cannot open replay file '" + path + "'");
    return read_replay(in);
}

inline void write_replay(std::ostream& out, const std::vector<RewardTensor>& tensors) {
    if (tensors.empty()) throw AdversaryError("replay file: nothing to write");
    const Dims d = tensors.front().dims();
    out << tensors.size() << ' ' << d.states << ' ' << d.actions << ' ' << d.horizon << '\n';
    out.precision(17);
    for (const auto& r : tensors) {
        const auto v = r.data();
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
        out << '\n';
    }
}

// -----------------------------------------------------------------------------
// Prediction with expert advice as a one-state, one-layer MDP
// -----------------------------------------------------------------------------

struct ExpertsInstance {
    std::size_t experts = 0;
    std::vector<std::vector<double>> losses; // losses[t-1][i] in [0,1]
};

/// S = H = 1, A = n; reward r(0, i, 1) = 1 - loss_t(i).
inline std::pair<MdpSpec, AdversarySpec> experts_as_mdp(const ExpertsInstance& instance) {
    const std::size_t n = instance.experts;
    if (n < 1) throw std::invalid_argument("experts instance needs at least one expert");
    MdpSpec spec{1, n, 1, TransitionKernel::uniform(1, n), 0};
    std::vector<RewardTensor> tensors;
    tensors.reserve(instance.losses.size());
    for (std::size_t t = 0; t < instance.losses.size(); ++t) {
        const auto& loss = instance.losses[t];
        if (loss.size() != n) throw DimensionError("round " + std::to_string(t + 1) + " has the wrong number of losses");
        RewardTensor r(1, n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(loss[i] >= 0.0 && loss[i] <= 1.0))
                throw std::invalid_argument("round " + std::to_string(t + 1) + ": loss outside [0,1]");
            r.at(0, i, 1) = 1.0 - loss[i];
        }
        tensors.push_back(std::move(r));
    }
    if (tensors.empty()) {
        AdversarySpec empty;
        empty.kind = AdversaryKind::Replay;
        empty.dims = spec.dims();
        empty.replay = std::make_shared<const std::vector<RewardTensor>>();
        return {std::move(spec), std::move(empty)};
    }
    return {std::move(spec), AdversarySpec::make_replay(std::move(tensors))};
}

} // namespace amdp
