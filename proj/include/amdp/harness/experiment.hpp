#pragma once

// Experiment driver: per-seed episode loops, exact regret accounting under
// the true kernel, CSV output and log-log regret scaling fits.

#include "amdp/adversary.hpp"
#include "amdp/fpl.hpp"
#include "amdp/fpop.hpp"
#include "amdp/harness/config.hpp"
#include "amdp/harness/errors.hpp"
#include "amdp/mdp.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace amdp {

struct EpisodeRecord {
    std::size_t t = 0;
    std::optional<std::size_t> epoch;     // unknown setting
    double v = 0;                         // exact V^{pi_t}(r_t) under the true kernel
    std::optional<double> v_tilde;        // unknown setting: W(r_t, pi_t, P~_t, s1)
    double cum_algo = 0;
    std::optional<double> prefix_regret;  // when log_hindsight_prefix
    std::optional<bool> epoch_event;      // unknown setting
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::vector<EpisodeRecord> episodes;
    std::vector<DeterministicPolicy> policies; // pi_1..pi_T
    double opt = 0, algo = 0, regret = 0;
    std::size_t epochs = 0;            // unknown setting
    std::size_t epochs_containing = 0; // epochs whose confidence set held the true kernel
};

struct ExperimentResult {
    ResolvedRun run;
    std::vector<SeedResult> seeds;

    double bound() const;
    double mean_regret() const;
    double regret_stderr() const;
    bool any_failed() const {
        for (const auto& s : seeds)
            if (s.failed) return true;
        return false;
    }
};

/// 2 H^2 sqrt((1 + ln SA) T) for the known setting, H^2 S sqrt(A T) otherwise.
inline double regret_bound(Setting setting, std::size_t S, std::size_t A, std::size_t H, std::size_t T) {
    const double h2 = static_cast<double>(H * H);
    if (setting == Setting::Known)
        return 2.0 * h2 * std::sqrt((1.0 + std::log(static_cast<double>(S * A))) * static_cast<double>(T));
    return h2 * static_cast<double>(S) * std::sqrt(static_cast<double>(A * T));
}

inline double ExperimentResult::bound() const {
    const auto& c = run.config;
    return regret_bound(c.setting, c.S, c.A, c.H, c.T);
}

inline double ExperimentResult::mean_regret() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : seeds)
        if (!s.failed) {
            sum += s.regret;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : std::nan("");
}

inline double ExperimentResult::regret_stderr() const {
    const double m = mean_regret();
    double ss = 0;
    std::size_t n = 0;
    for (const auto& s : seeds)
        if (!s.failed) {
            ss += (s.regret - m) * (s.regret - m);
            ++n;
        }
    return n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
}

/// Library-only extension point: rewards that react to the agent's policy.
/// Voids the regret guarantee, so it is refused unless acknowledged.
struct RunHooks {
    AdaptiveAdversary adaptive;
    bool acknowledge_no_guarantee = false;
    bool keep_policies = false;
};

namespace detail {

inline RewardTensor reward_for(const ResolvedRun& run, const AdversarySpec& adv, const RunHooks& hooks, std::size_t t,
                               const DeterministicPolicy& pi) {
    if (hooks.adaptive) {
        auto r = hooks.adaptive(t, pi);
        require_unit_rewards(r, run.mdp.dims());
        return r;
    }
    return next_reward(adv, t);
}

} // namespace detail

/// Stream ids for Rng::split on the run seed.
inline constexpr std::uint64_t kAgentStream = 1;
inline constexpr std::uint64_t kEnvironmentStream = 2;

inline SeedResult run_seed(const ResolvedRun& run, std::uint64_t seed, const RunHooks& hooks = {}) {
    if (hooks.adaptive && !hooks.acknowledge_no_guarantee)
        throw ConfigError("adaptive adversaries carry no regret guarantee; set acknowledge_no_guarantee");

    const auto& c = run.config;
    const auto& env = run.mdp;
    const auto& P = env.kernel;
    const auto s1 = env.initial_state;
    const Dims d = env.dims();

    SeedResult res;
    res.seed = seed;
    res.episodes.reserve(c.T);

    AdversarySpec adv = run.adversary;
    if (adv.kind == AdversaryKind::IidUniform) adv.seed = derive_seed(run.adversary.seed, seed);

    const Rng root(seed);
    Rng agent_rng = root.split(kAgentStream);
    Rng env_rng = root.split(kEnvironmentStream);
    const ExpParams params(run.eta);

    try {
        std::optional<FplAgent> fpl;
        std::optional<FpopAgent> fpop;
        if (c.setting == Setting::Known) {
            fpl.emplace(env, params, agent_rng);
        } else if (c.debug_collapse) {
            fpop.emplace(FpopAgent::with_collapse(env, c.T, params, run.delta, agent_rng));
        } else {
            fpop.emplace(d.states, d.actions, d.horizon, c.T, params, run.delta, agent_rng);
        }
        const bool log_epochs = fpop && !c.debug_collapse;
        if (log_epochs) {
            res.epochs = 1;
            res.epochs_containing = fpop->confidence_set().contains(P) ? 1 : 0;
        }

        RewardTensor cumulative(d);
        double algo = 0;
        for (std::size_t t = 1; t <= c.T; ++t) {
            const DeterministicPolicy pi = fpl ? fpl->select_policy() : fpop->select_policy();
            auto r = detail::reward_for(run, adv, hooks, t, pi);

            EpisodeRecord rec;
            rec.t = t;
            rec.v = policy_value(r, P, pi, s1);
            algo += rec.v;
            rec.cum_algo = algo;
            cumulative += r;

            if (fpl) {
                fpl->observe(r);
            } else {
                const std::size_t epoch = fpop->epoch();
                const double v_tilde = fpop->optimistic_value(r, s1);
                const auto traj = sample_trajectory(P, pi, s1, env_rng, &r);
                const auto event = fpop->end_episode(traj, r);
                if (log_epochs) {
                    rec.epoch = epoch;
                    rec.v_tilde = v_tilde;
                    rec.epoch_event = event.has_value();
                    if (event) {
                        ++res.epochs;
                        if (fpop->confidence_set().contains(P)) ++res.epochs_containing;
                    }
                }
            }
            if (c.log_hindsight_prefix) rec.prefix_regret = opt_in_hindsight(cumulative, P, s1).value - algo;
            if (hooks.keep_policies) res.policies.push_back(pi);
            res.episodes.push_back(rec);
        }
        res.algo = algo;
        res.opt = opt_in_hindsight(cumulative, P, s1).value;
        res.regret = res.opt - res.algo;
    } catch (const std::invalid_argument& e) {
        res.failed = true;
        res.error = e.what();
    } catch (const AdversaryError& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

/// Runs every configured seed, in parallel, and returns results in seed order.
inline ExperimentResult run_experiment(const ResolvedRun& run, const RunHooks& hooks = {}, unsigned threads = 0) {
    ExperimentResult out{run, std::vector<SeedResult>(run.config.seeds.size())};
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(run.config.seeds.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < run.config.seeds.size();)
            out.seeds[i] = run_seed(run, run.config.seeds[i], hooks);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    return out;
}

// -----------------------------------------------------------------------------
// CSV output
// -----------------------------------------------------------------------------

inline constexpr const char* kEpisodeCsvHeader = "t,epoch,v_t,v_tilde,cum_algo,prefix_regret,epoch_event";
inline constexpr const char* kSummaryCsvHeader = "seed,setting,S,A,H,T,eta,delta,opt,algo,regret,bound,ratio_to_bound";

/// %.17g, enough digits to round-trip a double.
inline std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_episode_csv(std::ostream& out, const SeedResult& res) {
    out << kEpisodeCsvHeader << '\n';
    for (const auto& e : res.episodes) {
        out << e.t << ',';
        if (e.epoch) out << *e.epoch;
        out << ',' << format_real(e.v) << ',';
        if (e.v_tilde) out << format_real(*e.v_tilde);
        out << ',' << format_real(e.cum_algo) << ',';
        if (e.prefix_regret) out << format_real(*e.prefix_regret);
        out << ',';
        if (e.epoch_event) out << (*e.epoch_event ? 1 : 0);
        out << '\n';
    }
}

inline std::string setting_label(const RunConfig& c) {
    if (c.setting == Setting::Known) return "known";
    return c.debug_collapse ? "unknown-collapse" : "unknown";
}

inline void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
    const auto& run = result.run;
    const auto& c = run.config;
    const double bound = result.bound();
    out << kSummaryCsvHeader << '\n';
    for (const auto& s : result.seeds) {
        out << s.seed << ',' << setting_label(c) << (s.failed ? "-failed" : "") << ',' << c.S << ',' << c.A << ','
            << c.H << ',' << c.T << ',' << format_real(run.eta) << ',';
        if (c.setting == Setting::Unknown) out << format_real(run.delta);
        out << ',';
        if (s.failed) {
            out << ",,,";
        } else {
            out << format_real(s.opt) << ',' << format_real(s.algo) << ',' << format_real(s.regret) << ',';
        }
        out << format_real(bound) << ',';
        if (!s.failed) out << format_real(s.regret / bound);
        out << '\n';
    }
}

inline std::filesystem::path seed_csv_path(const std::filesystem::path& dir, std::uint64_t seed) {
    return dir / ("seed_" + std::to_string(seed) + ".csv");
}

inline void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p);
        if (!f) throw IoError("cannot write '" + p.string() + "'");
        return f;
    };
    for (const auto& s : result.seeds) {
        auto f = open(seed_csv_path(dir, s.seed));
        write_episode_csv(f, s);
        if (!f) throw IoError("write failed for seed " + std::to_string(s.seed));
    }
    auto f = open(dir / "summary.csv");
    write_summary_csv(f, result);
    if (!f) throw IoError("write failed for summary.csv");
}

// -----------------------------------------------------------------------------
// Regret scaling
// -----------------------------------------------------------------------------

struct ScalingPoint {
    std::size_t T = 0;
    double mean_regret = 0;
    double stderr_regret = 0;
    double eta = 0;
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    std::optional<double> slope; // empty when some mean regret is <= 0
    std::string note;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline ScalingResult scaling(const RunConfig& base, std::span<const std::size_t> horizons, unsigned threads = 0) {
    if (horizons.size() < 2) throw ConfigError("scaling needs at least two values of T");
    for (std::size_t i = 0; i < horizons.size(); ++i)
        for (std::size_t j = i + 1; j < horizons.size(); ++j)
            if (horizons[i] == horizons[j]) throw ConfigError("scaling: duplicate T value " + std::to_string(horizons[i]));

    ScalingResult out;
    std::vector<double> xs, ys;
    bool degenerate = false;
    for (auto T : horizons) {
        RunConfig c = base;
        c.T = T;
        const auto res = run_experiment(resolve(c), {}, threads);
        if (res.any_failed()) throw std::runtime_error("scaling: a seed failed at T=" + std::to_string(T));
        ScalingPoint p{T, res.mean_regret(), res.regret_stderr(), res.run.eta};
        out.points.push_back(p);
        if (!(p.mean_regret > 0)) degenerate = true;
        xs.push_back(static_cast<double>(T));
        ys.push_back(p.mean_regret);
    }
    if (degenerate) {
        out.note = "degenerate: mean regret is not positive at every T, slope undefined";
    } else {
        out.slope = loglog_slope(xs, ys);
    }
    return out;
}

} // namespace amdp
