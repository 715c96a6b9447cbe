#pragma once

// Run configuration: flat `key = value` text, `#` starts a comment.
//
//   setting = known            # known | unknown
//   S = 4
//   A = 3
//   H = 4
//   T = 4096
//   eta = auto                 # number or auto
//   delta = auto               # unknown setting only
//   adversary = switching      # constant | iid_uniform | switching | replay
//   adversary_period = 64
//   adversary_seed = 7
//   adversary_value = 0.5      # constant only; omitted -> random fixed tensor
//   adversary_file = r.txt     # replay only
//   kernel = random            # random | file
//   kernel_seed = 11
//   kernel_file = mdp.txt
//   s1 = 0
//   seeds = 1,2,3
//   out = out/
//   log_hindsight_prefix = false
//   debug_collapse = false     # unknown setting: pin P_bar to the true kernel, zero radii
//
// Unknown keys are an error.

#include "amdp/adversary.hpp"
#include "amdp/fpl.hpp"
#include "amdp/fpop.hpp"
#include "amdp/harness/errors.hpp"
#include "amdp/harness/mdp_file.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace amdp {

enum class Setting { Known, Unknown };
enum class KernelSource { Random, File };

inline const char* to_string(Setting s) { return s == Setting::Known ? "known" : "unknown"; }

struct RunConfig {
    Setting setting = Setting::Known;
    std::size_t S = 0, A = 0, H = 0, T = 0;
    std::optional<double> eta;   // nullopt: auto
    std::optional<double> delta; // nullopt: auto
    AdversaryKind adversary = AdversaryKind::Switching;
    std::size_t adversary_period = 64;
    std::uint64_t adversary_seed = 0;
    std::optional<double> adversary_value;
    std::string adversary_file;
    KernelSource kernel = KernelSource::Random;
    std::uint64_t kernel_seed = 0;
    std::string kernel_file;
    std::optional<std::size_t> initial_state;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "out";
    bool log_hindsight_prefix = false;
    bool debug_collapse = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
    if (pos != text.size()) throw ConfigError(key + ": expected a number, got '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& key) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty entry in list '" + text + "'");
        out.push_back(parse_size(item, key));
    }
    if (out.empty()) throw ConfigError(key + ": list must not be empty");
    return out;
}

} // namespace detail

inline std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    for (auto v : detail::parse_seed_list(text, what)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value for '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

        if (key == "setting") {
            if (value == "known") c.setting = Setting::Known;
            else if (value == "unknown") c.setting = Setting::Unknown;
            else throw ConfigError("setting: expected known or unknown, got '" + value + "'");
        } else if (key == "S") c.S = detail::parse_size(value, key);
        else if (key == "A") c.A = detail::parse_size(value, key);
        else if (key == "H") c.H = detail::parse_size(value, key);
        else if (key == "T") c.T = detail::parse_size(value, key);
        else if (key == "eta") c.eta = value == "auto" ? std::nullopt : std::optional(detail::parse_real(value, key));
        else if (key == "delta") c.delta = value == "auto" ? std::nullopt : std::optional(detail::parse_real(value, key));
        else if (key == "adversary") {
            try {
                c.adversary = parse_adversary_kind(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "adversary_period") c.adversary_period = detail::parse_size(value, key);
        else if (key == "adversary_seed") c.adversary_seed = detail::parse_size(value, key);
        else if (key == "adversary_value") c.adversary_value = detail::parse_real(value, key);
        else if (key == "adversary_file") c.adversary_file = value;
        else if (key == "kernel") {
            if (value == "random") c.kernel = KernelSource::Random;
            else if (value == "file") c.kernel = KernelSource::File;
            else throw ConfigError("kernel: expected random or file, got '" + value + "'");
        } else if (key == "kernel_seed") c.kernel_seed = detail::parse_size(value, key);
        else if (key == "kernel_file") c.kernel_file = value;
        else if (key == "s1") c.initial_state = detail::parse_size(value, key);
        else if (key == "seeds") c.seeds = detail::parse_seed_list(value, key);
        else if (key == "out") c.out_dir = value;
        else if (key == "log_hindsight_prefix") c.log_hindsight_prefix = detail::parse_bool(value, key);
        else if (key == "debug_collapse") c.debug_collapse = detail::parse_bool(value, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Everything a seed needs, with files loaded and "auto" values resolved.
struct ResolvedRun {
    RunConfig config;
    MdpSpec mdp;           // true environment
    AdversarySpec adversary;
    double eta = 0;
    double delta = 0;      // unknown setting only
    bool eta_warning = false;
};

inline ResolvedRun resolve(const RunConfig& c) {
    ResolvedRun r;
    r.config = c;
    if (c.T < 1) throw ConfigError("T must be >= 1");
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (c.debug_collapse && c.setting != Setting::Unknown) throw ConfigError("debug_collapse applies to the unknown setting only");
    if (c.delta && c.setting != Setting::Unknown) throw ConfigError("delta applies to the unknown setting only");

    if (c.kernel == KernelSource::File) {
        if (c.kernel_file.empty()) throw ConfigError("kernel = file requires kernel_file");
        r.mdp = load_mdp(c.kernel_file);
        if ((c.S && c.S != r.mdp.num_states) || (c.A && c.A != r.mdp.num_actions) || (c.H && c.H != r.mdp.horizon))
            throw ConfigError("S/A/H in config disagree with kernel_file");
        if (c.initial_state && *c.initial_state != r.mdp.initial_state)
            throw ConfigError("s1 in config disagrees with kernel_file");
    } else {
        if (c.S < 1 || c.A < 1 || c.H < 1) throw ConfigError("S, A and H must be >= 1");
        Rng krng(c.kernel_seed);
        r.mdp = MdpSpec{c.S, c.A, c.H, TransitionKernel::random(c.S, c.A, krng), c.initial_state.value_or(0)};
    }
    if (auto issues = validate(r.mdp); !issues.empty()) throw ConfigError("invalid MDP: " + issues.front().message);
    r.config.S = r.mdp.num_states;
    r.config.A = r.mdp.num_actions;
    r.config.H = r.mdp.horizon;
    r.config.initial_state = r.mdp.initial_state;
    const Dims d = r.mdp.dims();

    switch (c.adversary) {
    case AdversaryKind::Constant:
        if (c.adversary_value) {
            if (!(*c.adversary_value >= 0.0 && *c.adversary_value <= 1.0)) throw ConfigError("adversary_value must lie in [0,1]");
            r.adversary = AdversarySpec::make_constant(RewardTensor(d, *c.adversary_value));
        } else {
            Rng arng(c.adversary_seed);
            RewardTensor t(d);
            for (double& x : t.data()) x = arng.uniform();
            r.adversary = AdversarySpec::make_constant(std::move(t));
        }
        break;
    case AdversaryKind::IidUniform:
        r.adversary = AdversarySpec::make_iid_uniform(d, c.adversary_seed);
        break;
    case AdversaryKind::Switching:
        if (c.adversary_period < 1) throw ConfigError("adversary_period must be >= 1");
        r.adversary = AdversarySpec::make_switching(d, c.adversary_period);
        break;
    case AdversaryKind::Replay:
        if (c.adversary_file.empty()) throw ConfigError("adversary = replay requires adversary_file");
        try {
            r.adversary = AdversarySpec::make_replay(load_replay(c.adversary_file));
        } catch (const AdversaryError& e) {
            if (std::string(e.what()).rfind("cannot open", 0) == 0) throw IoError(e.what());
            throw ConfigError(e.what());
        }
        if (r.adversary.dims != d) throw ConfigError("replay file dimensions disagree with the MDP");
        break;
    }

    if (c.setting == Setting::Known) {
        r.eta = c.eta ? *c.eta : recommended_eta(d.states, d.actions, d.horizon, c.T);
    } else {
        const auto rec = recommended_params(d.states, d.actions, d.horizon, c.T);
        r.eta = c.eta ? *c.eta : rec.eta;
        r.delta = c.delta ? *c.delta : rec.delta;
        r.eta_warning = r.eta > 1.0 / static_cast<double>(d.horizon * d.horizon);
        if (!(r.delta > 0.0 && r.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    }
    if (!(r.eta > 0.0) || !std::isfinite(r.eta)) throw ConfigError("eta must be positive");
    return r;
}

} // namespace amdp
