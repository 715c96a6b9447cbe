#pragma once

// MDP instance files:
//
//   # comment
//   S 3
//   A 2
//   H 4
//   s1 0
//   0.5 0.25 0.25     <- p(.|s=0,a=0)
//   ...               <- one line per (s,a), s-major, S probabilities each
//
// Parsing only checks syntax and shapes; use validate() for the kernel.

#include "amdp/harness/errors.hpp"
#include "amdp/mdp.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace amdp {

namespace detail {

inline std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

inline bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

inline std::size_t parse_size(const std::string& text, const std::string& what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
    }
    if (pos != text.size()) throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

} // namespace detail

inline MdpSpec read_mdp(std::istream& in) {
    std::map<std::string, std::size_t> header;
    MdpSpec spec;
    std::size_t row = 0;
    std::string raw;
    std::size_t line_no = 0;
    auto where = [&] { return "line " + std::to_string(line_no); };

    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = detail::strip_comment(raw);
        if (detail::blank(line)) continue;
        std::istringstream ls(line);

        if (header.size() < 4) {
            std::string key, value, extra;
            ls >> key >> value;
            if (value.empty() || (ls >> extra)) throw ConfigError(where() + ": expected '<key> <value>'");
            if (key != "S" && key != "A" && key != "H" && key != "s1")
                throw ConfigError(where() + ": unknown key '" + key + "' (expected S, A, H, s1)");
            if (header.count(key)) throw ConfigError(where() + ": duplicate key '" + key + "'");
            header[key] = detail::parse_size(value, where() + " " + key);
            if (header.size() == 4) {
                spec.num_states = header["S"];
                spec.num_actions = header["A"];
                spec.horizon = header["H"];
                spec.initial_state = header["s1"];
                if (spec.num_states < 1 || spec.num_actions < 1 || spec.horizon < 1)
                    throw ConfigError("S, A and H must be >= 1");
                spec.kernel = TransitionKernel(spec.num_states, spec.num_actions);
            }
            continue;
        }

        if (row >= spec.num_states * spec.num_actions)
            throw ConfigError(where() + ": more kernel rows than S*A = " + std::to_string(spec.num_states * spec.num_actions));
        const std::size_t s = row / spec.num_actions, a = row % spec.num_actions;
        auto out = spec.kernel.row(s, a);
        for (std::size_t n = 0; n < spec.num_states; ++n) {
            if (!(ls >> out[n]))
                throw ConfigError(where() + ": row for (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                  ") needs " + std::to_string(spec.num_states) + " numbers");
        }
        std::string extra;
        if (ls >> extra) throw ConfigError(where() + ": too many numbers in row");
        ++row;
    }
    if (header.size() < 4) throw ConfigError("MDP file: missing header keys (need S, A, H, s1)");
    if (row != spec.num_states * spec.num_actions)
        throw ConfigError("MDP file: expected " + std::to_string(spec.num_states * spec.num_actions) +
                          " kernel rows, found " + std::to_string(row));
    return spec;
}

inline MdpSpec load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open MDP file '" + path + "'");
    return read_mdp(in);
}

inline void write_mdp(std::ostream& out, const MdpSpec& spec) {
    out << "S " << spec.num_states << "\nA " << spec.num_actions << "\nH " << spec.horizon << "\ns1 "
        << spec.initial_state << '\n';
    out.precision(17);
    for (std::size_t s = 0; s < spec.num_states; ++s) {
        for (std::size_t a = 0; a < spec.num_actions; ++a) {
            const auto row = spec.kernel.row(s, a);
            for (std::size_t n = 0; n < row.size(); ++n) out << (n ? " " : "") << row[n];
            out << '\n';
        }
    }
}

} // namespace amdp
