#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pdfa/errors.hpp"

namespace pdfa {

using Token = std::uint32_t;
using Word = std::vector<Token>;
using StateId = std::uint32_t;

inline constexpr StateId kNoState = std::numeric_limits<StateId>::max();

/// Probabilistic deterministic finite automaton. Transitions are dense per
/// token (kNoState = undefined); per-state mass is stop + sum of edge probs.
/// Immutable by convention once built; evaluation is const and thread-safe.
struct Automaton {
    struct State {
        double stop = 0.0;
        std::vector<StateId> next;  // size alphabet, kNoState if undefined
        std::vector<double> prob;   // size alphabet, 0 if undefined
    };

    StateId initial = 0;
    std::uint32_t alphabet = 0;
    std::vector<State> states;
    std::vector<std::string> token_names;  // size alphabet

    std::size_t num_states() const { return states.size(); }

    void check_token(Token t) const {
        if (t >= alphabet)
            throw InvalidTokenError("token id " + std::to_string(t) + " outside alphabet of size " +
                                    std::to_string(alphabet));
    }

    /// P(x): product of transition probabilities along x, times the stop
    /// probability of the final state. Undefined transition => 0.
    double string_prob(const Word& x) const {
        StateId q = initial;
        double p = 1.0;
        for (Token t : x) {
            check_token(t);
            const State& s = states[q];
            if (s.next[t] == kNoState) return 0.0;
            p *= s.prob[t];
            q = s.next[t];
        }
        return p * states[q].stop;
    }

    /// P(x Sigma*): the transition product along x without the stop factor.
    double prefix_prob(const Word& x) const {
        StateId q = initial;
        double p = 1.0;
        for (Token t : x) {
            check_token(t);
            const State& s = states[q];
            if (s.next[t] == kNoState) return 0.0;
            p *= s.prob[t];
            q = s.next[t];
        }
        return p;
    }

    /// Normalization + reachability check; tol covers parsed documents (1e-6),
    /// generated automata stay within 1e-9.
    void validate(double tol = 1e-6) const {
        if (states.empty()) throw ParseError("automaton has no states");
        if (initial >= states.size()) throw ParseError("initial state out of range");
        for (std::size_t q = 0; q < states.size(); ++q) {
            const State& s = states[q];
            if (s.next.size() != alphabet || s.prob.size() != alphabet)
                throw ParseError("state " + std::to_string(q) + ": wrong arity");
            double sum = s.stop;
            if (s.stop < 0.0 || s.stop > 1.0)
                throw ParseError("state " + std::to_string(q) + ": stop probability outside [0,1]");
            for (std::uint32_t t = 0; t < alphabet; ++t) {
                if (s.next[t] == kNoState) continue;
                if (s.next[t] >= states.size())
                    throw ParseError("state " + std::to_string(q) + ": edge target out of range");
                if (s.prob[t] < 0.0 || s.prob[t] > 1.0)
                    throw ParseError("state " + std::to_string(q) + ": edge probability outside [0,1]");
                sum += s.prob[t];
            }
            if (std::fabs(sum - 1.0) > tol)
                throw ParseError("state " + std::to_string(q) + ": probabilities sum to " +
                                 std::to_string(sum) + ", expected 1");
        }
        // reachability from the initial state
        std::vector<bool> seen(states.size(), false);
        std::vector<StateId> stack{initial};
        seen[initial] = true;
        while (!stack.empty()) {
            StateId q = stack.back();
            stack.pop_back();
            for (std::uint32_t t = 0; t < alphabet; ++t) {
                StateId r = states[q].next[t];
                if (r != kNoState && !seen[r]) {
                    seen[r] = true;
                    stack.push_back(r);
                }
            }
        }
        for (std::size_t q = 0; q < states.size(); ++q)
            if (!seen[q]) throw ParseError("state " + std::to_string(q) + ": unreachable from initial state");
    }

    bool operator==(const Automaton& other) const {
        if (initial != other.initial || alphabet != other.alphabet ||
            states.size() != other.states.size() || token_names != other.token_names)
            return false;
        for (std::size_t q = 0; q < states.size(); ++q) {
            if (states[q].stop != other.states[q].stop || states[q].next != other.states[q].next ||
                states[q].prob != other.states[q].prob)
                return false;
        }
        return true;
    }
};

/// Seeded random proper PDFA: connected, deterministic, per-state Dirichlet-like
/// distribution with stop probability >= 0.05 everywhere.
inline Automaton random_pdfa(std::uint32_t n_states, std::uint32_t alphabet_size, std::uint64_t seed) {
    if (n_states == 0 || alphabet_size == 0)
        throw ConfigError("random_pdfa requires at least one state and one token");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> unit_gamma(1.0, 1.0);
    std::gamma_distribution<double> stop_gamma(2.0, 1.0);

    Automaton a;
    a.alphabet = alphabet_size;
    a.initial = 0;
    a.states.resize(n_states);
    for (std::uint32_t t = 0; t < alphabet_size; ++t) a.token_names.push_back("t" + std::to_string(t));

    std::uniform_int_distribution<StateId> pick_state(0, n_states - 1);
    std::uniform_int_distribution<std::uint32_t> pick_token(0, alphabet_size - 1);

    for (auto& s : a.states) {
        s.next.assign(alphabet_size, kNoState);
        s.prob.assign(alphabet_size, 0.0);
        while (true) {
            std::vector<double> draw(alphabet_size + 1);
            double sum = 0.0;
            for (std::uint32_t t = 0; t < alphabet_size; ++t) sum += draw[t] = unit_gamma(rng);
            sum += draw[alphabet_size] = stop_gamma(rng);
            if (draw[alphabet_size] / sum < 0.05) continue;  // stop floor keeps the PDFA proper
            s.stop = draw[alphabet_size] / sum;
            for (std::uint32_t t = 0; t < alphabet_size; ++t) s.prob[t] = draw[t] / sum;
            break;
        }
        for (std::uint32_t t = 0; t < alphabet_size; ++t) s.next[t] = pick_state(rng);
    }
    // redirect edges until every state is reachable
    while (true) {
        std::vector<bool> seen(n_states, false);
        std::vector<StateId> order, stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            StateId q = stack.back();
            stack.pop_back();
            order.push_back(q);
            for (std::uint32_t t = 0; t < alphabet_size; ++t) {
                StateId r = a.states[q].next[t];
                if (!seen[r]) {
                    seen[r] = true;
                    stack.push_back(r);
                }
            }
        }
        StateId missing = kNoState;
        for (StateId q = 0; q < n_states; ++q)
            if (!seen[q]) {
                missing = q;
                break;
            }
        if (missing == kNoState) break;
        std::uniform_int_distribution<std::size_t> pick_seen(0, order.size() - 1);
        a.states[order[pick_seen(rng)]].next[pick_token(rng)] = missing;
    }
    a.validate(1e-9);
    return a;
}

namespace detail {
inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
inline std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}
}  // namespace detail

/// DOT rendering: nodes labelled "q{i}/{stop}", edges "{token}/{prob}",
/// arrowhead marker into the initial state.
inline std::string to_dot(const Automaton& a, const std::vector<std::string>* labels = nullptr) {
    const std::vector<std::string>& names = labels != nullptr ? *labels : a.token_names;
    std::string out = "digraph pdfa {\n  rankdir=LR;\n  __start [shape=point, label=\"\"];\n";
    for (std::size_t q = 0; q < a.states.size(); ++q)
        out += "  q" + std::to_string(q) + " [shape=circle, label=\"q" + std::to_string(q) + "/" +
               detail::fmt_short(a.states[q].stop) + "\"];\n";
    out += "  __start -> q" + std::to_string(a.initial) + ";\n";
    for (std::size_t q = 0; q < a.states.size(); ++q)
        for (std::uint32_t t = 0; t < a.alphabet; ++t) {
            if (a.states[q].next[t] == kNoState) continue;
            std::string name = t < names.size() ? names[t] : "t" + std::to_string(t);
            out += "  q" + std::to_string(q) + " -> q" + std::to_string(a.states[q].next[t]) +
                   " [label=\"" + name + "/" + detail::fmt_short(a.states[q].prob[t]) + "\"];\n";
        }
    out += "}\n";
    return out;
}

}  // namespace pdfa
