#pragma once

// Brute-force and closed-form oracles used by the test suites. Everything in
// here is independent of the library's evaluation/learning paths it checks.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/observation_tree.hpp"

namespace oracles {

/// The running three-state example: q0(stop .1) -a/.3-> q0, -b/.6-> q1;
/// q1(stop .3) -a/.2-> q0, -b/.5-> q2; q2(stop .1) -a/.2-> q2, -b/.7-> q2.
inline pdfa::Automaton fig1() {
    pdfa::Automaton a;
    a.alphabet = 2;
    a.initial = 0;
    a.token_names = {"a", "b"};
    a.states.resize(3);
    auto set = [&](std::size_t q, double stop, pdfa::StateId ta, double pa, pdfa::StateId tb, double pb) {
        a.states[q].stop = stop;
        a.states[q].next = {ta, tb};
        a.states[q].prob = {pa, pb};
    };
    set(0, 0.1, 0, 0.3, 1, 0.6);
    set(1, 0.3, 0, 0.2, 2, 0.5);
    set(2, 0.1, 2, 0.2, 2, 0.7);
    return a;
}

/// All words over [0, sigma) with length <= maxlen, shortest first.
inline std::vector<pdfa::Word> enumerate_words(std::uint32_t sigma, std::size_t maxlen) {
    std::vector<pdfa::Word> out{{}};
    std::size_t layer_begin = 0;
    for (std::size_t len = 1; len <= maxlen; ++len) {
        std::size_t layer_end = out.size();
        for (std::size_t i = layer_begin; i < layer_end; ++i)
            for (pdfa::Token t = 0; t < sigma; ++t) {
                pdfa::Word w = out[i];
                w.push_back(t);
                out.push_back(std::move(w));
            }
        layer_begin = layer_end;
    }
    return out;
}

/// Total probability of strings of length <= len, by the linear recurrence
/// G_q(k) = stop(q) + sum_a prob(q,a) * G_{next(q,a)}(k-1). Closed-form route,
/// no enumeration.
inline double stop_mass_within(const pdfa::Automaton& a, std::size_t len) {
    std::vector<double> g(a.states.size());
    for (std::size_t q = 0; q < a.states.size(); ++q) g[q] = a.states[q].stop;
    for (std::size_t k = 0; k < len; ++k) {
        std::vector<double> next(a.states.size());
        for (std::size_t q = 0; q < a.states.size(); ++q) {
            double v = a.states[q].stop;
            for (std::uint32_t t = 0; t < a.alphabet; ++t)
                if (a.states[q].next[t] != pdfa::kNoState) v += a.states[q].prob[t] * g[a.states[q].next[t]];
            next[q] = v;
        }
        g = next;
    }
    return g[a.initial];
}

/// Overwrites every node's estimates with the exact values of the generating
/// automaton (as if the weight accumulation had fully converged). Access
/// probabilities stay as answered by the exact teacher.
inline void idealize_estimates(pdfa::ObservationTree& tree, const pdfa::Automaton& a) {
    for (pdfa::NodeId q = 0; q < tree.size(); ++q) {
        pdfa::Word x = tree.access_word(q);
        pdfa::StateId s = a.initial;
        for (pdfa::Token t : x) s = a.states[s].next[t];
        tree.node(q).stop_est = a.states[s].stop;
        for (pdfa::Token t = 0; t < tree.sigma(); ++t) {
            tree.node(q).trans_est[t] = a.states[s].prob[t];
            tree.node(q).weight[t] = a.states[s].prob[t];
        }
    }
}

/// Tree-evaluated pi(x_q^A): trans_est product along the access path times
/// the node's stop estimate.
inline double tree_pi(const pdfa::ObservationTree& tree, pdfa::NodeId q) {
    return tree.path_product(q) * tree.node(q).stop_est;
}

/// Worst |pi(x_q^A) - P_A(q)| over all nodes (the Lemma-1 gap).
inline double lemma1_gap(const pdfa::ObservationTree& tree) {
    double worst = 0.0;
    for (pdfa::NodeId q = 0; q < tree.size(); ++q) {
        double gap = std::fabs(tree_pi(tree, q) - tree.node(q).access_prob);
        if (gap > worst) worst = gap;
    }
    return worst;
}

/// Copy of the automaton with state q's stop probability shifted by delta and
/// the state's distribution renormalized (stays a valid PDFA).
inline pdfa::Automaton perturb_stop(const pdfa::Automaton& a, std::size_t q, double delta) {
    pdfa::Automaton out = a;
    out.states[q].stop += delta;
    double sum = out.states[q].stop;
    for (double p : out.states[q].prob) sum += p;
    out.states[q].stop /= sum;
    for (auto& p : out.states[q].prob) p /= sum;
    return out;
}

inline std::string fixture_path(const std::string& name) {
    return std::string(PDFA_FIXTURES_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace oracles
