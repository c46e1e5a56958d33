#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/teacher.hpp"

namespace pdfa {

/// Randomized equivalence testing: uniform tokens, geometric length law.
struct EquivalenceConfig {
    std::uint32_t n_samples = 10000;
    double p_cont = 0.9;       // continue probability after each position
    std::uint32_t l_max = 50;  // hard length cap
    std::uint64_t seed = 0;
    double mu = 1e-4;

    void validate() const {
        if (n_samples < 1) throw ConfigError("equivalence n_samples must be >= 1");
        if (!(p_cont > 0.0) || !(p_cont < 1.0)) throw ConfigError("equivalence p_cont must be in (0,1)");
        if (l_max < 1) throw ConfigError("equivalence l_max must be >= 1");
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// One random test string: before each position continue w.p. p_cont, so the
/// empty string is a possible sample; tokens i.i.d. uniform.
inline Word sample_test_string(const EquivalenceConfig& cfg, std::uint32_t alphabet, std::mt19937_64& rng) {
    Word x;
    if (alphabet == 0) return x;  // only the empty string exists
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<Token> tok(0, alphabet - 1);
    while (x.size() < cfg.l_max && coin(rng) < cfg.p_cont) x.push_back(tok(rng));
    return x;
}

/// Draws up to n_samples strings; the first x with |P(x) - pi(x)| > mu is
/// returned as a counterexample, otherwise the hypothesis passes.
inline std::optional<Word> equivalence_query(const Automaton& hypothesis, Teacher& teacher,
                                             const EquivalenceConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const std::uint32_t alphabet = teacher.alphabet_size();
    for (std::uint32_t i = 0; i < cfg.n_samples; ++i) {
        Word x = sample_test_string(cfg, alphabet, rng);
        double p = teacher.string_prob(x);
        double pi = hypothesis.string_prob(x);
        if (std::fabs(p - pi) > cfg.mu) return x;
    }
    return std::nullopt;
}

}  // namespace pdfa
