#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"

namespace pdfa {

/// Query source answering whole-string probabilities P(x). Repeated queries
/// for the same x must return the same value.
class Teacher {
public:
    virtual ~Teacher() = default;
    virtual double string_prob(const Word& x) = 0;
    virtual std::uint32_t alphabet_size() const = 0;
};

/// Exact oracle over a known PDFA.
class ExactTeacher : public Teacher {
public:
    explicit ExactTeacher(Automaton a) : sul_(std::move(a)) {}
    double string_prob(const Word& x) override { return sul_.string_prob(x); }
    std::uint32_t alphabet_size() const override { return sul_.alphabet; }
    const Automaton& sul() const { return sul_; }

private:
    Automaton sul_;
};

struct WordHash {
    std::size_t operator()(const Word& w) const {
        std::uint64_t h = 1469598103934665603ull;
        for (Token t : w) {
            h ^= t;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

/// Insert-once memo of answered queries with hit/miss counters.
struct QueryCache {
    std::unordered_map<Word, double, WordHash> answers;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
};

/// Caches any teacher; `misses` counts distinct strings sent to the backend.
class CachingTeacher : public Teacher {
public:
    explicit CachingTeacher(Teacher& inner) : inner_(inner) {}
    double string_prob(const Word& x) override {
        auto it = cache_.answers.find(x);
        if (it != cache_.answers.end()) {
            ++cache_.hits;
            return it->second;
        }
        double p = inner_.string_prob(x);  // only answered queries count as misses
        ++cache_.misses;
        cache_.answers.emplace(x, p);
        return p;
    }
    std::uint32_t alphabet_size() const override { return inner_.alphabet_size(); }
    std::uint64_t distinct_queries() const { return cache_.misses; }
    std::uint64_t hits() const { return cache_.hits; }

private:
    Teacher& inner_;
    QueryCache cache_;
};

}  // namespace pdfa
