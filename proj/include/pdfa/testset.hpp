#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/log.hpp"
#include "pdfa/teacher.hpp"

namespace pdfa {

struct TestSet {
    std::uint32_t alphabet = 0;
    std::vector<Word> strings;
    std::vector<double> reference;  // empty, or one probability per string

    bool has_reference() const { return reference.size() == strings.size() && !strings.empty(); }
};

/// Whitespace corpus format: header "N |Sigma|", then N lines
/// "len t0 t1 ... t{len-1}" with an optional trailing reference probability.
inline TestSet read_test_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open test set: " + path);
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": " + msg);
    };

    TestSet ts;
    std::size_t expected = 0;
    {
        ++lineno;
        if (!std::getline(in, line)) fail("missing header line");
        std::istringstream hs(line);
        long long n = -1, sigma = -1;
        if (!(hs >> n >> sigma) || n < 0 || sigma < 0) fail("header must be \"N |Sigma|\"");
        expected = static_cast<std::size_t>(n);
        ts.alphabet = static_cast<std::uint32_t>(sigma);
    }
    bool any_ref = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        long long len = 0;
        if (!(ls >> len)) {
            std::string rest;
            if (ls.clear(), std::getline(ls, rest) && rest.find_first_not_of(" \t\r") == std::string::npos)
                continue;  // blank line
            fail("expected a string length");
        }
        if (len < 0) fail("negative string length");
        Word w;
        for (long long i = 0; i < len; ++i) {
            long long t = -1;
            if (!(ls >> t)) fail("string shorter than its declared length " + std::to_string(len));
            if (t < 0 || static_cast<std::uint64_t>(t) >= ts.alphabet)
                fail("token " + std::to_string(t) + " outside alphabet of size " + std::to_string(ts.alphabet));
            w.push_back(static_cast<Token>(t));
        }
        std::string tail;
        if (ls >> tail) {
            // optional trailing reference probability
            try {
                std::size_t used = 0;
                double p = std::stod(tail, &used);
                if (used != tail.size()) throw std::invalid_argument(tail);
                if (p < 0.0 || p > 1.0) fail("reference probability outside [0,1]");
                if (!any_ref && !ts.strings.empty()) fail("reference probability missing on earlier lines");
                any_ref = true;
                ts.reference.push_back(p);
            } catch (const std::exception&) {
                fail("string longer than its declared length " + std::to_string(len));
            }
            std::string extra;
            if (ls >> extra) fail("trailing fields after reference probability");
        } else if (any_ref) {
            fail("missing reference probability");
        }
        ts.strings.push_back(std::move(w));
    }
    lineno = 0;
    if (ts.strings.size() != expected)
        throw ParseError(path + ": header declares " + std::to_string(expected) + " strings, found " +
                         std::to_string(ts.strings.size()));
    return ts;
}

struct EvalReport {
    double mse = 0.0;
    double max_abs_err = 0.0;
    std::size_t n_strings = 0;
    std::size_t hypothesis_states = 0;
    std::size_t out_of_alphabet = 0;  // strings scored as pi = 0
};

/// MSE / max error of the hypothesis against reference probabilities.
/// Tokens outside the hypothesis alphabet score pi = 0 and are counted.
inline EvalReport evaluate_strings(const Automaton& hypothesis, const std::vector<Word>& strings,
                                   const std::vector<double>& reference) {
    if (strings.size() != reference.size())
        throw ConfigError("evaluate_strings: strings and references differ in length");
    EvalReport r;
    r.n_strings = strings.size();
    r.hypothesis_states = hypothesis.num_states();
    double sq = 0.0;
    for (std::size_t i = 0; i < strings.size(); ++i) {
        double pi = 0.0;
        try {
            pi = hypothesis.string_prob(strings[i]);
        } catch (const InvalidTokenError&) {
            ++r.out_of_alphabet;
        }
        double e = std::fabs(pi - reference[i]);
        if (e > r.max_abs_err) r.max_abs_err = e;
        sq += e * e;
    }
    if (r.out_of_alphabet > 0)
        log_error(std::to_string(r.out_of_alphabet) + " test strings use tokens outside the hypothesis alphabet");
    if (!strings.empty()) r.mse = sq / static_cast<double>(strings.size());
    return r;
}

inline std::string to_json(const EvalReport& r) {
    return std::string("{\"mse\": ") + detail::fmt17(r.mse) +
           ", \"max_abs_err\": " + detail::fmt17(r.max_abs_err) +
           ", \"n_strings\": " + std::to_string(r.n_strings) +
           ", \"hypothesis_states\": " + std::to_string(r.hypothesis_states) +
           ", \"out_of_alphabet\": " + std::to_string(r.out_of_alphabet) + "}\n";
}

}  // namespace pdfa
