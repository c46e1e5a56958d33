#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"

namespace pdfa {

namespace detail {
inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}
}  // namespace detail

/// Serializes with stable field order and probabilities at 17 significant
/// digits, so equal automata produce byte-equal documents and round-trips
/// reproduce every double exactly.
inline std::string to_json(const Automaton& a) {
    std::string out = "{\n  \"alphabet\": [";
    for (std::uint32_t t = 0; t < a.alphabet; ++t) {
        if (t) out += ", ";
        out += "\"" + detail::json_escape(a.token_names[t]) + "\"";
    }
    out += "],\n  \"initial\": " + std::to_string(a.initial) + ",\n  \"states\": [\n";
    for (std::size_t q = 0; q < a.states.size(); ++q) {
        const auto& s = a.states[q];
        out += "    {\"id\": " + std::to_string(q) + ", \"stop\": " + detail::fmt17(s.stop) +
               ", \"edges\": [";
        bool first = true;
        for (std::uint32_t t = 0; t < a.alphabet; ++t) {
            if (s.next[t] == kNoState) continue;
            if (!first) out += ", ";
            first = false;
            out += "{\"token\": \"" + detail::json_escape(a.token_names[t]) + "\", \"to\": " +
                   std::to_string(s.next[t]) + ", \"p\": " + detail::fmt17(s.prob[t]) + "}";
        }
        out += "]}";
        out += q + 1 < a.states.size() ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

inline Automaton from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed automaton document: ") + e.what());
    }
    try {
        Automaton a;
        const auto& alphabet = doc.at("alphabet");
        if (!alphabet.is_array()) throw ParseError("\"alphabet\" must be an array");
        std::map<std::string, Token> token_of;
        for (const auto& name : alphabet) {
            std::string n = name.get<std::string>();
            if (token_of.count(n)) throw ParseError("duplicate alphabet entry \"" + n + "\"");
            token_of[n] = static_cast<Token>(a.token_names.size());
            a.token_names.push_back(n);
        }
        a.alphabet = static_cast<std::uint32_t>(a.token_names.size());
        a.initial = doc.at("initial").get<StateId>();
        const auto& states = doc.at("states");
        if (!states.is_array() || states.empty()) throw ParseError("\"states\" must be a non-empty array");
        a.states.resize(states.size());
        std::vector<bool> seen_id(states.size(), false);
        for (const auto& st : states) {
            std::size_t id = st.at("id").get<std::size_t>();
            if (id >= a.states.size()) throw ParseError("state id " + std::to_string(id) + " out of range");
            if (seen_id[id]) throw ParseError("state " + std::to_string(id) + ": duplicate id");
            seen_id[id] = true;
            auto& s = a.states[id];
            s.stop = st.at("stop").get<double>();
            s.next.assign(a.alphabet, kNoState);
            s.prob.assign(a.alphabet, 0.0);
            for (const auto& e : st.at("edges")) {
                std::string name = e.at("token").get<std::string>();
                auto it = token_of.find(name);
                if (it == token_of.end())
                    throw ParseError("state " + std::to_string(id) + ": unknown token \"" + name + "\"");
                Token t = it->second;
                if (s.next[t] != kNoState)
                    throw ParseError("state " + std::to_string(id) + ": two targets for token \"" + name +
                                     "\" (automaton must be deterministic)");
                s.next[t] = e.at("to").get<StateId>();
                s.prob[t] = e.at("p").get<double>();
            }
        }
        a.validate(1e-6);
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed automaton document: ") + e.what());
    }
}

}  // namespace pdfa
