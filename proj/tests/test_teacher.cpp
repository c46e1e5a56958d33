#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pdfa/equivalence.hpp"
#include "pdfa/learner.hpp"
#include "pdfa/remote_teacher.hpp"
#include "pdfa/teacher.hpp"

using namespace pdfa;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
std::string mock_cmd() {
    return "python3 " + oracles::fixture_path("mock_teacher.py") + " " + oracles::fixture_path("fig1.json");
}
}  // namespace

TEST_CASE("exact teacher answers hand-computed probabilities") {
    ExactTeacher t(oracles::fig1());
    CHECK_THAT(t.string_prob({}), WithinAbs(0.1, 1e-15));
    CHECK_THAT(t.string_prob({1, 1}), WithinAbs(0.03, 1e-15));
    CHECK_THROWS_AS(t.string_prob({9}), InvalidTokenError);
}

TEST_CASE("query cache is insert-once with monotone counters") {
    ExactTeacher inner(oracles::fig1());
    CachingTeacher t(inner);
    CHECK(t.string_prob({1}) == t.string_prob({1}));
    CHECK(t.distinct_queries() == 1);
    CHECK(t.hits() == 1);
    t.string_prob({0, 1});
    CHECK(t.distinct_queries() == 2);
}

TEST_CASE("cache transparency: identical learning results, different counters") {
    LearnerConfig cfg;
    cfg.mu = 0.02;
    cfg.max_extends = 4;
    cfg.exclude_final_edge = true;
    cfg.equivalence.seed = 7;

    ExactTeacher bare(oracles::fig1());
    RunReport direct = run_learner(bare, cfg);

    ExactTeacher inner(oracles::fig1());
    CachingTeacher wrapped(inner);  // learner adds its own cache on top
    RunReport cached = run_learner(wrapped, cfg);

    CHECK(direct.hypothesis == cached.hypothesis);
    CHECK(direct.rounds == cached.rounds);
    CHECK(direct.counterexamples == cached.counterexamples);
    CHECK(to_string(direct.stop_reason) == std::string(to_string(cached.stop_reason)));
}

TEST_CASE("test-string sampler") {
    EquivalenceConfig cfg;

    SECTION("vanishing continue probability gives only empty strings") {
        cfg.p_cont = 1e-12;
        std::mt19937_64 rng(1);
        for (int i = 0; i < 50; ++i) CHECK(sample_test_string(cfg, 4, rng).empty());
    }
    SECTION("identical seeds give identical sample sequences") {
        std::mt19937_64 r1(99), r2(99);
        for (int i = 0; i < 200; ++i) CHECK(sample_test_string(cfg, 3, r1) == sample_test_string(cfg, 3, r2));
    }
    SECTION("empirical mean length matches the geometric law within 5%") {
        cfg.p_cont = 0.9;
        cfg.l_max = 1000;
        std::mt19937_64 rng(5);
        double total = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) total += static_cast<double>(sample_test_string(cfg, 2, rng).size());
        double mean = total / n;
        CHECK_THAT(mean, WithinRel(0.9 / 0.1, 0.05));
    }
    SECTION("the length cap is honored") {
        cfg.p_cont = 1.0 - 1e-12;
        cfg.l_max = 17;
        std::mt19937_64 rng(2);
        CHECK(sample_test_string(cfg, 2, rng).size() == 17);
    }
}

TEST_CASE("equivalence query") {
    Automaton sul = oracles::fig1();
    ExactTeacher teacher(sul);

    SECTION("an exact copy of the SUL passes") {
        EquivalenceConfig cfg;
        cfg.mu = 1e-4;
        cfg.seed = 11;
        CHECK_FALSE(equivalence_query(sul, teacher, cfg));
    }
    SECTION("a perturbed stop probability is rejected with a verified counterexample") {
        Automaton wrong = oracles::perturb_stop(sul, 0, 0.01);
        EquivalenceConfig cfg;
        cfg.mu = 1e-4;
        cfg.seed = 11;
        auto cex = equivalence_query(wrong, teacher, cfg);
        REQUIRE(cex);
        CHECK(std::fabs(teacher.string_prob(*cex) - wrong.string_prob(*cex)) > cfg.mu);
    }
    SECTION("zero samples are rejected by the config invariant") {
        EquivalenceConfig cfg;
        cfg.n_samples = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        CHECK_THROWS_AS(equivalence_query(sul, teacher, cfg), ConfigError);
    }
    SECTION("length-law parameters are validated") {
        EquivalenceConfig cfg;
        cfg.p_cont = 1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.p_cont = 0.9;
        cfg.l_max = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("wire response parsing maps every malformed line to a typed error") {
    CHECK_THAT(parse_string_prob_response(R"({"id":1,"p":0.0123})", 1), WithinAbs(0.0123, 1e-15));
    const char* bad[] = {
        "",
        "not json at all",
        "[1,2,3]",
        "{}",
        R"({"id":2,"p":0.5})",             // wrong id
        R"({"id":1})",                     // missing p
        R"({"id":1,"p":"high"})",          // non-numeric p
        R"({"id":1,"p":1.5})",             // out of range
        R"({"id":1,"p":-0.1})",            // out of range
        R"({"id":1,"p":null})",
        R"({"type":"error","message":"boom"})",
        "{\"id\":1,\"p\":",                // truncated
    };
    for (const char* line : bad) CHECK_THROWS_AS(parse_string_prob_response(line, 1), TeacherError);
}

TEST_CASE("subprocess teacher speaks the JSONL protocol") {
    RemoteTeacher remote(mock_cmd());
    CHECK(remote.alphabet_size() == 2);
    ExactTeacher exact(oracles::fig1());

    SECTION("handshake and probability echo match the exact oracle") {
        CHECK(remote.string_prob({}) == exact.string_prob({}));
        CHECK(remote.string_prob({1, 1}) == exact.string_prob({1, 1}));
        CHECK(remote.string_prob({0, 1, 0, 1}) == exact.string_prob({0, 1, 0, 1}));
    }
    SECTION("the mock reports unknown tokens as protocol errors") {
        CHECK_THROWS_AS(remote.string_prob({17}), TeacherError);
    }
}

TEST_CASE("subprocess teacher failure modes") {
    SECTION("out-of-range probability") {
        RemoteTeacher remote(
            "python3 -c 'import sys\n"
            "sys.stdin.readline(); print(\"{\\\"type\\\":\\\"hello\\\",\\\"alphabet_size\\\":2}\", flush=True)\n"
            "sys.stdin.readline(); print(\"{\\\"id\\\":1,\\\"p\\\":1.5}\", flush=True)'");
        CHECK_THROWS_MATCHES(remote.string_prob({0}), TeacherError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("outside [0,1]")));
    }
    SECTION("garbage response line") {
        RemoteTeacher remote(
            "python3 -c 'import sys\n"
            "sys.stdin.readline(); print(\"{\\\"type\\\":\\\"hello\\\",\\\"alphabet_size\\\":2}\", flush=True)\n"
            "sys.stdin.readline(); print(\"%%% not json %%%\", flush=True)'");
        CHECK_THROWS_AS(remote.string_prob({0}), TeacherError);
    }
    SECTION("immediate exit is a broken pipe") {
        CHECK_THROWS_AS(RemoteTeacher("true"), TeacherError);
    }
    SECTION("silence is a timeout") {
        CHECK_THROWS_AS(RemoteTeacher("sleep 30", 0.2), TeacherError);
    }
    SECTION("a malformed hello is rejected") {
        CHECK_THROWS_AS(RemoteTeacher("echo '{\"type\":\"hullo\"}'"), TeacherError);
    }
}
