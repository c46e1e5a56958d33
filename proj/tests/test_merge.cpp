#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pdfa/merge.hpp"
#include "pdfa/observation_tree.hpp"
#include "pdfa/teacher.hpp"

using namespace pdfa;
using Catch::Matchers::WithinAbs;

namespace {

NodeId walk(const ObservationTree& t, const Word& w) {
    NodeId q = t.root();
    for (Token a : w) q = t.node(q).children[a];
    return q;
}

// Observation tree over the given automaton with fully converged estimates.
struct IdealizedFixture {
    ExactTeacher teacher;
    ObservationTree tree;
    IdealizedFixture(const Automaton& a, int depth) : teacher(a), tree(teacher) {
        for (int i = 0; i < depth; ++i) tree.extend_fringe();
        oracles::idealize_estimates(tree, a);
    }
};

}  // namespace

TEST_CASE("consistency distance on converged estimates") {
    IdealizedFixture fx(oracles::fig1(), 3);
    Minimizer m(fx.tree, 1e-4);

    SECTION("a true revisit of the initial state scores zero") {
        // "aa" loops back to the start; prefix 0.3*0.3 = 0.09, 0.09*0.1 = P("aa")
        CHECK_THAT(m.consistency_distance(fx.tree.root(), walk(fx.tree, {0, 0})), WithinAbs(0.0, 1e-15));
    }
    SECTION("a genuinely different state scores its probability gap") {
        // prefix("b") = 0.6, |0.6*0.1 - 0.18| = 0.12
        CHECK_THAT(m.consistency_distance(fx.tree.root(), walk(fx.tree, {1})), WithinAbs(0.12, 1e-15));
    }
    SECTION("exact equivalents score zero wherever they sit") {
        CHECK_THAT(m.consistency_distance(walk(fx.tree, {1}), walk(fx.tree, {0, 1})), WithinAbs(0.0, 1e-15));
    }
}

TEST_CASE("mergeable pairs the whole blue subtree against the machine") {
    IdealizedFixture fx(oracles::fig1(), 3);
    Minimizer m(fx.tree, 1e-4);

    SECTION("true equivalent with matching subtree yields a zero-score candidate") {
        auto cand = m.mergeable(fx.tree.root(), walk(fx.tree, {0, 0}));
        REQUIRE(cand);
        CHECK_THAT(cand->score, WithinAbs(0.0, 1e-12));
        CHECK(cand->pair_count > 1);
    }
    SECTION("mismatched stop behaviour fails at the root pair") {
        CHECK_FALSE(m.mergeable(fx.tree.root(), walk(fx.tree, {1})));
    }
    SECTION("a childless blue passes vacuously on the root pair alone") {
        IdealizedFixture shallow(oracles::fig1(), 1);
        Minimizer ms(shallow.tree, 1e-4);
        auto cand = ms.mergeable(shallow.tree.root(), walk(shallow.tree, {0}));
        REQUIRE(cand);
        CHECK(cand->pair_count == 1);
    }
    SECTION("distance degrades to the access probability when the prefix is zero") {
        IdealizedFixture z(oracles::fig1(), 2);
        NodeId blue = walk(z.tree, {0, 1});
        z.tree.node(z.tree.root()).trans_est[0] = 0.0;  // kill the path product
        Minimizer mz(z.tree, 1e-4);
        CHECK_THAT(mz.consistency_distance(z.tree.root(), blue),
                   WithinAbs(z.tree.node(blue).access_prob, 1e-15));
    }
}

TEST_CASE("apply merge redirects, folds and undoes") {
    SECTION("merging a self-loop equivalent creates the loop in the machine") {
        IdealizedFixture fx(oracles::fig1(), 3);
        Minimizer m(fx.tree, 1e-4);
        auto cand = m.mergeable(fx.tree.root(), walk(fx.tree, {0}));
        REQUIRE(cand);
        m.apply_merge(*cand);
        CHECK(fx.tree.node(fx.tree.root()).children[0] == fx.tree.root());
        CHECK(m.log().size() == 1);
        CHECK(m.log()[0].kind == MergeOp::Kind::kMerge);
    }
    SECTION("merging a leaf is a pure redirect") {
        IdealizedFixture fx(oracles::fig1(), 1);
        Minimizer m(fx.tree, 1e-4);
        auto cand = m.mergeable(fx.tree.root(), walk(fx.tree, {0}));
        REQUIRE(cand);
        m.apply_merge(*cand);
        CHECK(m.log()[0].undo.size() == 1);  // only the incoming edge moved
    }
    SECTION("undo restores the pre-merge tree exactly") {
        IdealizedFixture fx(oracles::fig1(), 3);
        std::uint64_t before = fx.tree.structural_hash();
        Minimizer m(fx.tree, 1e-4);
        auto cand = m.mergeable(fx.tree.root(), walk(fx.tree, {0}));
        REQUIRE(cand);
        m.apply_merge(*cand);
        CHECK(fx.tree.structural_hash() != before);
        m.undo_last();
        CHECK(fx.tree.structural_hash() == before);
    }
}

TEST_CASE("merge layer") {
    SECTION("a layer where every blue merges keeps the red set unchanged") {
        Automaton one;
        one.alphabet = 1;
        one.token_names = {"a"};
        one.states.resize(1);
        one.states[0].stop = 0.5;
        one.states[0].next = {0};
        one.states[0].prob = {0.5};
        IdealizedFixture fx(one, 2);
        Minimizer m(fx.tree, 1e-4);
        REQUIRE(m.merge_layer());
        CHECK(m.reds().size() == 1);
        CHECK(m.complete_basis());
    }
    SECTION("a blue failing against all reds turns red") {
        IdealizedFixture fx(oracles::fig1(), 2);
        Minimizer m(fx.tree, 1e-4);
        REQUIRE(m.merge_layer());
        // "a" merges into the root, "b" cannot merge anywhere
        CHECK(m.reds().size() == 2);
        CHECK(m.reds()[1] == walk(fx.tree, {1}));
    }
    SECTION("full minimization of the three-state example finds three reds") {
        IdealizedFixture fx(oracles::fig1(), 3);
        Minimizer m(fx.tree, 1e-4);
        auto basis = m.run();
        REQUIRE(basis);
        CHECK(m.reds().size() == 3);
    }
}

TEST_CASE("complete basis detection") {
    SECTION("single red with all self-loops is complete") {
        Automaton one = random_pdfa(1, 2, 5);
        IdealizedFixture fx(one, 1);
        Minimizer m(fx.tree, 1.0 - 1e-9);  // everything merges
        auto basis = m.run();
        REQUIRE(basis);
        CHECK(basis->reds.size() == 1);
        CHECK(basis->trans[0][0] == 0);
        CHECK(basis->trans[0][1] == 0);
    }
    SECTION("a red with an undefined transition is incomplete") {
        IdealizedFixture fx(oracles::fig1(), 1);
        Minimizer m(fx.tree, 1e-4);
        m.turn_red(walk(fx.tree, {0}));
        m.turn_red(walk(fx.tree, {1}));
        CHECK_FALSE(m.complete_basis());  // leaves have no outgoing transitions
    }
    SECTION("the learned three-state basis has three states and six transitions") {
        IdealizedFixture fx(oracles::fig1(), 3);
        Minimizer m(fx.tree, 1e-4);
        auto basis = m.run();
        REQUIRE(basis);
        CHECK(basis->reds.size() == 3);
        std::size_t edges = 0;
        for (const auto& row : basis->trans) edges += row.size();
        CHECK(edges == 6);
    }
}

TEST_CASE("hypothesis extraction") {
    SECTION("converged estimates reproduce the generating automaton") {
        IdealizedFixture fx(oracles::fig1(), 4);
        Minimizer m(fx.tree, 1e-4);
        auto basis = m.run();
        REQUIRE(basis);
        Automaton h = m.extract_hypothesis(*basis);
        REQUIRE(h.num_states() == 3);
        Automaton truth = oracles::fig1();
        // reds are created in access order: root, "b", "bb"
        for (std::size_t q = 0; q < 3; ++q) {
            CHECK_THAT(h.states[q].stop, WithinAbs(truth.states[q].stop, 1e-3));
            for (Token t = 0; t < 2; ++t)
                CHECK_THAT(h.states[q].prob[t], WithinAbs(truth.states[q].prob[t], 1e-3));
        }
    }
    SECTION("every extracted hypothesis satisfies the normalization invariant") {
        for (std::uint64_t seed : {3, 4}) {
            Automaton sul = random_pdfa(4, 2, seed);
            IdealizedFixture fx(sul, 4);
            Minimizer m(fx.tree, 0.02);
            auto basis = m.run();
            if (!basis) continue;
            Automaton h = m.extract_hypothesis(*basis);
            for (const auto& s : h.states) {
                double sum = s.stop;
                for (double p : s.prob) sum += p;
                CHECK_THAT(sum, WithinAbs(1.0, 1e-9));
            }
        }
    }
}

TEST_CASE("minimization determinism and replay") {
    ExactTeacher teacher(oracles::fig1());
    ObservationTree tree(teacher, /*exclude_final_edge=*/true);
    for (int i = 0; i < 4; ++i) tree.extend_fringe();
    tree.dfs_update();
    Snapshot snap = tree.snapshot();
    const double mu = 0.02;

    Minimizer first(tree, mu);
    auto basis1 = first.run();
    std::string log1 = first.format_log();
    std::vector<MergeOp> ops = first.log();
    std::optional<Automaton> hyp1;
    if (basis1) hyp1 = first.extract_hypothesis(*basis1);
    tree.restore(snap);

    SECTION("identical tree and mu give an identical operation log") {
        Minimizer second(tree, mu);
        second.run();
        CHECK(second.format_log() == log1);
    }
    SECTION("replaying the recorded log reproduces the hypothesis") {
        Minimizer replay(tree, mu);
        for (const MergeOp& op : ops) {
            if (op.kind == MergeOp::Kind::kTurnRed) {
                replay.turn_red(op.blue);
            } else {
                MergeCandidate cand{op.red, op.blue, op.score, op.pair_count};
                replay.apply_merge(cand);
            }
        }
        auto basis2 = replay.complete_basis();
        REQUIRE(basis2.has_value() == basis1.has_value());
        if (basis2) {
            REQUIRE(hyp1);
            CHECK(replay.extract_hypothesis(*basis2) == *hyp1);
        }
    }
    SECTION("undoing every operation restores the tree hash") {
        std::uint64_t before = tree.structural_hash();
        Minimizer m(tree, mu);
        m.run();
        m.undo_all();
        CHECK(tree.structural_hash() == before);
        CHECK(m.reds().size() == 1);
    }
}

TEST_CASE("every recorded merge stayed within the tolerance") {
    for (std::uint64_t seed : {1, 2}) {
        Automaton sul = random_pdfa(5, 3, seed);
        ExactTeacher teacher(sul);
        ObservationTree tree(teacher, /*exclude_final_edge=*/true);
        for (int i = 0; i < 4; ++i) tree.extend_fringe();
        tree.dfs_update();
        const double mu = 0.005;
        Minimizer m(tree, mu);
        m.run();
        for (const MergeOp& op : m.log())
            if (op.kind == MergeOp::Kind::kMerge) CHECK(op.score <= mu);
    }
}
