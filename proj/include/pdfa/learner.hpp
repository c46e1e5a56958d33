#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/equivalence.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/log.hpp"
#include "pdfa/merge.hpp"
#include "pdfa/observation_tree.hpp"
#include "pdfa/teacher.hpp"

namespace pdfa {

struct LearnerConfig {
    double mu = 1e-4;
    std::uint32_t max_extends = 6;
    double clip_epsilon = 1e-6;
    EquivalenceConfig equivalence;
    std::uint64_t seed = 0;
    bool exclude_final_edge = false;
    bool export_tree_dot = false;     // fill RunReport::tree_dot with the final tree
    bool export_merge_trace = false;  // fill RunReport::merge_trace with per-round operation logs

    void validate() const {
        if (!(mu >= 0.0) || !(mu < 1.0)) throw ConfigError("mu must be in [0,1)");
        if (max_extends < 1) throw ConfigError("max_extends must be >= 1");
        if (!(clip_epsilon > 0.0) || !(clip_epsilon < 1.0)) throw ConfigError("clip_epsilon must be in (0,1)");
        equivalence.validate();
    }
};

enum class StopReason : std::uint8_t { kEquivalent, kEarlyStop, kTeacherFailure };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::kEquivalent: return "equivalent";
        case StopReason::kEarlyStop: return "early_stop";
        default: return "teacher_failure";
    }
}

struct RoundLog {
    std::uint32_t round = 0;
    std::size_t tree_nodes = 0;
    std::size_t reds = 0;
    bool basis_complete = false;
    std::optional<Word> counterexample;
    std::size_t clipped = 0;
    std::uint64_t distinct_queries = 0;
};

struct RunReport {
    Automaton hypothesis;  // best found; single-state root machine if none completed
    std::uint32_t rounds = 0;
    std::uint64_t queries = 0;  // distinct strings sent to the teacher
    std::vector<Word> counterexamples;
    StopReason stop_reason = StopReason::kEarlyStop;
    double wall_seconds = 0.0;
    std::vector<RoundLog> round_logs;
    std::string error;     // set for teacher_failure
    std::string tree_dot;  // final observation tree, when requested
};

enum class CexOutcome : std::uint8_t { kExtended, kStale };

/// Walks the counterexample from the root and materializes the missing tail,
/// one initialized node per token. A counterexample that already parses in
/// the tree is stale and leaves it unchanged.
inline CexOutcome process_counterexample(ObservationTree& tree, const Word& cex) {
    NodeId cur = tree.root();
    std::size_t i = 0;
    while (i < cex.size() && tree.node(cur).children[cex[i]] != kNoNode) {
        cur = tree.node(cur).children[cex[i]];
        ++i;
    }
    if (i == cex.size()) {
        log_info("stale counterexample: string already parses in the observation tree");
        return CexOutcome::kStale;
    }
    while (i < cex.size()) {
        NodeId c = tree.create_child(cur, cex[i]);
        tree.initialize_node(c);
        cur = c;
        ++i;
    }
    return CexOutcome::kExtended;
}

namespace detail {
/// Fallback hypothesis when no complete basis was found: the root's clipped,
/// normalized distribution as a single all-self-loop state.
inline Automaton root_machine(const ObservationTree& tree) {
    const ObsNode& root = tree.node(tree.root());
    Automaton h;
    h.alphabet = tree.sigma();
    h.initial = 0;
    for (Token t = 0; t < tree.sigma(); ++t) h.token_names.push_back("t" + std::to_string(t));
    h.states.resize(1);
    double total = root.stop_est;
    for (Token t = 0; t < tree.sigma(); ++t) total += root.trans_est[t];
    if (!(total > 0.0)) total = 1.0;
    h.states[0].stop = root.stop_est / total;
    h.states[0].next.assign(tree.sigma(), 0);
    h.states[0].prob.assign(tree.sigma(), 0.0);
    for (Token t = 0; t < tree.sigma(); ++t) h.states[0].prob[t] = root.trans_est[t] / total;
    return h;
}
}  // namespace detail

/// The main extend / estimate / minimize / test loop.
inline RunReport run_learner(Teacher& raw_teacher, const LearnerConfig& cfg) {
    cfg.validate();
    auto started = std::chrono::steady_clock::now();
    CachingTeacher teacher(raw_teacher);
    RunReport report;
    auto finalize = [&](StopReason reason, std::optional<Automaton> hyp, const ObservationTree* tree) {
        report.stop_reason = reason;
        report.queries = teacher.distinct_queries();
        if (hyp)
            report.hypothesis = std::move(*hyp);
        else if (tree != nullptr)
            report.hypothesis = detail::root_machine(*tree);
        if (cfg.export_tree_dot && tree != nullptr) report.tree_dot = tree->to_dot();
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return report;
    };

    try {
        ObservationTree tree(teacher, cfg.exclude_final_edge);
        tree.dfs_update();
        tree.clip_stop_estimates(cfg.clip_epsilon);
        Snapshot snap = tree.snapshot();
        std::optional<Automaton> best;
        std::uint64_t eq_calls = 0;

        while (true) {
            if (report.rounds >= cfg.max_extends)
                return finalize(StopReason::kEarlyStop, std::move(best), &tree);
            tree.extend_fringe();
            ++report.rounds;
            tree.dfs_update();
            std::size_t clipped = tree.clip_stop_estimates(cfg.clip_epsilon);
            snap = tree.snapshot();

            RoundLog rl;
            rl.round = report.rounds;
            rl.tree_nodes = tree.size();
            rl.clipped = clipped;

            Minimizer minimizer(tree, cfg.mu);
            auto basis = minimizer.run();
            rl.reds = minimizer.reds().size();
            rl.basis_complete = basis.has_value();

            if (basis) {
                Automaton hyp = minimizer.extract_hypothesis(*basis);
                best = hyp;
                EquivalenceConfig eq = cfg.equivalence;
                eq.mu = cfg.mu;
                eq.seed = splitmix64(cfg.equivalence.seed ^ splitmix64(++eq_calls));
                auto cex = equivalence_query(hyp, teacher, eq);
                tree.restore(snap);
                if (!cex) {
                    rl.distinct_queries = teacher.distinct_queries();
                    report.round_logs.push_back(std::move(rl));
                    return finalize(StopReason::kEquivalent, std::move(hyp), &tree);
                }
                report.counterexamples.push_back(*cex);
                rl.counterexample = *cex;
                if (process_counterexample(tree, *cex) == CexOutcome::kExtended) {
                    tree.dfs_update();
                    tree.clip_stop_estimates(cfg.clip_epsilon);
                    snap = tree.snapshot();
                }
            } else {
                tree.restore(snap);
            }
            rl.distinct_queries = teacher.distinct_queries();
            log_info("round " + std::to_string(rl.round) + ": nodes=" + std::to_string(rl.tree_nodes) +
                     " reds=" + std::to_string(rl.reds) + (rl.basis_complete ? " basis" : " no-basis"));
            report.round_logs.push_back(std::move(rl));
        }
    } catch (const TeacherError& e) {
        report.error = e.what();
        log_error(std::string("teacher failure: ") + e.what());
        return finalize(StopReason::kTeacherFailure, std::nullopt, nullptr);
    }
}

}  // namespace pdfa
