#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/observation_tree.hpp"

namespace pdfa {

/// A screened red/blue merge: score is the maximum pairwise distance over all
/// compared (red', blue') pairs, pair_count how many were checked.
struct MergeCandidate {
    NodeId red = kNoNode;
    NodeId blue = kNoNode;
    double score = 0.0;
    std::uint32_t pair_count = 0;
};

/// Reversible record of one minimization operation.
struct MergeOp {
    enum class Kind : std::uint8_t { kMerge, kTurnRed };
    struct EdgeChange {
        NodeId node;
        Token token;
        NodeId old_child;
    };
    Kind kind;
    NodeId red = kNoNode;  // target for merges
    NodeId blue = kNoNode; // processed blue node
    double score = 0.0;    // screened max pairwise distance (merges only)
    std::uint32_t pair_count = 0;
    std::vector<EdgeChange> undo;  // applied edge rewires, in order
    Color old_color = Color::kBlue;
};

/// Red core closed under all token transitions; trans[i][t] indexes reds.
struct Basis {
    std::vector<NodeId> reds;
    std::vector<std::vector<std::uint32_t>> trans;
};

/// One minimization attempt over the observation tree: red-blue layering,
/// error-bounded merges with determinization, operation log with undo. The
/// caller restores the tree (snapshot or undo_all) when the attempt is over.
class Minimizer {
public:
    Minimizer(ObservationTree& tree, double mu) : tree_(&tree), mu_(mu) {
        tree.reset_colors();
        reds_.push_back(tree.root());
        // trans_est values are fixed during minimization, so access-path
        // products can be cached up front (root-first multiplication order).
        prefix_.assign(tree.size(), 0.0);
        std::vector<std::pair<NodeId, double>> stack{{tree.root(), 1.0}};
        while (!stack.empty()) {
            auto [q, p] = stack.back();
            stack.pop_back();
            prefix_[q] = p;
            const ObsNode& n = tree.node(q);
            for (Token t = 0; t < tree.sigma(); ++t)
                if (n.children[t] != kNoNode) stack.emplace_back(n.children[t], p * n.trans_est[t]);
        }
    }

    double mu() const { return mu_; }
    const std::vector<NodeId>& reds() const { return reds_; }
    const std::vector<MergeOp>& log() const { return log_; }
    double access_prefix(NodeId q) const { return prefix_[q]; }

    /// d(red, blue) = |prefix(blue) * stop_est(red) - P_A(blue)|, with the
    /// prefix taken as the trans_est product along blue's access path.
    double consistency_distance(NodeId red, NodeId blue) const {
        return std::fabs(prefix_[blue] * tree_->node(red).stop_est - tree_->node(blue).access_prob);
    }

    /// Paired walk of blue's subtree against the current machine from red;
    /// all reachable pairs must stay within mu. Undefined red-side targets are
    /// vacuously fine (the fold would attach there).
    std::optional<MergeCandidate> mergeable(NodeId red, NodeId blue) const {
        MergeCandidate cand{red, blue, 0.0, 0};
        if (!fold_walk(red, blue, &cand, nullptr)) return std::nullopt;
        return cand;
    }

    /// Redirects blue's incoming machine edge to red and folds blue's subtree
    /// into the red-side machine (determinization). Recorded for undo.
    void apply_merge(const MergeCandidate& cand) {
        MergeOp op;
        op.kind = MergeOp::Kind::kMerge;
        op.red = cand.red;
        op.blue = cand.blue;
        op.score = cand.score;
        op.pair_count = cand.pair_count;
        MergeCandidate realized{cand.red, cand.blue, 0.0, 0};
        if (!fold_walk(cand.red, cand.blue, &realized, &op))
            throw InternalError("apply_merge: fold pair violates mu that mergeable did not screen");
        log_.push_back(std::move(op));
    }

    void turn_red(NodeId blue) {
        MergeOp op;
        op.kind = MergeOp::Kind::kTurnRed;
        op.blue = blue;
        op.old_color = tree_->node(blue).color;
        tree_->node(blue).color = Color::kRed;
        reds_.push_back(blue);
        log_.push_back(std::move(op));
    }

    /// Blue frontier: machine children of reds that are not red themselves,
    /// in lexicographic access-sequence order.
    std::vector<NodeId> current_blues() const {
        std::vector<NodeId> blues;
        for (NodeId r : reds_) {
            const ObsNode& n = tree_->node(r);
            for (Token t = 0; t < tree_->sigma(); ++t) {
                NodeId c = n.children[t];
                if (c != kNoNode && tree_->node(c).color != Color::kRed) blues.push_back(c);
            }
        }
        std::vector<Word> words(blues.size());
        for (std::size_t i = 0; i < blues.size(); ++i) words[i] = tree_->access_word(blues[i]);
        std::vector<std::size_t> idx(blues.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return words[a] != words[b] ? words[a] < words[b] : blues[a] < blues[b];
        });
        std::vector<NodeId> out(blues.size());
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = blues[idx[i]];
        return out;
    }

    /// One layer: score every blue against every red (against the layer-start
    /// machine), keep the candidate with minimal score or a turn-red, then
    /// apply all recorded operations in order. False when no blues remain.
    bool merge_layer() {
        std::vector<NodeId> blues = current_blues();
        if (blues.empty()) return false;
        for (NodeId b : blues) tree_->node(b).color = Color::kBlue;
        std::vector<std::optional<MergeCandidate>> chosen(blues.size());
        for (std::size_t i = 0; i < blues.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (NodeId r : reds_) {
                auto cand = mergeable(r, blues[i]);
                if (cand && cand->score < best) {
                    best = cand->score;
                    chosen[i] = cand;
                }
            }
        }
        for (std::size_t i = 0; i < blues.size(); ++i) {
            if (chosen[i])
                apply_merge(*chosen[i]);
            else
                turn_red(blues[i]);
        }
        return true;
    }

    /// Complete iff every red's every token transition lands on a red.
    std::optional<Basis> complete_basis() const {
        Basis basis;
        basis.reds = reds_;
        std::unordered_map<NodeId, std::uint32_t> index;
        for (std::uint32_t i = 0; i < reds_.size(); ++i) index[reds_[i]] = i;
        basis.trans.assign(reds_.size(), std::vector<std::uint32_t>(tree_->sigma(), 0));
        for (std::uint32_t i = 0; i < reds_.size(); ++i) {
            const ObsNode& n = tree_->node(reds_[i]);
            for (Token t = 0; t < tree_->sigma(); ++t) {
                NodeId c = n.children[t];
                if (c == kNoNode) return std::nullopt;
                auto it = index.find(c);
                if (it == index.end()) return std::nullopt;
                basis.trans[i][t] = it->second;
            }
        }
        return basis;
    }

    /// Layers until a complete basis appears or the blue frontier is empty.
    std::optional<Basis> run() {
        while (true) {
            if (auto basis = complete_basis()) return basis;
            if (!merge_layer()) return std::nullopt;
        }
    }

    /// Hypothesis over the basis states: representative estimates,
    /// re-normalized per state so each distribution sums to one.
    Automaton extract_hypothesis(const Basis& basis) const {
        if (basis.reds != reds_) throw InternalError("extract_hypothesis: basis does not match red set");
        Automaton h;
        h.alphabet = tree_->sigma();
        h.initial = 0;  // the root is red first and is never merged away
        for (Token t = 0; t < tree_->sigma(); ++t) h.token_names.push_back("t" + std::to_string(t));
        h.states.resize(basis.reds.size());
        for (std::size_t i = 0; i < basis.reds.size(); ++i) {
            const ObsNode& n = tree_->node(basis.reds[i]);
            double total = n.stop_est;
            for (Token t = 0; t < tree_->sigma(); ++t) total += n.trans_est[t];
            if (!(total > 0.0)) throw InternalError("extract_hypothesis: representative has no mass");
            auto& s = h.states[i];
            s.stop = n.stop_est / total;
            s.next.assign(tree_->sigma(), kNoState);
            s.prob.assign(tree_->sigma(), 0.0);
            for (Token t = 0; t < tree_->sigma(); ++t) {
                s.next[t] = basis.trans[i][t];
                s.prob[t] = n.trans_est[t] / total;
            }
        }
        h.validate(1e-9);
        return h;
    }

    void undo_last() {
        if (log_.empty()) throw InternalError("undo_last: empty operation log");
        const MergeOp& op = log_.back();
        if (op.kind == MergeOp::Kind::kTurnRed) {
            tree_->node(op.blue).color = op.old_color;
            reds_.pop_back();
        } else {
            for (auto it = op.undo.rbegin(); it != op.undo.rend(); ++it)
                tree_->node(it->node).children[it->token] = it->old_child;
        }
        log_.pop_back();
    }

    void undo_all() {
        while (!log_.empty()) undo_last();
    }

    /// Audit trace, one line per operation: kind, red, blue, score.
    std::string format_log() const {
        std::string out;
        for (const MergeOp& op : log_) {
            if (op.kind == MergeOp::Kind::kMerge)
                out += "merge red=" + std::to_string(op.red) + " blue=" + std::to_string(op.blue) +
                       " score=" + detail::fmt17(op.score) + "\n";
            else
                out += "turn_red blue=" + std::to_string(op.blue) + "\n";
        }
        return out;
    }

private:
    // Shared fold traversal. Check mode (op == nullptr): simulate attachments
    // in a local overlay and screen every pair against mu. Apply mode: rewire
    // the machine, logging changes into op; pairs are not re-screened (two-
    // phase layer application may legitimately see a changed machine), so the
    // walk always succeeds there.
    bool fold_walk(NodeId red, NodeId blue, MergeCandidate* cand, MergeOp* op) const {
        const bool apply = op != nullptr;
        std::unordered_map<std::uint64_t, NodeId> overlay;
        auto key = [this](NodeId q, Token t) {
            return static_cast<std::uint64_t>(q) * tree_->sigma() + t;
        };
        auto look = [&](NodeId q, Token t) -> NodeId {
            if (!apply) {
                auto it = overlay.find(key(q, t));
                if (it != overlay.end()) return it->second;
            }
            return tree_->node(q).children[t];
        };
        auto set_edge = [&](NodeId q, Token t, NodeId c) {
            if (apply) {
                op->undo.push_back({q, t, tree_->node(q).children[t]});
                tree_->node(q).children[t] = c;
            } else {
                overlay[key(q, t)] = c;
            }
        };

        // the incoming edge of blue moves to red before the fold
        const ObsNode& bn = tree_->node(blue);
        NodeId machine_parent = kNoNode;
        Token machine_tok = 0;
        if (bn.parent != kNoNode && look(bn.parent, bn.ptok) == blue) {
            machine_parent = bn.parent;
            machine_tok = bn.ptok;
        } else {
            for (NodeId r : reds_) {
                for (Token t = 0; t < tree_->sigma(); ++t)
                    if (look(r, t) == blue) {
                        machine_parent = r;
                        machine_tok = t;
                        break;
                    }
                if (machine_parent != kNoNode) break;
            }
        }
        if (machine_parent == kNoNode) throw InternalError("fold_walk: blue node has no machine parent");
        set_edge(machine_parent, machine_tok, red);

        // folds over machines with loops can revisit a pair through attached
        // shortcuts; dedupe keeps the walk finite and the pair set exact
        std::unordered_set<std::uint64_t> seen;
        auto pair_key = [this](NodeId r, NodeId b) {
            return static_cast<std::uint64_t>(r) * tree_->size() + b;
        };
        std::vector<std::pair<NodeId, NodeId>> stack{{red, blue}};
        seen.insert(pair_key(red, blue));
        while (!stack.empty()) {
            auto [r, b] = stack.back();
            stack.pop_back();
            double d = consistency_distance(r, b);
            ++cand->pair_count;
            if (d > cand->score) cand->score = d;
            if (!apply && d > mu_) return false;
            for (Token t = 0; t < tree_->sigma(); ++t) {
                NodeId bc = look(b, t);
                if (bc == kNoNode) continue;
                NodeId rc = look(r, t);
                if (rc == kNoNode)
                    set_edge(r, t, bc);
                else if (seen.insert(pair_key(rc, bc)).second)
                    stack.emplace_back(rc, bc);
            }
        }
        return true;
    }

    ObservationTree* tree_;
    double mu_;
    std::vector<NodeId> reds_;
    std::vector<double> prefix_;
    std::vector<MergeOp> log_;
};

}  // namespace pdfa
