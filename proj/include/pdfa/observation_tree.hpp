#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pdfa/automaton.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/log.hpp"
#include "pdfa/teacher.hpp"

namespace pdfa {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class Color : std::uint8_t { kWhite = 0, kBlue = 1, kRed = 2 };

/// One node of the observation tree. `parent`/`ptok` encode the (immutable)
/// tree shape used for access sequences; `children` is the machine view that
/// minimization rewires and restore puts back.
struct ObsNode {
    NodeId parent = kNoNode;
    Token ptok = 0;
    std::uint32_t depth = 0;
    std::vector<NodeId> children;   // size sigma, kNoNode = undefined
    double stop_est = 0.0;          // pi(q) estimate (may transiently exceed 1)
    double access_prob = 0.0;       // P_A(q) = P(x_q^A), fixed after initialization
    std::vector<double> trans_est;  // pi(q,a) estimates
    std::vector<double> weight;     // m(q,a) accumulated mass, nondecreasing
    Color color = Color::kWhite;

    bool operator==(const ObsNode& o) const {
        return parent == o.parent && ptok == o.ptok && depth == o.depth && children == o.children &&
               stop_est == o.stop_est && access_prob == o.access_prob && trans_est == o.trans_est &&
               weight == o.weight && color == o.color;
    }
};

struct Snapshot {
    std::vector<ObsNode> nodes;
    std::vector<NodeId> fringe;
    std::uint32_t extend_count = 0;

    bool operator==(const Snapshot& o) const {
        return nodes == o.nodes && fringe == o.fringe && extend_count == o.extend_count;
    }
};

/// Prefix tree of queried strings. Grows by whole fringe layers; every node
/// carries the four estimate attributes and is initialized with |Sigma|+1
/// teacher queries (cache absorbs repeats).
class ObservationTree {
public:
    ObservationTree(Teacher& teacher, bool exclude_final_edge = false)
        : teacher_(&teacher), sigma_(teacher.alphabet_size()), exclude_final_edge_(exclude_final_edge) {
        nodes_.emplace_back();
        nodes_[0].children.assign(sigma_, kNoNode);
        nodes_[0].trans_est.assign(sigma_, 0.0);
        nodes_[0].weight.assign(sigma_, 0.0);
        fringe_.push_back(0);
        initialize_node(0);
        reset_colors();
    }

    std::uint32_t sigma() const { return sigma_; }
    NodeId root() const { return 0; }
    std::size_t size() const { return nodes_.size(); }
    ObsNode& node(NodeId q) { return nodes_[q]; }
    const ObsNode& node(NodeId q) const { return nodes_[q]; }
    const std::vector<NodeId>& fringe() const { return fringe_; }
    std::uint32_t extend_count() const { return extend_count_; }
    bool exclude_final_edge() const { return exclude_final_edge_; }
    std::uint32_t last_dfs_skipped() const { return last_dfs_skipped_; }

    /// Root-to-q token path (the access sequence x_q^A), recomputed on demand.
    Word access_word(NodeId q) const {
        Word w;
        while (nodes_[q].parent != kNoNode) {
            w.push_back(nodes_[q].ptok);
            q = nodes_[q].parent;
        }
        std::reverse(w.begin(), w.end());
        return w;
    }

    /// Product of trans_est along the access path (multiplied root-first).
    double path_product(NodeId q) const {
        Word w = access_word(q);
        double p = 1.0;
        NodeId cur = 0;
        for (Token t : w) {
            p *= nodes_[cur].trans_est[t];
            cur = nodes_[cur].children[t];
        }
        return p;
    }

    NodeId create_child(NodeId parent, Token t) {
        if (nodes_[parent].children[t] != kNoNode)
            throw InternalError("create_child: transition already defined");
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
        ObsNode& n = nodes_.back();
        n.parent = parent;
        n.ptok = t;
        n.depth = nodes_[parent].depth + 1;
        n.children.assign(sigma_, kNoNode);
        n.trans_est.assign(sigma_, 0.0);
        n.weight.assign(sigma_, 0.0);
        nodes_[parent].children[t] = id;
        return id;
    }

    /// Alg. "initialize node": seeds stop/access/weight/trans from teacher
    /// answers, then propagates the access probability up the path.
    void initialize_node(NodeId q) {
        ObsNode& n = nodes_[q];
        Word x = access_word(q);
        double p = teacher_->string_prob(x);
        n.stop_est = p;
        n.access_prob = p;
        x.push_back(0);
        for (Token t = 0; t < sigma_; ++t) {
            x.back() = t;
            double pa = teacher_->string_prob(x);
            n.weight[t] = pa;
            n.trans_est[t] = pa;
        }
        x.pop_back();
        if (exclude_final_edge_) {
            if (n.parent != kNoNode) {
                x.pop_back();
                update_path(n.parent, x, p);
            }
        } else {
            update_path(q, x, p);
        }
    }

    /// Alg. "update path": add p to the weight of every edge on root..q.
    void update_path(NodeId q, const Word& x, double p) {
        NodeId cur = 0;
        for (Token t : x) {
            nodes_[cur].weight[t] += p;
            cur = nodes_[cur].children[t];
            if (cur == kNoNode) throw InternalError("update_path: undefined prefix node");
        }
        if (cur != q) throw InternalError("update_path: path does not reach the node");
    }

    /// Alg. "extend fringe": one child per (fringe node, token); the new layer
    /// replaces the fringe. Children already materialized by counterexample
    /// processing are adopted as-is (they were initialized on creation).
    std::vector<NodeId> extend_fringe() {
        std::vector<NodeId> next;
        for (NodeId q : fringe_)
            for (Token t = 0; t < sigma_; ++t) {
                NodeId c = nodes_[q].children[t];
                if (c == kNoNode) {
                    c = create_child(q, t);
                    initialize_node(c);
                }
                next.push_back(c);
            }
        fringe_ = next;
        ++extend_count_;
        return next;
    }

    /// Alg. "normalize node": rescale weights to the mass left by stop_est.
    /// With zero observed mass the remainder is spread uniformly.
    void normalize_node(NodeId q) {
        ObsNode& n = nodes_[q];
        double s = 0.0;
        for (Token t = 0; t < sigma_; ++t) s += n.weight[t];
        if (s == 0.0) {
            if (sigma_ > 0) {
                double u = (1.0 - n.stop_est) / sigma_;
                for (Token t = 0; t < sigma_; ++t) n.trans_est[t] = u;
            }
            return;
        }
        double f = (1.0 - n.stop_est) / s;
        for (Token t = 0; t < sigma_; ++t) n.trans_est[t] = f * n.weight[t];
    }

    /// Alg. "DFS update": top-down pass setting stop_est = P_A / path product,
    /// which pins the tree-evaluated pi(x_q^A) to P_A(q) on every visited
    /// node. A zero product has no finite renormalization; that subtree is
    /// skipped with its estimates frozen.
    void dfs_update() {
        last_dfs_skipped_ = 0;
        std::vector<std::pair<NodeId, double>> stack{{0, 1.0}};
        while (!stack.empty()) {
            auto [q, p] = stack.back();
            stack.pop_back();
            ObsNode& n = nodes_[q];
            if (p == 0.0) {
                ++last_dfs_skipped_;
                continue;
            }
            n.stop_est = n.access_prob / p;
            normalize_node(q);
            for (Token t = 0; t < sigma_; ++t) {
                NodeId c = n.children[t];
                if (c != kNoNode) stack.emplace_back(c, p * n.trans_est[t]);
            }
        }
        if (last_dfs_skipped_ > 0)
            log_debug("dfs_update skipped " + std::to_string(last_dfs_skipped_) +
                      " zero-probability subtrees");
    }

    /// Caps stop estimates at 1 - eps and re-normalizes affected nodes;
    /// returns how many were clipped.
    std::size_t clip_stop_estimates(double eps) {
        std::size_t clipped = 0;
        for (NodeId q = 0; q < nodes_.size(); ++q) {
            if (nodes_[q].stop_est > 1.0 - eps) {
                nodes_[q].stop_est = 1.0 - eps;
                normalize_node(q);
                ++clipped;
            }
        }
        return clipped;
    }

    void reset_colors() {
        for (auto& n : nodes_) n.color = Color::kWhite;
        nodes_[0].color = Color::kRed;
        for (Token t = 0; t < sigma_; ++t) {
            NodeId c = nodes_[0].children[t];
            if (c != kNoNode) nodes_[c].color = Color::kBlue;
        }
    }

    Snapshot snapshot() const { return Snapshot{nodes_, fringe_, extend_count_}; }

    /// Puts every node field back bit-for-bit, then recomputes colors to the
    /// minimization starting condition (root red, its children blue).
    void restore(const Snapshot& s) {
        nodes_ = s.nodes;
        fringe_ = s.fringe;
        extend_count_ = s.extend_count;
        reset_colors();
    }

    /// Hash of the tree shape and all numeric fields. Colors are excluded:
    /// they are minimization bookkeeping that restore() recomputes.
    std::uint64_t structural_hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        auto mixd = [&](double d) {
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof d);
            std::memcpy(&bits, &d, sizeof bits);
            mix(bits);
        };
        mix(extend_count_);
        for (NodeId q : fringe_) mix(q);
        for (const ObsNode& n : nodes_) {
            mix(n.parent);
            mix(n.ptok);
            for (NodeId c : n.children) mix(c);
            mixd(n.stop_est);
            mixd(n.access_prob);
            for (double v : n.trans_est) mixd(v);
            for (double v : n.weight) mixd(v);
        }
        return h;
    }

    /// Debug DOT export: access sequence and access probability per node.
    std::string to_dot(const std::vector<std::string>* names = nullptr) const {
        std::string out = "digraph observation_tree {\n  rankdir=LR;\n";
        for (NodeId q = 0; q < nodes_.size(); ++q) {
            Word w = access_word(q);
            std::string label;
            for (Token t : w) {
                if (!label.empty()) label += ' ';
                label += names != nullptr && t < names->size() ? (*names)[t] : "t" + std::to_string(t);
            }
            if (label.empty()) label = "<empty>";
            const char* fill = nodes_[q].color == Color::kRed    ? "salmon"
                               : nodes_[q].color == Color::kBlue ? "lightblue"
                                                                 : "white";
            out += "  n" + std::to_string(q) + " [label=\"" + label + "\\nP=" +
                   detail::fmt_short(nodes_[q].access_prob) + "\", style=filled, fillcolor=" + fill +
                   "];\n";
        }
        for (NodeId q = 0; q < nodes_.size(); ++q)
            for (Token t = 0; t < sigma_; ++t)
                if (nodes_[q].children[t] != kNoNode)
                    out += "  n" + std::to_string(q) + " -> n" + std::to_string(nodes_[q].children[t]) +
                           " [label=\"" + (names != nullptr && t < names->size() ? (*names)[t] : "t" + std::to_string(t)) +
                           "\"];\n";
        out += "}\n";
        return out;
    }

private:
    Teacher* teacher_;
    std::uint32_t sigma_;
    bool exclude_final_edge_;
    std::vector<ObsNode> nodes_;
    std::vector<NodeId> fringe_;
    std::uint32_t extend_count_ = 0;
    std::uint32_t last_dfs_skipped_ = 0;
};

}  // namespace pdfa
