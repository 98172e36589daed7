#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "krlab/measure.hpp"

namespace krlab {

/// Exact solver for the dense transportation problem
///     min sum_ij c_ij x_ij,  sum_j x_ij = a_i,  sum_i x_ij = b_j,  x >= 0
/// as a primal network simplex on the bipartite spanning-tree basis
/// (northwest-corner start, block pricing, Bland fallback against cycling).
/// Returns the optimal plan together with dual potentials certifying it.
class TransportationSimplex {
public:
    struct Solution {
        TransportPlan plan;
        double cost = 0.0;
        std::vector<double> dual_source;  // u_i
        std::vector<double> dual_sink;    // v_j
        double dual_value = 0.0;
        double dual_violation = 0.0;  // max (u_i + v_j - c_ij)^+ over all arcs
        long pivots = 0;
    };

    TransportationSimplex(std::vector<double> supply, std::vector<double> demand,
                          std::vector<double> cost_matrix)
        : a_(std::move(supply)), b_(std::move(demand)), c_(std::move(cost_matrix)),
          n_(static_cast<int>(a_.size())), m_(static_cast<int>(b_.size())) {
        if (c_.size() != static_cast<size_t>(n_) * m_)
            throw std::invalid_argument("TransportationSimplex: cost matrix size mismatch");
        if (n_ == 0 || m_ == 0)
            throw std::invalid_argument("TransportationSimplex: empty marginal");
        double sa = 0.0, sb = 0.0;
        for (double x : a_) sa += x;
        for (double x : b_) sb += x;
        if (std::abs(sa - sb) > 1e-9 * std::max({sa, sb, 1e-30}))
            throw unbalanced_error("TransportationSimplex: marginals are not balanced");
        if (sb > 0.0) {
            const double s = sa / sb;
            for (double& x : b_) x *= s;
        }
        cost_scale_ = 1.0;
        for (double v : c_) cost_scale_ = std::max(cost_scale_, std::abs(v));
    }

    Solution solve() {
        build_initial_basis();
        const double tol = 1e-12 * cost_scale_;
        const long max_pivots = 2000L * (n_ + m_) + 100000L;
        const long bland_after = 100L * (n_ + m_) + 20000L;
        long pivots = 0;
        size_t cursor = 0;
        const size_t total = static_cast<size_t>(n_) * m_;
        const size_t block = std::max<size_t>(64, static_cast<size_t>(std::sqrt(double(total))) * 4);

        compute_potentials();
        while (true) {
            // entering arc: most negative reduced cost in the first block
            // (scanning from a moving cursor) that contains one; after
            // bland_after pivots, strictly first-found (Bland's rule).
            const bool bland = pivots > bland_after;
            long best = -1;
            double best_r = -tol;
            size_t scanned = 0;
            while (scanned < total) {
                const size_t stop = std::min(block, total - 0 * scanned);
                for (size_t s = 0; s < stop && scanned < total; ++s, ++scanned) {
                    const size_t e = cursor;
                    cursor = (cursor + 1 == total) ? 0 : cursor + 1;
                    const int i = static_cast<int>(e / m_);
                    const int j = static_cast<int>(e % m_);
                    const double r = c_[e] - u_[i] - v_[j];
                    if (r < best_r) {
                        best_r = r;
                        best = static_cast<long>(e);
                        if (bland) break;
                    }
                }
                if (best >= 0) break;
            }
            if (best < 0) break;  // optimal
            pivot(static_cast<int>(best / m_), static_cast<int>(best % m_));
            compute_potentials();
            if (++pivots > max_pivots)
                throw std::runtime_error("TransportationSimplex: pivot limit exceeded");
        }
        return extract_solution(pivots);
    }

private:
    struct Edge {
        int i, j;       // source, sink
        double flow;
        bool in_tree;
    };

    void build_initial_basis() {
        edges_.clear();
        edges_.reserve(n_ + m_ - 1);
        int i = 0, j = 0;
        double ra = a_[0], rb = b_[0];
        while (true) {
            const double x = std::max(0.0, std::min(ra, rb));
            edges_.push_back({i, j, x, true});
            ra -= x;
            rb -= x;
            if (i == n_ - 1 && j == m_ - 1) break;
            if ((ra <= rb && i < n_ - 1) || j == m_ - 1) {
                ++i;
                ra = a_[i];
            } else {
                ++j;
                rb = b_[j];
            }
        }
        rebuild_adjacency();
    }

    void rebuild_adjacency() {
        adj_.assign(n_ + m_, {});
        for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
            if (!edges_[e].in_tree) continue;
            adj_[edges_[e].i].push_back(e);
            adj_[n_ + edges_[e].j].push_back(e);
        }
    }

    // u_i + v_j = c_ij on tree edges, anchored at u_0 = 0.
    void compute_potentials() {
        u_.assign(n_, 0.0);
        v_.assign(m_, 0.0);
        std::vector<char> seen(n_ + m_, 0);
        stack_.clear();
        stack_.push_back(0);
        seen[0] = 1;
        while (!stack_.empty()) {
            const int node = stack_.back();
            stack_.pop_back();
            for (int e : adj_[node]) {
                const Edge& ed = edges_[e];
                const int other = (node < n_) ? n_ + ed.j : ed.i;
                if (seen[other]) continue;
                seen[other] = 1;
                const size_t idx = static_cast<size_t>(ed.i) * m_ + ed.j;
                if (other >= n_)
                    v_[ed.j] = c_[idx] - u_[ed.i];
                else
                    u_[ed.i] = c_[idx] - v_[ed.j];
                stack_.push_back(other);
            }
        }
    }

    // Path between source i and sink n_+j in the tree, as a list of edge ids.
    bool tree_path(int from, int to, std::vector<int>& out_edges) {
        parent_edge_.assign(n_ + m_, -1);
        parent_node_.assign(n_ + m_, -1);
        stack_.clear();
        stack_.push_back(from);
        parent_node_[from] = from;
        while (!stack_.empty()) {
            const int node = stack_.back();
            stack_.pop_back();
            if (node == to) break;
            for (int e : adj_[node]) {
                const Edge& ed = edges_[e];
                const int other = (node < n_) ? n_ + ed.j : ed.i;
                if (parent_node_[other] >= 0) continue;
                parent_node_[other] = node;
                parent_edge_[other] = e;
                stack_.push_back(other);
            }
        }
        if (parent_node_[to] < 0) return false;
        out_edges.clear();
        for (int node = to; node != from; node = parent_node_[node])
            out_edges.push_back(parent_edge_[node]);
        return true;
    }

    void pivot(int i, int j) {
        // Cycle: entering arc i -> j (+theta), then tree path j ~> i with
        // alternating signs. An edge on the path whose source endpoint is
        // entered from the sink side carries -theta.
        if (!tree_path(i, n_ + j, path_))
            throw std::runtime_error("TransportationSimplex: disconnected basis tree");
        // Walk from sink j back towards i assigning signs: edges at odd
        // positions from the entering arc decrease.
        signs_.assign(path_.size(), 0);
        {
            int node = n_ + j;
            for (size_t s = 0; s < path_.size(); ++s) {
                // Moving from `node` to its parent; edge decreases when it is
                // traversed from its sink endpoint to its source endpoint,
                // i.e. when node is on the sink side... direction alternates,
                // determined by parity of the bipartite walk:
                signs_[s] = (node >= n_) ? -1 : +1;
                node = parent_node_[node];
            }
        }
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (size_t s = 0; s < path_.size(); ++s) {
            if (signs_[s] != -1) continue;
            const Edge& ed = edges_[path_[s]];
            if (ed.flow < theta || (ed.flow == theta && (leaving < 0 || path_[s] < leaving))) {
                theta = ed.flow;
                leaving = path_[s];
            }
        }
        if (leaving < 0)
            throw std::runtime_error("TransportationSimplex: unbounded pivot cycle");
        for (size_t s = 0; s < path_.size(); ++s)
            edges_[path_[s]].flow += signs_[s] * theta;
        edges_[leaving].in_tree = false;
        edges_[leaving].flow = 0.0;
        edges_.push_back({i, j, theta, true});
        compact_edges();
        rebuild_adjacency();
    }

    void compact_edges() {
        size_t w = 0;
        for (size_t r = 0; r < edges_.size(); ++r)
            if (edges_[r].in_tree) edges_[w++] = edges_[r];
        edges_.resize(w);
    }

    Solution extract_solution(long pivots) {
        Solution sol;
        sol.pivots = pivots;
        sol.dual_source = u_;
        sol.dual_sink = v_;
        sol.plan.n_sources = n_;
        sol.plan.n_targets = m_;
        for (const Edge& e : edges_) {
            if (e.flow <= 0.0) continue;
            sol.plan.entries.push_back({e.i, e.j, e.flow});
            sol.cost += e.flow * c_[static_cast<size_t>(e.i) * m_ + e.j];
        }
        for (int i = 0; i < n_; ++i) sol.dual_value += u_[i] * a_[i];
        for (int j = 0; j < m_; ++j) sol.dual_value += v_[j] * b_[j];
        double viol = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < m_; ++j)
                viol = std::max(viol, u_[i] + v_[j] - c_[static_cast<size_t>(i) * m_ + j]);
        sol.dual_violation = std::max(0.0, viol);
        return sol;
    }

    std::vector<double> a_, b_, c_;
    int n_, m_;
    double cost_scale_ = 1.0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
    std::vector<double> u_, v_;
    std::vector<int> stack_, path_, parent_edge_, parent_node_;
    std::vector<int> signs_;
};

}  // namespace krlab
