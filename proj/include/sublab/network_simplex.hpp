#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sublab/common.hpp"

namespace sublab::detail {

// Primal network simplex for uncapacitated min-cost flow with supplies
// b (Σb = 0). Arcs come from `Arcs`, which provides
//   std::size_t size() const; int source(std::size_t) const;
//   int target(std::size_t) const; double cost(std::size_t) const;
// Only tree arcs carry flow, so flows are stored per tree node.
// The initial basis hangs every node from an artificial root with big-M
// arcs; the leaving rule keeps the tree strongly feasible.
template <class Arcs>
class NetworkSimplex {
 public:
  NetworkSimplex(const Arcs& arcs, std::span<const double> supply) : arcs_(arcs), n_(static_cast<int>(supply.size())) {
    const int total = n_ + 1;
    root_ = n_;
    parent_.assign(total, -1);
    pred_.assign(total, kNone);
    dir_.assign(total, 0);
    depth_.assign(total, 0);
    flow_.assign(total, 0.0);
    pi_.assign(total, 0.0);
    first_child_.assign(total, -1);
    next_.assign(total, -1);
    prev_.assign(total, -1);
    art_up_.assign(n_, 1);

    double max_cost = 0.0;
    for (std::size_t a = 0; a < arcs_.size(); ++a) max_cost = std::max(max_cost, std::abs(arcs_.cost(a)));
    max_cost_ = max_cost;
    big_m_ = (max_cost + 1.0) * static_cast<double>(total);

    for (int v = 0; v < n_; ++v) {
      parent_[v] = root_;
      pred_[v] = arcs_.size() + static_cast<std::size_t>(v);
      depth_[v] = 1;
      if (supply[v] >= 0.0) {
        art_up_[v] = 1;  // v → root
        dir_[v] = 1;
        flow_[v] = supply[v];
        pi_[v] = -big_m_;
      } else {
        art_up_[v] = 0;  // root → v
        dir_[v] = -1;
        flow_[v] = -supply[v];
        pi_[v] = big_m_;
      }
      link(v, root_);
    }
  }

  // Runs to optimality and returns Σ cost · flow over original arcs.
  double solve() {
    const std::size_t m = arcs_.size();
    if (m == 0) return check_and_cost();
    const std::size_t block = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
    std::size_t next_arc = 0;
    for (;;) {
      // Block search: scan blocks cyclically, take the most negative arc of the first block holding one.
      std::size_t best = kNone;
      double best_rc = 0.0;
      std::size_t scanned = 0, in_block = 0;
      while (scanned < m) {
        const std::size_t a = next_arc;
        next_arc = next_arc + 1 == m ? 0 : next_arc + 1;
        ++scanned;
        const int s = arcs_.source(a), t = arcs_.target(a);
        const double rc = arcs_.cost(a) + pi_[s] - pi_[t];
        const double tol = 1e-12 * (max_cost_ + std::abs(pi_[s]) + std::abs(pi_[t]));
        if (rc < -tol && rc < best_rc) {
          best_rc = rc;
          best = a;
        }
        if (++in_block == block) {
          if (best != kNone) break;
          in_block = 0;
        }
      }
      if (best == kNone) break;
      pivot(best, best_rc);
      ++pivots_;
    }
    return check_and_cost();
  }

  std::size_t pivots() const { return pivots_; }

  // Calls fn(arc, flow) for every original arc with positive flow.
  template <class Fn>
  void for_each_flow(Fn&& fn) const {
    for (int v = 0; v < n_; ++v)
      if (pred_[v] < arcs_.size() && flow_[v] > 0.0) fn(pred_[v], flow_[v]);
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  int src(std::size_t a) const {
    if (a < arcs_.size()) return arcs_.source(a);
    const int v = static_cast<int>(a - arcs_.size());
    return art_up_[v] ? v : root_;
  }
  int tgt(std::size_t a) const {
    if (a < arcs_.size()) return arcs_.target(a);
    const int v = static_cast<int>(a - arcs_.size());
    return art_up_[v] ? root_ : v;
  }

  void link(int v, int p) {
    prev_[v] = -1;
    next_[v] = first_child_[p];
    if (first_child_[p] >= 0) prev_[first_child_[p]] = v;
    first_child_[p] = v;
  }

  void unlink(int v) {
    const int p = parent_[v];
    if (prev_[v] >= 0) next_[prev_[v]] = next_[v];
    else first_child_[p] = next_[v];
    if (next_[v] >= 0) prev_[next_[v]] = prev_[v];
    prev_[v] = next_[v] = -1;
  }

  void pivot(std::size_t in_arc, double rc) {
    const int first = arcs_.source(in_arc), second = arcs_.target(in_arc);
    // Join node of the cycle closed by the entering arc.
    int a = first, b = second;
    while (a != b) {
      if (depth_[a] >= depth_[b]) a = parent_[a];
      else b = parent_[b];
    }
    const int join = a;

    // Leaving arc: the last blocking arc met when traversing the cycle in
    // the direction of flow, starting at the join node.
    double delta = std::numeric_limits<double>::infinity();
    int u_out = -1, side = 0;
    for (int u = first; u != join; u = parent_[u])
      if (dir_[u] == 1 && flow_[u] < delta) {
        delta = flow_[u];
        u_out = u;
        side = 1;
      }
    for (int u = second; u != join; u = parent_[u])
      if (dir_[u] == -1 && flow_[u] <= delta) {
        delta = flow_[u];
        u_out = u;
        side = 2;
      }
    if (u_out < 0) throw Error("network simplex: unbounded cycle (negative-cost cycle of infinite capacity)");

    if (delta > 0.0) {
      for (int u = first; u != join; u = parent_[u]) flow_[u] -= dir_[u] * delta;
      for (int u = second; u != join; u = parent_[u]) flow_[u] += dir_[u] * delta;
      if (flow_[u_out] < 0.0) flow_[u_out] = 0.0;
    }

    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;

    // Reverse the stem u_in → … → u_out and hang it from v_in.
    stem_.clear();
    for (int u = u_in;; u = parent_[u]) {
      stem_.push_back(u);
      if (u == u_out) break;
    }
    const std::size_t k = stem_.size();
    saved_pred_.resize(k);
    saved_dir_.resize(k);
    saved_flow_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      saved_pred_[i] = pred_[stem_[i]];
      saved_dir_[i] = dir_[stem_[i]];
      saved_flow_[i] = flow_[stem_[i]];
      unlink(stem_[i]);
    }
    parent_[u_in] = v_in;
    pred_[u_in] = in_arc;
    dir_[u_in] = static_cast<std::int8_t>(u_in == first ? 1 : -1);
    flow_[u_in] = delta;
    link(u_in, v_in);
    for (std::size_t i = 1; i < k; ++i) {
      const int u = stem_[i];
      parent_[u] = stem_[i - 1];
      pred_[u] = saved_pred_[i - 1];
      dir_[u] = static_cast<std::int8_t>(-saved_dir_[i - 1]);
      flow_[u] = saved_flow_[i - 1];
      link(u, stem_[i - 1]);
    }

    // Potentials and depths of the moved subtree.
    const double shift = u_in == first ? -rc : rc;
    stack_.clear();
    stack_.push_back(u_in);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      pi_[u] += shift;
      depth_[u] = depth_[parent_[u]] + 1;
      for (int c = first_child_[u]; c >= 0; c = next_[c]) stack_.push_back(c);
    }
  }

  double check_and_cost() const {
    double cost = 0.0, artificial = 0.0, scale = 0.0;
    for (int v = 0; v < n_; ++v) {
      scale += flow_[v];
      if (pred_[v] >= arcs_.size()) artificial += flow_[v];
      else cost += arcs_.cost(pred_[v]) * flow_[v];
    }
    if (artificial > 1e-9 * std::max(1.0, scale)) throw Error("network simplex: infeasible supplies");
    return cost;
  }

  const Arcs& arcs_;
  int n_;
  int root_;
  double max_cost_ = 0.0;
  double big_m_ = 0.0;
  std::size_t pivots_ = 0;
  std::vector<int> parent_;
  std::vector<std::size_t> pred_;
  std::vector<std::int8_t> dir_;
  std::vector<int> depth_;
  std::vector<double> flow_;
  std::vector<double> pi_;
  std::vector<int> first_child_, next_, prev_;
  std::vector<std::uint8_t> art_up_;
  std::vector<int> stem_, stack_;
  std::vector<std::size_t> saved_pred_;
  std::vector<std::int8_t> saved_dir_;
  std::vector<double> saved_flow_;
};

// Complete bipartite arcs i → n1 + j with a row-major cost matrix.
struct DenseBipartiteArcs {
  std::size_t n1 = 0, n2 = 0;
  const double* cost_matrix = nullptr;
  std::size_t size() const { return n1 * n2; }
  int source(std::size_t a) const { return static_cast<int>(a / n2); }
  int target(std::size_t a) const { return static_cast<int>(n1 + a % n2); }
  double cost(std::size_t a) const { return cost_matrix[a]; }
};

struct SparseArcs {
  std::vector<int> from, to;
  std::vector<double> c;
  void add(int u, int v, double w) {
    from.push_back(u);
    to.push_back(v);
    c.push_back(w);
  }
  std::size_t size() const { return c.size(); }
  int source(std::size_t a) const { return from[a]; }
  int target(std::size_t a) const { return to[a]; }
  double cost(std::size_t a) const { return c[a]; }
};

}  // namespace sublab::detail
