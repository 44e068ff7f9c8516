#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "exom/ctf_types.hpp"
#include "exom/scm.hpp"

namespace exom {

// Augmented graph: endogenous and exogenous variables are all nodes, with a
// directed edge from every (endogenous or exogenous) parent to its child.
// Confounding appears as an exogenous node with out-degree > 1; there are no
// bidirected edges. Node ids: 0..nV-1 endogenous, nV..nV+nU-1 exogenous.
class AugmentedGraph {
 public:
  AugmentedGraph(int endo_count, int exo_count)
      : endo_count_(endo_count),
        exo_count_(exo_count),
        parents_(static_cast<std::size_t>(endo_count + exo_count)),
        children_(static_cast<std::size_t>(endo_count + exo_count)) {}

  int endo_count() const { return endo_count_; }
  int exo_count() const { return exo_count_; }
  int node_count() const { return endo_count_ + exo_count_; }
  int exo_node(int j) const { return endo_count_ + j; }

  void add_edge(int parent, int child) {
    auto& ch = children_[static_cast<std::size_t>(parent)];
    if (std::find(ch.begin(), ch.end(), child) != ch.end()) return;
    ch.push_back(child);
    parents_[static_cast<std::size_t>(child)].push_back(parent);
  }

  void remove_edge(int parent, int child) {
    auto& ch = children_[static_cast<std::size_t>(parent)];
    ch.erase(std::remove(ch.begin(), ch.end(), child), ch.end());
    auto& pa = parents_[static_cast<std::size_t>(child)];
    pa.erase(std::remove(pa.begin(), pa.end(), parent), pa.end());
  }

  const std::vector<int>& parents(int node) const { return parents_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& children(int node) const { return children_[static_cast<std::size_t>(node)]; }

  int edge_count() const {
    int n = 0;
    for (const auto& ch : children_) n += static_cast<int>(ch.size());
    return n;
  }

  bool acyclic() const {
    std::vector<int> indegree(static_cast<std::size_t>(node_count()), 0);
    for (int v = 0; v < node_count(); ++v) {
      for (int c : children(v)) {
        (void)c;
        ++indegree[static_cast<std::size_t>(c)];
      }
    }
    std::deque<int> frontier;
    for (int v = 0; v < node_count(); ++v) {
      if (indegree[static_cast<std::size_t>(v)] == 0) frontier.push_back(v);
    }
    int seen = 0;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop_front();
      ++seen;
      for (int c : children(v)) {
        if (--indegree[static_cast<std::size_t>(c)] == 0) frontier.push_back(c);
      }
    }
    return seen == node_count();
  }

 private:
  int endo_count_;
  int exo_count_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

inline AugmentedGraph augmented_graph(const Scm& scm) {
  AugmentedGraph g(scm.endo_count(), scm.exo_count());
  for (int i = 0; i < scm.endo_count(); ++i) {
    const Mechanism& m = scm.mechanism(i);
    for (int p : m.endo_parents) g.add_edge(p, i);
    for (int u : m.exo_parents) g.add_edge(g.exo_node(u), i);
  }
  return g;
}

// How submodel mutilation treats incoming edges of intervened variables.
// AllCut removes all of them, EndoCut keeps only exogenous-parent edges,
// NoCut leaves the graph unchanged.
enum class CutStrategy { kAllCut, kNoCut, kEndoCut };

inline const char* to_string(CutStrategy s) {
  switch (s) {
    case CutStrategy::kAllCut: return "all";
    case CutStrategy::kNoCut: return "no";
    case CutStrategy::kEndoCut: return "endo";
  }
  return "?";
}

inline AugmentedGraph mutilate(const AugmentedGraph& graph, const Intervention& intervention,
                               CutStrategy strategy) {
  AugmentedGraph g = graph;
  if (strategy == CutStrategy::kNoCut) return g;
  for (const auto& [target, value] : intervention.assignments) {
    (void)value;
    if (target < 0 || target >= graph.endo_count())
      throw UnknownVariableError("intervened node is not an endogenous node of the graph");
    const std::vector<int> incoming = g.parents(target);
    for (int p : incoming) {
      if (strategy == CutStrategy::kAllCut || p < graph.endo_count()) g.remove_edge(p, target);
    }
  }
  return g;
}

// d-separation via active-trail reachability: a breadth-first search over
// (node, entering-direction) states with the usual chain/fork/collider rules.
inline bool d_separated(const AugmentedGraph& graph, const std::vector<int>& a,
                        const std::vector<int>& b, const std::vector<int>& z) {
  const int n = graph.node_count();
  std::vector<bool> in_a(static_cast<std::size_t>(n), false);
  std::vector<bool> in_b(static_cast<std::size_t>(n), false);
  std::vector<bool> in_z(static_cast<std::size_t>(n), false);
  for (int x : a) in_a[static_cast<std::size_t>(x)] = true;
  for (int x : b) in_b[static_cast<std::size_t>(x)] = true;
  for (int x : z) in_z[static_cast<std::size_t>(x)] = true;
  for (int x = 0; x < n; ++x) {
    if ((in_a[static_cast<std::size_t>(x)] && in_b[static_cast<std::size_t>(x)]) ||
        (in_a[static_cast<std::size_t>(x)] && in_z[static_cast<std::size_t>(x)]) ||
        (in_b[static_cast<std::size_t>(x)] && in_z[static_cast<std::size_t>(x)]))
      throw ConfigError("d-separation query sets must be disjoint");
  }

  // Ancestors of z (inclusive), for the collider rule.
  std::vector<bool> z_ancestor(static_cast<std::size_t>(n), false);
  {
    std::deque<int> frontier(z.begin(), z.end());
    for (int x : z) z_ancestor[static_cast<std::size_t>(x)] = true;
    while (!frontier.empty()) {
      const int v = frontier.front();
      frontier.pop_front();
      for (int p : graph.parents(v)) {
        if (!z_ancestor[static_cast<std::size_t>(p)]) {
          z_ancestor[static_cast<std::size_t>(p)] = true;
          frontier.push_back(p);
        }
      }
    }
  }

  // State (node, dir): dir 0 = trail entered from a child (or query start),
  // dir 1 = trail entered from a parent.
  std::vector<std::array<bool, 2>> visited(static_cast<std::size_t>(n), {false, false});
  std::deque<std::pair<int, int>> frontier;
  for (int x : a) frontier.emplace_back(x, 0);
  while (!frontier.empty()) {
    const auto [v, dir] = frontier.front();
    frontier.pop_front();
    auto& seen = visited[static_cast<std::size_t>(v)][static_cast<std::size_t>(dir)];
    if (seen) continue;
    seen = true;
    if (!in_z[static_cast<std::size_t>(v)] && in_b[static_cast<std::size_t>(v)]) return false;
    if (dir == 0) {
      if (!in_z[static_cast<std::size_t>(v)]) {
        for (int p : graph.parents(v)) frontier.emplace_back(p, 0);
        for (int c : graph.children(v)) frontier.emplace_back(c, 1);
      }
    } else {
      if (!in_z[static_cast<std::size_t>(v)]) {
        for (int c : graph.children(v)) frontier.emplace_back(c, 1);
      }
      if (z_ancestor[static_cast<std::size_t>(v)]) {
        for (int p : graph.parents(v)) frontier.emplace_back(p, 0);
      }
    }
  }
  return true;
}

// The minimal subset of `submodel i`'s observed variables that shields one
// exogenous variable from the rest, per submodel, plus the union over
// submodels.
struct MarkovBoundary {
  int exo_var = -1;
  std::vector<std::vector<int>> per_submodel;  // endogenous indices, sorted
  std::vector<int> union_boundary;             // sorted
};

namespace detail {

// Grow-shrink with d-separation as the independence subroutine. The result is
// the unique minimal separating subset of `candidates` for `target`.
inline std::vector<int> boundary_in_graph(const AugmentedGraph& graph, int target,
                                          const std::vector<int>& candidates) {
  std::vector<int> boundary;
  const auto rest_of = [&](const std::vector<int>& current) {
    std::vector<int> rest;
    for (int y : candidates) {
      if (std::find(current.begin(), current.end(), y) == current.end()) rest.push_back(y);
    }
    return rest;
  };

  bool grew = true;
  while (grew) {
    grew = false;
    for (int y : candidates) {
      if (std::find(boundary.begin(), boundary.end(), y) != boundary.end()) continue;
      if (!d_separated(graph, {target}, {y}, boundary)) {
        boundary.push_back(y);
        grew = true;
      }
    }
  }
  for (std::size_t idx = 0; idx < boundary.size();) {
    std::vector<int> without = boundary;
    without.erase(without.begin() + static_cast<long>(idx));
    std::vector<int> other = rest_of(without);
    if (d_separated(graph, {target}, other, without)) {
      boundary = std::move(without);
      idx = 0;
    } else {
      ++idx;
    }
  }
  std::sort(boundary.begin(), boundary.end());
  return boundary;
}

}  // namespace detail

// Per-submodel boundaries are computed independently on each submodel's
// mutilated graph and combined by union.
inline std::vector<MarkovBoundary> counterfactual_markov_boundary(const Scm& scm,
                                                                  const CtfVariableSet& ctf_vars,
                                                                  CutStrategy strategy) {
  ctf_vars.validate();
  const AugmentedGraph base = augmented_graph(scm);
  std::vector<AugmentedGraph> submodel_graphs;
  submodel_graphs.reserve(ctf_vars.groups.size());
  for (const auto& g : ctf_vars.groups) {
    std::vector<std::pair<int, double>> pins;
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      pins.emplace_back(g.intervened[t], g.intervened_values.empty() ? 0.0 : g.intervened_values[t]);
    }
    submodel_graphs.push_back(mutilate(base, Intervention::of(std::move(pins)), strategy));
  }

  std::vector<MarkovBoundary> out;
  out.reserve(static_cast<std::size_t>(scm.exo_count()));
  for (int j = 0; j < scm.exo_count(); ++j) {
    MarkovBoundary mb;
    mb.exo_var = j;
    std::set<int> unioned;
    for (std::size_t i = 0; i < ctf_vars.groups.size(); ++i) {
      auto b = detail::boundary_in_graph(submodel_graphs[i], base.exo_node(j),
                                         ctf_vars.groups[i].observed);
      unioned.insert(b.begin(), b.end());
      mb.per_submodel.push_back(std::move(b));
    }
    mb.union_boundary.assign(unioned.begin(), unioned.end());
    out.push_back(std::move(mb));
  }
  return out;
}

// DOT export. Exogenous nodes are drawn dashed.
inline std::string to_dot(const AugmentedGraph& graph, const Scm& scm,
                          const std::string& title = "augmented") {
  std::ostringstream os;
  os << "digraph \"" << title << "\" {\n";
  for (int i = 0; i < graph.endo_count(); ++i) {
    os << "  \"" << scm.endo_var(i).name << "\" [shape=ellipse];\n";
  }
  for (int j = 0; j < graph.exo_count(); ++j) {
    os << "  \"" << scm.exo_var(j).name << "\" [shape=circle, style=dashed];\n";
  }
  const auto name_of = [&](int node) {
    return node < graph.endo_count() ? scm.endo_var(node).name
                                     : scm.exo_var(node - graph.endo_count()).name;
  };
  for (int v = 0; v < graph.node_count(); ++v) {
    for (int c : graph.children(v)) {
      os << "  \"" << name_of(v) << "\" -> \"" << name_of(c) << "\";\n";
    }
  }
  os << "}\n";
  return os.str();
}

// Causal-graph DOT (endogenous nodes only, confounders as dashed bidirected
// edges).
inline std::string to_dot_causal(const Scm& scm) {
  std::ostringstream os;
  os << "digraph \"" << scm.name() << "\" {\n";
  for (int i = 0; i < scm.endo_count(); ++i) {
    os << "  \"" << scm.endo_var(i).name << "\";\n";
  }
  for (int i = 0; i < scm.endo_count(); ++i) {
    for (int p : scm.mechanism(i).endo_parents) {
      os << "  \"" << scm.endo_var(p).name << "\" -> \"" << scm.endo_var(i).name << "\";\n";
    }
  }
  for (int j = 0; j < scm.exo_count(); ++j) {
    std::vector<int> sharers;
    for (int i = 0; i < scm.endo_count(); ++i) {
      const auto& exo = scm.mechanism(i).exo_parents;
      if (std::find(exo.begin(), exo.end(), j) != exo.end()) sharers.push_back(i);
    }
    for (std::size_t a = 0; a < sharers.size(); ++a) {
      for (std::size_t b = a + 1; b < sharers.size(); ++b) {
        os << "  \"" << scm.endo_var(sharers[a]).name << "\" -> \""
           << scm.endo_var(sharers[b]).name << "\" [dir=both, style=dashed];\n";
      }
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace exom
