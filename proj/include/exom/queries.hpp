#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "exom/ctf_types.hpp"
#include "exom/graph.hpp"
#include "exom/scm.hpp"

namespace exom {

enum class QueryKind { kAte, kEtt, kNde, kCtfDe };

struct UnsupportedQueryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::kAte: return "ate";
    case QueryKind::kEtt: return "ett";
    case QueryKind::kNde: return "nde";
    case QueryKind::kCtfDe: return "ctfde";
  }
  return "?";
}

inline QueryKind query_kind_from_string(const std::string& s) {
  if (s == "ate") return QueryKind::kAte;
  if (s == "ett") return QueryKind::kEtt;
  if (s == "nde") return QueryKind::kNde;
  if (s == "ctfde") return QueryKind::kCtfDe;
  throw ConfigError("unknown query kind: " + s);
}

namespace detail {

inline std::vector<int> descendants(const Scm& scm, int root) {
  std::vector<std::vector<int>> children(static_cast<std::size_t>(scm.endo_count()));
  for (int i = 0; i < scm.endo_count(); ++i) {
    for (int p : scm.mechanism(i).endo_parents) children[static_cast<std::size_t>(p)].push_back(i);
  }
  std::vector<bool> seen(static_cast<std::size_t>(scm.endo_count()), false);
  std::deque<int> frontier{root};
  seen[static_cast<std::size_t>(root)] = true;
  std::vector<int> out;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    for (int c : children[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = true;
        out.push_back(c);
        frontier.push_back(c);
      }
    }
  }
  return out;
}

inline std::vector<int> ancestors(const Scm& scm, int root) {
  std::vector<bool> seen(static_cast<std::size_t>(scm.endo_count()), false);
  std::deque<int> frontier{root};
  seen[static_cast<std::size_t>(root)] = true;
  std::vector<int> out;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    for (int p : scm.mechanism(v).endo_parents) {
      if (!seen[static_cast<std::size_t>(p)]) {
        seen[static_cast<std::size_t>(p)] = true;
        out.push_back(p);
        frontier.push_back(p);
      }
    }
  }
  return out;
}

}  // namespace detail

// Mediator convention for the nested-world queries: endogenous variables on a
// directed path from treatment to outcome (descendants of the treatment that
// are ancestors of the outcome, excluding both endpoints).
inline std::vector<int> mediator_set(const Scm& scm, int treatment, int outcome) {
  const auto de = detail::descendants(scm, treatment);
  const auto an = detail::ancestors(scm, outcome);
  std::vector<int> mediators;
  for (int v : de) {
    if (v == treatment || v == outcome) continue;
    if (std::find(an.begin(), an.end(), v) != an.end()) mediators.push_back(v);
  }
  std::sort(mediators.begin(), mediators.end());
  return mediators;
}

inline void require_binary(const Scm& scm, int var, const char* role) {
  const Domain& d = scm.endo_var(var).domain;
  if (!d.discrete || d.cardinality != 2)
    throw UnsupportedQueryError(std::string(role) + " variable must be binary: " +
                                scm.endo_var(var).name);
}

namespace detail {

inline CtfGroup outcome_group(int outcome, std::vector<int> intervened,
                              std::vector<double> values) {
  CtfGroup g;
  g.observed = {outcome};
  g.intervened = std::move(intervened);
  g.intervened_values = std::move(values);
  return g;
}

inline CtfGroup factual_group(std::vector<int> observed) {
  CtfGroup g;
  g.observed = std::move(observed);
  std::sort(g.observed.begin(), g.observed.end());
  return g;
}

inline void enumerate_mediator_values(const std::vector<int>& mediators,
                                      std::vector<std::vector<double>>& out) {
  const std::size_t n = mediators.size();
  std::vector<double> combo(n, 0.0);
  const std::size_t total = static_cast<std::size_t>(1) << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (std::size_t b = 0; b < n; ++b) combo[b] = (mask >> b) & 1 ? 1.0 : 0.0;
    out.push_back(combo);
  }
}

}  // namespace detail

// The state space of the query-driven counterfactual process: the set of
// variable-set shapes whose probabilities the query expansion needs. The
// prior over states is uniform.
inline std::vector<CtfVariableSet> query_states(const Scm& scm, QueryKind kind, int treatment,
                                                int outcome) {
  require_binary(scm, treatment, "treatment");
  require_binary(scm, outcome, "outcome");

  using detail::factual_group;
  using detail::outcome_group;

  std::vector<CtfVariableSet> states;
  const auto single = [&](CtfGroup g) {
    CtfVariableSet s;
    s.groups.push_back(std::move(g));
    return s;
  };

  switch (kind) {
    case QueryKind::kAte: {
      states.push_back(single(outcome_group(outcome, {treatment}, {1.0})));
      states.push_back(single(outcome_group(outcome, {treatment}, {0.0})));
      break;
    }
    case QueryKind::kEtt: {
      for (double x : {1.0, 0.0}) {
        CtfVariableSet s;
        s.groups.push_back(outcome_group(outcome, {treatment}, {x}));
        s.groups.push_back(factual_group({treatment}));
        states.push_back(std::move(s));
      }
      states.push_back(single(factual_group({treatment})));
      break;
    }
    case QueryKind::kNde:
    case QueryKind::kCtfDe: {
      const auto mediators = mediator_set(scm, treatment, outcome);
      if (mediators.empty())
        throw UnsupportedQueryError("no mediator between treatment and outcome");
      for (int m : mediators) require_binary(scm, m, "mediator");
      std::vector<std::vector<double>> combos;
      detail::enumerate_mediator_values(mediators, combos);
      for (const auto& mv : combos) {
        CtfVariableSet s;
        std::vector<int> pinned = {treatment};
        std::vector<double> pinned_values = {1.0};
        pinned.insert(pinned.end(), mediators.begin(), mediators.end());
        pinned_values.insert(pinned_values.end(), mv.begin(), mv.end());
        s.groups.push_back(outcome_group(outcome, std::move(pinned), std::move(pinned_values)));
        CtfGroup med;
        med.observed = mediators;
        med.intervened = {treatment};
        med.intervened_values = {0.0};
        s.groups.push_back(std::move(med));
        if (kind == QueryKind::kCtfDe) s.groups.push_back(factual_group({treatment}));
        states.push_back(std::move(s));
      }
      if (kind == QueryKind::kNde) {
        states.push_back(single(outcome_group(outcome, {treatment}, {0.0})));
      } else {
        CtfVariableSet s;
        s.groups.push_back(outcome_group(outcome, {treatment}, {0.0}));
        s.groups.push_back(factual_group({treatment}));
        states.push_back(std::move(s));
        states.push_back(single(factual_group({treatment})));
      }
      break;
    }
  }
  for (auto& s : states) s.validate();
  return states;
}

// One additive term of a query expansion: coefficient * P(event).
struct QueryTerm {
  double coefficient = 1.0;
  CtfEvent event;
  std::string label;
};

// value = (sum of numerator terms) / P(denominator event), denominator
// optional. Conditional queries keep the denominator as its own
// counterfactual probability, estimated like any other term.
struct QueryExpansion {
  QueryKind kind;
  std::vector<QueryTerm> numerator;
  std::optional<CtfEvent> denominator;
};

namespace detail {

inline CtfEvent point_event(CtfVariableSet vars, std::vector<std::vector<double>> values) {
  CtfEvent e;
  e.variables = std::move(vars);
  for (auto& group_values : values) {
    std::vector<Region> regions;
    for (double v : group_values) regions.push_back(Region::exact(v));
    e.regions.push_back(std::move(regions));
  }
  e.validate();
  return e;
}

}  // namespace detail

// Expands a query into counterfactual probability terms over point events:
//   ATE   = P(Y_{x1}=1) - P(Y_{x0}=1)
//   ETT   = [P(Y_{x1}=1, X=1) - P(Y_{x0}=1, X=1)] / P(X=1)
//   NDE   = sum_m P(Y_{x0,m}=1, M_{x1}=m) - P(Y_{x0}=1)
//   CtfDE = [sum_m P(Y_{x1,m}=1, M_{x0}=m, X=0) - P(Y_{x0}=1, X=0)] / P(X=0)
// NDE uses the x0 -> x1 mediator convention with the outcome held at x0+
// mediators from x1; CtfDE is the direct-effect contrast conditioned on the
// factual X=0 group.
inline QueryExpansion expand_query(const Scm& scm, QueryKind kind, int treatment, int outcome) {
  require_binary(scm, treatment, "treatment");
  require_binary(scm, outcome, "outcome");
  using detail::factual_group;
  using detail::outcome_group;
  using detail::point_event;

  QueryExpansion ex;
  ex.kind = kind;
  switch (kind) {
    case QueryKind::kAte: {
      CtfVariableSet s1;
      s1.groups.push_back(outcome_group(outcome, {treatment}, {1.0}));
      ex.numerator.push_back({+1.0, point_event(s1, {{1.0}}), "P(Y_{x1}=1)"});
      CtfVariableSet s0;
      s0.groups.push_back(outcome_group(outcome, {treatment}, {0.0}));
      ex.numerator.push_back({-1.0, point_event(s0, {{1.0}}), "P(Y_{x0}=1)"});
      break;
    }
    case QueryKind::kEtt: {
      for (double x : {1.0, 0.0}) {
        CtfVariableSet s;
        s.groups.push_back(outcome_group(outcome, {treatment}, {x}));
        s.groups.push_back(factual_group({treatment}));
        ex.numerator.push_back({x == 1.0 ? +1.0 : -1.0, point_event(s, {{1.0}, {1.0}}),
                                x == 1.0 ? "P(Y_{x1}=1, X=1)" : "P(Y_{x0}=1, X=1)"});
      }
      CtfVariableSet den;
      den.groups.push_back(factual_group({treatment}));
      ex.denominator = point_event(den, {{1.0}});
      break;
    }
    case QueryKind::kNde:
    case QueryKind::kCtfDe: {
      const auto mediators = mediator_set(scm, treatment, outcome);
      if (mediators.empty())
        throw UnsupportedQueryError("no mediator between treatment and outcome");
      for (int m : mediators) require_binary(scm, m, "mediator");
      const double y_world = kind == QueryKind::kNde ? 0.0 : 1.0;   // treatment value in Y's world
      const double m_world = kind == QueryKind::kNde ? 1.0 : 0.0;   // treatment value in M's world
      std::vector<std::vector<double>> combos;
      detail::enumerate_mediator_values(mediators, combos);
      for (const auto& mv : combos) {
        CtfVariableSet s;
        std::vector<int> pinned = {treatment};
        std::vector<double> pinned_values = {y_world};
        pinned.insert(pinned.end(), mediators.begin(), mediators.end());
        pinned_values.insert(pinned_values.end(), mv.begin(), mv.end());
        s.groups.push_back(outcome_group(outcome, std::move(pinned), std::move(pinned_values)));
        CtfGroup med;
        med.observed = mediators;
        med.intervened = {treatment};
        med.intervened_values = {m_world};
        s.groups.push_back(std::move(med));
        std::vector<std::vector<double>> values = {{1.0}, mv};
        if (kind == QueryKind::kCtfDe) {
          s.groups.push_back(factual_group({treatment}));
          values.push_back({0.0});
        }
        ex.numerator.push_back({+1.0, point_event(s, std::move(values)), "nested mediator term"});
      }
      if (kind == QueryKind::kNde) {
        CtfVariableSet s0;
        s0.groups.push_back(outcome_group(outcome, {treatment}, {0.0}));
        ex.numerator.push_back({-1.0, point_event(s0, {{1.0}}), "P(Y_{x0}=1)"});
      } else {
        CtfVariableSet s0;
        s0.groups.push_back(outcome_group(outcome, {treatment}, {0.0}));
        s0.groups.push_back(factual_group({treatment}));
        ex.numerator.push_back({-1.0, point_event(s0, {{1.0}, {0.0}}), "P(Y_{x0}=1, X=0)"});
        CtfVariableSet den;
        den.groups.push_back(factual_group({treatment}));
        ex.denominator = point_event(den, {{0.0}});
      }
      break;
    }
  }
  return ex;
}

}  // namespace exom
