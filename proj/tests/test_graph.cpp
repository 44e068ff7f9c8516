#include <catch2/catch_amalgamated.hpp>

#include "exom/graph.hpp"
#include "exom/scm_io.hpp"
#include "exom/zoo.hpp"
#include "oracles.hpp"

using namespace exom;

namespace {

Scm three_chain() {
  return load_scm_json(R"json({
    "name": "chain3",
    "variables": [
      {"name": "V1", "domain": "continuous"},
      {"name": "V2", "domain": "continuous"},
      {"name": "V3", "domain": "continuous"}
    ],
    "exogenous": [
      {"name": "U1", "marginal": {"type": "normal"}},
      {"name": "U2", "marginal": {"type": "normal"}},
      {"name": "U3", "marginal": {"type": "normal"}}
    ],
    "mechanisms": [
      {"target": "V1", "expr": "U1"},
      {"target": "V2", "expr": "V1 + U2"},
      {"target": "V3", "expr": "V2 + U3"}
    ]
  })json");
}

Scm discrete_chain() {
  return load_scm_json(R"json({
    "name": "binchain",
    "variables": [
      {"name": "V1", "domain": {"discrete": 2}},
      {"name": "V2", "domain": {"discrete": 2}},
      {"name": "V3", "domain": {"discrete": 2}}
    ],
    "exogenous": [
      {"name": "U1", "marginal": {"type": "bernoulli", "p": 0.4}},
      {"name": "U2", "marginal": {"type": "bernoulli", "p": 0.3}},
      {"name": "U3", "marginal": {"type": "bernoulli", "p": 0.6}}
    ],
    "mechanisms": [
      {"target": "V1", "expr": "U1"},
      {"target": "V2", "expr": "V1 + U2 - 2 * V1 * U2"},
      {"target": "V3", "expr": "V2 + U3 - 2 * V2 * U3"}
    ]
  })json");
}

}  // namespace

TEST_CASE("augmented graph construction") {
  const Scm chain = three_chain();
  const AugmentedGraph g = augmented_graph(chain);
  CHECK(g.node_count() == 6);
  CHECK(g.edge_count() == 5);  // V1->V2, V2->V3 plus one noise edge per variable
  CHECK(g.acyclic());

  SECTION("shared confounder has out-degree two") {
    const Scm m = load_zoo_scm("M");
    const AugmentedGraph gm = augmented_graph(m);
    const int uxw = gm.exo_node(m.exo_index("Uxw"));
    CHECK(gm.children(uxw).size() == 2);
  }
  SECTION("every zoo augmented graph is acyclic") {
    for (const auto& name : zoo_names()) {
      INFO(name);
      CHECK(augmented_graph(load_zoo_scm(name)).acyclic());
    }
  }
}

TEST_CASE("mutilation strategies") {
  const Scm chain = three_chain();
  const AugmentedGraph g = augmented_graph(chain);
  const Intervention iv = Intervention::of({{1, 0.0}});  // do(V2)
  const int u2 = g.exo_node(1);

  const AugmentedGraph all = mutilate(g, iv, CutStrategy::kAllCut);
  CHECK(all.parents(1).empty());
  CHECK(all.edge_count() == 3);

  const AugmentedGraph none = mutilate(g, iv, CutStrategy::kNoCut);
  CHECK(none.edge_count() == g.edge_count());
  CHECK(none.parents(1) == g.parents(1));

  const AugmentedGraph endo = mutilate(g, iv, CutStrategy::kEndoCut);
  CHECK(endo.parents(1) == std::vector<int>{u2});

  SECTION("idempotence") {
    const AugmentedGraph all2 = mutilate(all, iv, CutStrategy::kAllCut);
    CHECK(all2.edge_count() == all.edge_count());
    const AugmentedGraph endo2 = mutilate(endo, iv, CutStrategy::kEndoCut);
    CHECK(endo2.edge_count() == endo.edge_count());
  }
  SECTION("unknown nodes rejected") {
    CHECK_THROWS_AS(mutilate(g, Intervention::of({{9, 0.0}}), CutStrategy::kAllCut),
                    UnknownVariableError);
  }
}

TEST_CASE("d-separation basics") {
  const Scm chain = three_chain();
  const AugmentedGraph g = augmented_graph(chain);
  const int u1 = g.exo_node(0);

  // chain: U1 -> V1 -> V2
  CHECK(d_separated(g, {u1}, {1}, {0}));
  CHECK_FALSE(d_separated(g, {u1}, {1}, {}));

  SECTION("collider") {
    const Scm collider = load_zoo_scm("COLLIDER-LIN");
    const AugmentedGraph gc = augmented_graph(collider);
    CHECK(d_separated(gc, {0}, {1}, {}));
    CHECK_FALSE(d_separated(gc, {0}, {1}, {2}));
  }
  SECTION("query sets must be disjoint") {
    CHECK_THROWS_AS(d_separated(g, {0}, {0}, {}), ConfigError);
  }
}

TEST_CASE("d-separation agrees with the moralization oracle on random DAGs") {
  Rng rng(2024);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const int endo = 2 + rng.uniform_int(4);
    const int exo = 1 + rng.uniform_int(3);
    const AugmentedGraph g = oracles::random_dag(endo, exo, 0.35, rng);
    const int n = g.node_count();
    for (int q = 0; q < 25; ++q) {
      std::vector<int> pool(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
      for (int i = n - 1; i > 0; --i) std::swap(pool[i], pool[rng.uniform_int(i + 1)]);
      std::vector<int> a{pool[0]}, b{pool[1]}, z;
      for (int i = 2; i < n; ++i) {
        if (rng.bernoulli(0.4)) z.push_back(pool[static_cast<std::size_t>(i)]);
      }
      CHECK(d_separated(g, a, b, z) == oracles::moralized_d_separated(g, a, b, z));
      ++checked;
    }
  }
  CHECK(checked == 1500);
}

TEST_CASE("counterfactual Markov boundaries") {
  SECTION("two-variable Markovian chain, unintervened") {
    const Scm chain = three_chain();
    CtfVariableSet vars;
    vars.groups.push_back(CtfGroup{{0, 1}, {}, {}});  // observe V1, V2
    const auto bounds = counterfactual_markov_boundary(chain, vars, CutStrategy::kEndoCut);
    // U2 -> V2 <- V1: conditioning on the child V2 opens the collider, so the
    // co-parent V1 joins the boundary.
    CHECK(bounds[1].union_boundary == std::vector<int>{0, 1});
    // U1 -> V1: V1 screens everything else off.
    CHECK(bounds[0].union_boundary == std::vector<int>{0});
  }
  SECTION("exogenous variable without observed descendants has empty boundary") {
    const Scm chain = three_chain();
    CtfVariableSet vars;
    vars.groups.push_back(CtfGroup{{0}, {}, {}});  // observe V1 only
    const auto bounds = counterfactual_markov_boundary(chain, vars, CutStrategy::kEndoCut);
    CHECK(bounds[2].union_boundary.empty());  // U3 only feeds V3
  }
  SECTION("union decomposes over submodels") {
    const Scm scm = load_zoo_scm("SIMPSON-NLIN");
    CtfVariableSet both;
    both.groups.push_back(CtfGroup{{0, 3}, {}, {}});
    both.groups.push_back(CtfGroup{{2}, {1}, {0.5}});
    CtfVariableSet first, second;
    first.groups.push_back(both.groups[0]);
    second.groups.push_back(both.groups[1]);
    for (const CutStrategy cut :
         {CutStrategy::kAllCut, CutStrategy::kEndoCut, CutStrategy::kNoCut}) {
      const auto joint = counterfactual_markov_boundary(scm, both, cut);
      const auto f = counterfactual_markov_boundary(scm, first, cut);
      const auto s = counterfactual_markov_boundary(scm, second, cut);
      for (int j = 0; j < scm.exo_count(); ++j) {
        std::set<int> expected(f[static_cast<std::size_t>(j)].union_boundary.begin(),
                               f[static_cast<std::size_t>(j)].union_boundary.end());
        expected.insert(s[static_cast<std::size_t>(j)].union_boundary.begin(),
                        s[static_cast<std::size_t>(j)].union_boundary.end());
        CHECK(joint[static_cast<std::size_t>(j)].union_boundary ==
              std::vector<int>(expected.begin(), expected.end()));
        CHECK(joint[static_cast<std::size_t>(j)].per_submodel[0] ==
              f[static_cast<std::size_t>(j)].per_submodel[0]);
        CHECK(joint[static_cast<std::size_t>(j)].per_submodel[1] ==
              s[static_cast<std::size_t>(j)].per_submodel[0]);
      }
    }
  }
  SECTION("minimality: dropping any member breaks the separation") {
    Rng rng(77);
    for (const auto& name : {"SIMPSON-NLIN", "NAPKIN", "FAIRNESS", "LARGEBD-NLIN"}) {
      const Scm scm = load_zoo_scm(name);
      const ScpState state = sample_state_bernoulli(scm, 2, 0.2, 0.75, rng);
      const AugmentedGraph base = augmented_graph(scm);
      const auto bounds =
          counterfactual_markov_boundary(scm, state.variables, CutStrategy::kEndoCut);
      for (const auto& mb : bounds) {
        for (std::size_t i = 0; i < state.variables.groups.size(); ++i) {
          const auto& g = state.variables.groups[i];
          std::vector<std::pair<int, double>> pins;
          for (std::size_t t = 0; t < g.intervened.size(); ++t) {
            pins.emplace_back(g.intervened[t], g.intervened_values[t]);
          }
          const AugmentedGraph mutilated =
              mutilate(base, Intervention::of(std::move(pins)), CutStrategy::kEndoCut);
          const auto& boundary = mb.per_submodel[i];
          std::vector<int> rest;
          for (int y : g.observed) {
            if (std::find(boundary.begin(), boundary.end(), y) == boundary.end())
              rest.push_back(y);
          }
          // The boundary certifies separation from the rest.
          if (!rest.empty()) {
            CHECK(d_separated(mutilated, {base.exo_node(mb.exo_var)}, rest, boundary));
          }
          for (int dropped : boundary) {
            std::vector<int> weaker;
            for (int y : boundary) {
              if (y != dropped) weaker.push_back(y);
            }
            std::vector<int> larger_rest = rest;
            larger_rest.push_back(dropped);
            CHECK_FALSE(
                d_separated(mutilated, {base.exo_node(mb.exo_var)}, larger_rest, weaker));
          }
        }
      }
    }
  }
  SECTION("result is independent of the candidate order") {
    const Scm scm = load_zoo_scm("NAPKIN");
    CtfVariableSet fwd, rev;
    fwd.groups.push_back(CtfGroup{{0, 1, 2, 3}, {}, {}});
    rev.groups.push_back(CtfGroup{{3, 2, 1, 0}, {}, {}});
    const auto a = counterfactual_markov_boundary(scm, fwd, CutStrategy::kEndoCut);
    const auto b = counterfactual_markov_boundary(scm, rev, CutStrategy::kEndoCut);
    for (int j = 0; j < scm.exo_count(); ++j) {
      CHECK(a[static_cast<std::size_t>(j)].union_boundary ==
            b[static_cast<std::size_t>(j)].union_boundary);
    }
  }
}

TEST_CASE("boundary separation holds in the enumerated joint distribution") {
  // Soundness on an enumerable SCM: whenever d-separation certifies the
  // boundary, U_j is conditionally independent of the remaining observed
  // variables given the boundary, in the exact joint of (U, Y).
  const Scm scm = discrete_chain();
  CtfVariableSet vars;
  vars.groups.push_back(CtfGroup{{0, 1, 2}, {}, {}});
  const auto bounds = counterfactual_markov_boundary(scm, vars, CutStrategy::kAllCut);

  const auto table = oracles::enumerate_exogenous(scm.exo_dist());
  for (int j = 0; j < scm.exo_count(); ++j) {
    const auto& boundary = bounds[static_cast<std::size_t>(j)].union_boundary;
    std::vector<int> rest;
    for (int y : vars.groups[0].observed) {
      if (std::find(boundary.begin(), boundary.end(), y) == boundary.end()) rest.push_back(y);
    }
    if (rest.empty()) continue;
    // P(u_j, boundary, rest) from enumeration.
    std::map<std::tuple<double, std::vector<double>, std::vector<double>>, double> joint;
    std::map<std::vector<double>, double> p_b;
    std::map<std::tuple<double, std::vector<double>>, double> p_ub;
    std::map<std::tuple<std::vector<double>, std::vector<double>>, double> p_br;
    for (const auto& [u, p] : table) {
      const auto v = scm.forward(u);
      std::vector<double> bvals, rvals;
      for (int y : boundary) bvals.push_back(v[static_cast<std::size_t>(y)]);
      for (int y : rest) rvals.push_back(v[static_cast<std::size_t>(y)]);
      joint[{u[static_cast<std::size_t>(j)], bvals, rvals}] += p;
      p_b[bvals] += p;
      p_ub[{u[static_cast<std::size_t>(j)], bvals}] += p;
      p_br[{bvals, rvals}] += p;
    }
    for (const auto& [key, p] : joint) {
      const auto& [uj, bvals, rvals] = key;
      const double lhs = p * p_b[bvals];
      const double rhs = p_ub.at({uj, bvals}) * p_br.at({bvals, rvals});
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("dot export mentions every variable") {
  const Scm scm = load_zoo_scm("FRONT-DOOR");
  const std::string dot = to_dot(augmented_graph(scm), scm);
  for (int i = 0; i < scm.endo_count(); ++i) {
    CHECK(dot.find(scm.endo_var(i).name) != std::string::npos);
  }
  const std::string causal = to_dot_causal(scm);
  CHECK(causal.find("dir=both") != std::string::npos);  // one confounded pair
}
