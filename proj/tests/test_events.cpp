#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "exom/events.hpp"
#include "exom/scm_io.hpp"
#include "exom/zoo.hpp"
#include "oracles.hpp"

using namespace exom;

namespace {

Scm binary_chain() {
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

TEST_CASE("event membership") {
  const Scm scm = load_zoo_scm("CHAIN-LIN-3");
  Rng rng(4);

  SECTION("full-domain regions accept every unit") {
    CtfEvent event;
    event.variables.groups.push_back(CtfGroup{{0, 1, 2}, {}, {}});
    event.regions.push_back(
        {Region::interval(-1e30, 1e30), Region::interval(-1e30, 1e30), Region::interval(-1e30, 1e30)});
    for (int rep = 0; rep < 50; ++rep) {
      CHECK(event_membership(event, scm, scm.exo_dist().sample(rng)));
    }
  }
  SECTION("discrete point event matches the enumeration membership set") {
    const Scm bin = binary_chain();
    CtfEvent event;
    event.variables.groups.push_back(CtfGroup{{1, 2}, {0}, {1.0}});  // Y={V2,V3}, do(V1=1)
    event.regions.push_back({Region::exact(1.0), Region::exact(0.0)});
    for (const auto& [u, p] : oracles::enumerate_exogenous(bin.exo_dist())) {
      (void)p;
      const auto response = oracles::recursive_eval(bin, Intervention::of({{0, 1.0}}), u);
      const bool expected = response[1] == 1.0 && response[2] == 0.0;
      CHECK(event_membership(event, bin, u) == expected);
    }
  }
  SECTION("cube centered at the generating unit contains it") {
    ScpState state = sample_state_bernoulli(scm, 2, 0.2, 0.75, rng);
    std::vector<double> u;
    const CtfEvent event = event_from_state(state, scm, EventKind::kCube, 0.02, rng, &u);
    CHECK(event_membership(event, scm, u));
  }
}

TEST_CASE("bernoulli process sampling") {
  const Scm scm = load_zoo_scm("CHAIN-LIN-3");
  Rng rng(9);

  SECTION("parameter validation") {
    CHECK_THROWS_AS(sample_state_bernoulli(scm, 3, 0.0, 0.75, rng), ConfigError);
    CHECK_THROWS_AS(sample_state_bernoulli(scm, 3, 0.2, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_state_bernoulli(scm, 0, 0.2, 0.75, rng), ConfigError);
  }
  SECTION("groups always observe at least one variable") {
    for (int rep = 0; rep < 200; ++rep) {
      const ScpState s = sample_state_bernoulli(scm, 3, 0.2, 0.05, rng);
      for (const auto& g : s.variables.groups) CHECK_FALSE(g.observed.empty());
    }
  }
  SECTION("per-variable intervention frequency stays near rho1") {
    // Wide SCM: the all-variables-intervened redraw correction is ~rho1^9.
    const Scm wide = load_zoo_scm("LARGEBD-NLIN");
    const int n = 10000;
    const double rho1 = 0.2;
    std::vector<int> counts(static_cast<std::size_t>(wide.endo_count()), 0);
    for (int rep = 0; rep < n; ++rep) {
      const ScpState s = sample_state_bernoulli(wide, 1, rho1, 0.75, rng);
      for (int x : s.variables.groups[0].intervened) ++counts[static_cast<std::size_t>(x)];
    }
    for (int v = 0; v < wide.endo_count(); ++v) {
      const double freq = static_cast<double>(counts[static_cast<std::size_t>(v)]) / n;
      CHECK(std::abs(freq - rho1) < 3.0 * std::sqrt(rho1 * (1 - rho1) / n));
    }
  }
  SECTION("every (X, Y) pattern with nonempty Y shows up") {
    // For each X subset of {V1,V2,V3}, Y ranges over nonempty subsets of the
    // complement.
    int expected = 0;
    for (int xmask = 0; xmask < 8; ++xmask) {
      const int free_vars = 3 - __builtin_popcount(xmask);
      expected += (1 << free_vars) - 1;
    }
    std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
    Rng cover_rng(31);
    for (int rep = 0; rep < 100000; ++rep) {
      const ScpState s = sample_state_bernoulli(scm, 1, 0.2, 0.75, cover_rng);
      seen.insert({s.variables.groups[0].intervened, s.variables.groups[0].observed});
      if (static_cast<int>(seen.size()) == expected) break;
    }
    CHECK(static_cast<int>(seen.size()) == expected);
  }
  SECTION("intervention values are drawn from the endogenous distribution") {
    const Scm bin = binary_chain();
    Rng r2(5);
    for (int rep = 0; rep < 100; ++rep) {
      const ScpState s = sample_state_bernoulli(bin, 2, 0.4, 0.75, r2);
      for (const auto& g : s.variables.groups) {
        for (std::size_t t = 0; t < g.intervened.size(); ++t) {
          CHECK(bin.endo_var(g.intervened[t]).domain.contains(g.intervened_values[t]));
        }
      }
    }
  }
}

TEST_CASE("query process state sampling is uniform") {
  const Scm scm = load_zoo_scm("FAIRNESS");
  const int treatment = scm.endo_index("X");
  const int outcome = scm.endo_index("Y");
  const auto states = query_states(scm, QueryKind::kAte, treatment, outcome);
  REQUIRE(states.size() == 2);
  Rng rng(13);
  const int n = 10000;
  std::map<std::string, int> counts;
  for (int i = 0; i < n; ++i) {
    const ScpState s = sample_state_query(scm, QueryKind::kAte, treatment, outcome, rng);
    std::string key;
    for (const auto& g : s.variables.groups) {
      key += "g";
      for (std::size_t t = 0; t < g.intervened.size(); ++t) {
        key += std::to_string(g.intervened[t]) + "=" + std::to_string(g.intervened_values[t]);
      }
    }
    ++counts[key];
  }
  REQUIRE(counts.size() == 2);
  const double expect = 0.5;
  for (const auto& [key, c] : counts) {
    (void)key;
    const double freq = static_cast<double>(c) / n;
    CHECK(std::abs(freq - expect) < 3.0 * std::sqrt(expect * (1 - expect) / n));
  }
}

TEST_CASE("events from states") {
  const Scm scm = load_zoo_scm("SIMPSON-NLIN");
  Rng rng(8);
  SECTION("generated events contain their generating unit") {
    for (int rep = 0; rep < 100; ++rep) {
      const ScpState state = sample_state_bernoulli(scm, 3, 0.2, 0.75, rng);
      std::vector<double> u;
      const CtfEvent event = event_from_state(state, scm, EventKind::kCube, 0.02, rng, &u);
      CHECK(event_membership(event, scm, u));
    }
  }
  SECTION("point events on discrete SCMs have enumerable probability") {
    const Scm bin = binary_chain();
    Rng r2(3);
    const ScpState state = sample_state_bernoulli(bin, 1, 0.3, 0.75, r2);
    std::vector<double> u;
    const CtfEvent event = event_from_state(state, bin, EventKind::kPoint, 0.0, r2, &u);
    const double p = oracles::enum_event_probability(bin, event);
    CHECK(p > 0.0);  // the generating unit is a member
  }
  SECTION("membership is monotone in the cube side") {
    Rng r3(6);
    for (int rep = 0; rep < 20; ++rep) {
      const ScpState state = sample_state_bernoulli(scm, 2, 0.2, 0.75, r3);
      std::vector<double> u;
      const CtfEvent small = event_from_state(state, scm, EventKind::kCube, 0.02, r3, &u);
      CtfEvent large = small;
      for (auto& group_regions : large.regions) {
        for (auto& r : group_regions) {
          if (!r.point) r = Region::cube_axis(r.center(), 0.08);
        }
      }
      for (int draw = 0; draw < 50; ++draw) {
        const auto candidate = scm.exo_dist().sample(r3);
        if (event_membership(small, scm, candidate)) {
          CHECK(event_membership(large, scm, candidate));
        }
      }
    }
  }
}

TEST_CASE("event JSON round trip") {
  const Scm scm = load_zoo_scm("SIMPSON-NLIN");
  Rng rng(15);
  const ScpState state = sample_state_bernoulli(scm, 2, 0.3, 0.75, rng);
  const CtfEvent event = event_from_state(state, scm, EventKind::kCube, 0.02, rng);
  const CtfEvent loaded = event_from_json(event_to_json(event, scm), scm);
  REQUIRE(loaded.variables.groups.size() == event.variables.groups.size());
  for (int rep = 0; rep < 100; ++rep) {
    const auto u = scm.exo_dist().sample(rng);
    CHECK(event_membership(event, scm, u) == event_membership(loaded, scm, u));
  }
}

TEST_CASE("process spec parsing") {
  const ProcessSpec b = ProcessSpec::parse("bernoulli:k=4,rho1=0.3,rho2=0.5");
  CHECK(b.kind == ProcessSpec::Kind::kBernoulli);
  CHECK(b.bernoulli.k == 4);
  CHECK(b.bernoulli.rho1 == 0.3);
  CHECK(b.bernoulli.rho2 == 0.5);

  const ProcessSpec defaults = ProcessSpec::parse("bernoulli:k=3");
  CHECK(defaults.bernoulli.rho1 == 0.2);
  CHECK(defaults.bernoulli.rho2 == 0.75);

  const ProcessSpec q = ProcessSpec::parse("query:ett");
  CHECK(q.kind == ProcessSpec::Kind::kQuery);
  CHECK(q.query.kind == QueryKind::kEtt);

  CHECK_THROWS_AS(ProcessSpec::parse("nope:1"), ConfigError);
  CHECK_THROWS_AS(ProcessSpec::parse("bernoulli:zzz"), ConfigError);
  CHECK_THROWS_AS(ProcessSpec::parse("query:zzz"), ConfigError);
}
