#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exom/ctf_types.hpp"
#include "exom/queries.hpp"
#include "exom/scm.hpp"

namespace exom {

// A stochastic counterfactual process: a distribution over counterfactual
// variable-set "states", so one trained proposal serves a whole family of
// events.
struct BernoulliProcess {
  int k = 3;           // submodels per state
  double rho1 = 0.2;   // per-variable intervention probability
  double rho2 = 0.75;  // per-variable observation probability
};

struct QueryProcess {
  QueryKind kind = QueryKind::kAte;
  int treatment = -1;
  int outcome = -1;
};

struct ProcessSpec {
  enum class Kind { kBernoulli, kQuery };
  Kind kind = Kind::kBernoulli;
  BernoulliProcess bernoulli;
  QueryProcess query;

  // "bernoulli:k=3" / "bernoulli:k=3,rho1=0.2,rho2=0.75" / "query:ett"
  static ProcessSpec parse(const std::string& text) {
    ProcessSpec spec;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "bernoulli") {
      spec.kind = Kind::kBernoulli;
      std::size_t pos = 0;
      while (pos < rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                             : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("bad process option: " + item);
        const std::string key = item.substr(0, eq);
        const double value = std::stod(item.substr(eq + 1));
        if (key == "k") {
          spec.bernoulli.k = static_cast<int>(value);
        } else if (key == "rho1") {
          spec.bernoulli.rho1 = value;
        } else if (key == "rho2") {
          spec.bernoulli.rho2 = value;
        } else {
          throw ConfigError("unknown process option: " + key);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } else if (head == "query") {
      spec.kind = Kind::kQuery;
      spec.query.kind = query_kind_from_string(rest);
    } else {
      throw ConfigError("unknown process kind: " + head);
    }
    return spec;
  }

  std::string to_string() const {
    if (kind == Kind::kBernoulli) {
      return "bernoulli:k=" + std::to_string(bernoulli.k) +
             ",rho1=" + std::to_string(bernoulli.rho1) +
             ",rho2=" + std::to_string(bernoulli.rho2);
    }
    return std::string("query:") + exom::to_string(query.kind);
  }
};

struct ScpState {
  CtfVariableSet variables;
};

// True iff every observed coordinate of every group's potential response lies
// in its region.
inline bool event_membership(const CtfEvent& event, const Scm& scm, std::span<const double> u) {
  for (std::size_t i = 0; i < event.variables.groups.size(); ++i) {
    const CtfGroup& g = event.variables.groups[i];
    std::vector<std::pair<int, double>> pins;
    pins.reserve(g.intervened.size());
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      pins.emplace_back(g.intervened[t], g.intervened_values[t]);
    }
    const auto response = scm.potential_response(Intervention::of(std::move(pins)), u);
    for (std::size_t c = 0; c < g.observed.size(); ++c) {
      if (!event.regions[i][c].contains(response[static_cast<std::size_t>(g.observed[c])]))
        return false;
    }
  }
  return true;
}

// Draws one state of the Bernoulli process: per submodel, intervention
// indicators ~ Bernoulli(rho1) with values drawn from the endogenous
// distribution (a fresh forward pass), then observation indicators ~
// Bernoulli(rho2) over the remaining variables. Groups with no observed
// variable are redrawn.
inline ScpState sample_state_bernoulli(const Scm& scm, int k, double rho1, double rho2, Rng& rng) {
  if (!(rho1 > 0.0 && rho1 < 1.0 && rho2 > 0.0 && rho2 < 1.0))
    throw ConfigError("bernoulli process needs 0 < rho1, rho2 < 1");
  if (k < 1) throw ConfigError("bernoulli process needs k >= 1");
  ScpState state;
  for (int i = 0; i < k; ++i) {
    CtfGroup group;
    for (int attempt = 0; attempt < 10000 && group.observed.empty(); ++attempt) {
      group = CtfGroup{};
      std::vector<int> intervened;
      for (int v = 0; v < scm.endo_count(); ++v) {
        if (rng.bernoulli(rho1)) intervened.push_back(v);
      }
      // All-variables interventions leave nothing to observe; redraw fully.
      if (intervened.size() == static_cast<std::size_t>(scm.endo_count())) continue;
      if (!intervened.empty()) {
        const auto u = scm.exo_dist().sample(rng);
        const auto full = scm.forward(u);
        for (int v : intervened) {
          group.intervened.push_back(v);
          group.intervened_values.push_back(full[static_cast<std::size_t>(v)]);
        }
      }
      // Only the observation indicators are redrawn on an empty draw, so the
      // intervention marginals stay Bernoulli(rho1).
      for (int retry = 0; retry < 10000 && group.observed.empty(); ++retry) {
        for (int v = 0; v < scm.endo_count(); ++v) {
          if (std::find(group.intervened.begin(), group.intervened.end(), v) !=
              group.intervened.end())
            continue;
          if (rng.bernoulli(rho2)) group.observed.push_back(v);
        }
      }
    }
    if (group.observed.empty()) throw ConfigError("could not draw a nonempty observation set");
    state.variables.groups.push_back(std::move(group));
  }
  state.variables.validate();
  return state;
}

// Uniform draw from the finite state space of a query process.
inline ScpState sample_state_query(const Scm& scm, QueryKind kind, int treatment, int outcome,
                                   Rng& rng) {
  const auto states = query_states(scm, kind, treatment, outcome);
  ScpState s;
  s.variables = states[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(states.size())))];
  return s;
}

inline ScpState sample_state(const Scm& scm, const ProcessSpec& process, Rng& rng) {
  if (process.kind == ProcessSpec::Kind::kBernoulli) {
    return sample_state_bernoulli(scm, process.bernoulli.k, process.bernoulli.rho1,
                                  process.bernoulli.rho2, rng);
  }
  return sample_state_query(scm, process.query.kind, process.query.treatment,
                            process.query.outcome, rng);
}

enum class EventKind { kPoint, kCube };

// Realizes the evaluation distribution over events: draw u ~ P_U, push it
// through the state's submodels, and wrap the responses as a point event or
// an l-cube (discrete coordinates always get exact-value regions).
inline CtfEvent event_from_state(const ScpState& state, const Scm& scm, EventKind kind,
                                 double cube_side, Rng& rng,
                                 std::vector<double>* generating_u = nullptr) {
  const auto u = scm.exo_dist().sample(rng);
  CtfEvent event;
  event.variables = state.variables;
  for (const auto& g : state.variables.groups) {
    std::vector<std::pair<int, double>> pins;
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      pins.emplace_back(g.intervened[t], g.intervened_values[t]);
    }
    const auto response = scm.potential_response(Intervention::of(std::move(pins)), u);
    std::vector<Region> regions;
    for (int y : g.observed) {
      const double value = response[static_cast<std::size_t>(y)];
      const bool discrete = scm.endo_var(y).domain.discrete;
      if (kind == EventKind::kPoint || discrete) {
        regions.push_back(Region::exact(value));
      } else {
        if (!(cube_side > 0.0)) throw ConfigError("cube side length must be > 0");
        regions.push_back(Region::cube_axis(value, cube_side));
      }
    }
    event.regions.push_back(std::move(regions));
  }
  event.validate();
  if (generating_u) *generating_u = u;
  return event;
}

inline nlohmann::json event_to_json(const CtfEvent& event, const Scm& scm) {
  nlohmann::json j;
  j["scm"] = scm.name();
  auto& groups = j["groups"] = nlohmann::json::array();
  for (std::size_t i = 0; i < event.variables.groups.size(); ++i) {
    const CtfGroup& g = event.variables.groups[i];
    nlohmann::json gj;
    auto& observed = gj["observed"] = nlohmann::json::array();
    for (std::size_t c = 0; c < g.observed.size(); ++c) {
      const Region& r = event.regions[i][c];
      nlohmann::json oj{{"var", scm.endo_var(g.observed[c]).name}};
      if (r.point) {
        oj["value"] = r.lo;
      } else {
        oj["lo"] = r.lo;
        oj["hi"] = r.hi;
      }
      observed.push_back(oj);
    }
    auto& intervened = gj["intervened"] = nlohmann::json::object();
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      intervened[scm.endo_var(g.intervened[t]).name] = g.intervened_values[t];
    }
    groups.push_back(gj);
  }
  return j;
}

inline CtfEvent event_from_json(const nlohmann::json& j, const Scm& scm) {
  CtfEvent event;
  for (const auto& gj : j.at("groups")) {
    CtfGroup group;
    std::vector<Region> regions;
    for (const auto& oj : gj.at("observed")) {
      group.observed.push_back(scm.endo_index(oj.at("var").get<std::string>()));
      if (oj.contains("value")) {
        regions.push_back(Region::exact(oj.at("value").get<double>()));
      } else {
        regions.push_back(Region::interval(oj.at("lo").get<double>(), oj.at("hi").get<double>()));
      }
    }
    if (gj.contains("intervened")) {
      for (const auto& [name, value] : gj.at("intervened").items()) {
        group.intervened.push_back(scm.endo_index(name));
        group.intervened_values.push_back(value.get<double>());
      }
    }
    event.variables.groups.push_back(std::move(group));
    event.regions.push_back(std::move(regions));
  }
  event.validate();
  return event;
}

}  // namespace exom
