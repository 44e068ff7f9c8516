#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "exom/scm.hpp"

namespace exom {

// Declarative SCM format:
// {
//   "name": "CHAIN-LIN-3",
//   "variables": [{"name": "V1", "domain": "continuous"},
//                 {"name": "X",  "domain": {"discrete": 2}}],
//   "exogenous": [{"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
//                 {"name": "U2", "marginal": {"type": "uniform", "lo": 0, "hi": 1}},
//                 {"name": "U3", "marginal": {"type": "bernoulli", "p": 0.3}},
//                 {"name": "U4", "marginal": {"type": "categorical", "weights": [1, 2, 1]}}],
//   "mechanisms": [{"target": "V1", "expr": "U1"}],
//   "defaults": {"treatment": "X", "outcome": "Y"}   // optional
// }
// Mechanism parents are inferred from the expression's free variables.

inline Marginal marginal_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "normal") return Marginal::normal(j.value("mean", 0.0), j.value("sd", 1.0));
  if (type == "uniform") return Marginal::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  if (type == "bernoulli") return Marginal::bernoulli(j.at("p").get<double>());
  if (type == "categorical")
    return Marginal::categorical(j.at("weights").get<std::vector<double>>());
  throw ConfigError("unknown marginal type: " + type);
}

inline nlohmann::json marginal_to_json(const Marginal& m) {
  switch (m.type) {
    case Marginal::Type::kNormal: return {{"type", "normal"}, {"mean", m.a}, {"sd", m.b}};
    case Marginal::Type::kUniform: return {{"type", "uniform"}, {"lo", m.a}, {"hi", m.b}};
    case Marginal::Type::kBernoulli: return {{"type", "bernoulli"}, {"p", m.a}};
    case Marginal::Type::kCategorical: return {{"type", "categorical"}, {"weights", m.weights}};
  }
  return {};
}

struct QueryDefaults {
  std::string treatment;
  std::string outcome;
};

inline Scm build_scm(const nlohmann::json& spec, QueryDefaults* defaults = nullptr) {
  std::vector<Variable> endo_vars;
  for (const auto& v : spec.at("variables")) {
    Variable var;
    var.name = v.at("name").get<std::string>();
    const auto& dom = v.at("domain");
    if (dom.is_string() && dom.get<std::string>() == "continuous") {
      var.domain = Domain::continuous();
    } else if (dom.is_object() && dom.contains("discrete")) {
      var.domain = Domain::finite(dom.at("discrete").get<int>());
    } else {
      throw ConfigError("variable " + var.name + ": bad domain");
    }
    endo_vars.push_back(std::move(var));
  }

  std::vector<Variable> exo_vars;
  std::vector<Marginal> marginals;
  for (const auto& u : spec.at("exogenous")) {
    Marginal m = marginal_from_json(u.at("marginal"));
    exo_vars.push_back(Variable{u.at("name").get<std::string>(), m.domain()});
    marginals.push_back(std::move(m));
  }

  const auto endo_slot = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < endo_vars.size(); ++i) {
      if (endo_vars[i].name == name) return static_cast<int>(i);
    }
    return -1;
  };
  const auto exo_slot = [&](const std::string& name) -> int {
    for (std::size_t j = 0; j < exo_vars.size(); ++j) {
      if (exo_vars[j].name == name) return static_cast<int>(j);
    }
    return -1;
  };

  std::vector<Mechanism> mechanisms;
  for (const auto& mj : spec.at("mechanisms")) {
    Mechanism m;
    const std::string target = mj.at("target").get<std::string>();
    m.target = endo_slot(target);
    if (m.target < 0) throw UnknownVariableError("mechanism target not declared: " + target);
    m.fn = expr::parse(mj.at("expr").get<std::string>());
    for (const auto& name : m.fn.free_variables()) {
      if (const int i = endo_slot(name); i >= 0) {
        m.endo_parents.push_back(i);
      } else if (const int j = exo_slot(name); j >= 0) {
        m.exo_parents.push_back(j);
      } else {
        throw UnknownVariableError("mechanism for " + target + " references unknown name: " + name);
      }
    }
    const int n_endo = static_cast<int>(endo_vars.size());
    m.fn.bind([&](const std::string& name) -> int {
      if (const int i = endo_slot(name); i >= 0) return i;
      if (const int j = exo_slot(name); j >= 0) return n_endo + j;
      return -1;
    });
    mechanisms.push_back(std::move(m));
  }

  if (defaults && spec.contains("defaults")) {
    defaults->treatment = spec.at("defaults").value("treatment", "");
    defaults->outcome = spec.at("defaults").value("outcome", "");
  }

  return Scm(spec.value("name", "custom"), std::move(endo_vars), std::move(exo_vars),
             std::move(mechanisms), ExogenousDist(std::move(marginals)));
}

inline Scm load_scm_json(const std::string& text, QueryDefaults* defaults = nullptr) {
  return build_scm(nlohmann::json::parse(text), defaults);
}

inline nlohmann::json scm_to_json(const Scm& scm) {
  nlohmann::json j;
  j["name"] = scm.name();
  auto& vars = j["variables"] = nlohmann::json::array();
  for (int i = 0; i < scm.endo_count(); ++i) {
    const Variable& v = scm.endo_var(i);
    nlohmann::json vj{{"name", v.name}};
    if (v.domain.discrete) {
      vj["domain"] = {{"discrete", v.domain.cardinality}};
    } else {
      vj["domain"] = "continuous";
    }
    vars.push_back(vj);
  }
  auto& exo = j["exogenous"] = nlohmann::json::array();
  for (int u = 0; u < scm.exo_count(); ++u) {
    exo.push_back({{"name", scm.exo_var(u).name},
                   {"marginal", marginal_to_json(scm.exo_dist().marginal(static_cast<std::size_t>(u)))}});
  }
  auto& mechs = j["mechanisms"] = nlohmann::json::array();
  for (int i = 0; i < scm.endo_count(); ++i) {
    mechs.push_back({{"target", scm.endo_var(i).name}, {"expr", scm.mechanism(i).fn.source()}});
  }
  return j;
}

}  // namespace exom
