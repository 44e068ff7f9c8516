#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exom/common.hpp"
#include "exom/expr.hpp"

namespace exom {

enum class VarKind { kEndogenous, kExogenous };

struct Domain {
  bool discrete = false;
  int cardinality = 0;  // discrete only, >= 2

  static Domain continuous() { return {}; }
  static Domain finite(int cardinality) {
    if (cardinality < 2) throw DomainMismatchError("discrete cardinality must be >= 2");
    return {true, cardinality};
  }

  bool contains(double v) const {
    if (!discrete) return std::isfinite(v);
    const double r = std::round(v);
    return r == v && r >= 0.0 && r < static_cast<double>(cardinality);
  }
};

struct Variable {
  std::string name;
  Domain domain;
};

// Exogenous marginal descriptor; the joint is the product of marginals.
struct Marginal {
  enum class Type { kNormal, kUniform, kBernoulli, kCategorical };

  Type type = Type::kNormal;
  double a = 0.0;                // mean / lo / p
  double b = 1.0;                // sd / hi
  std::vector<double> weights;   // categorical

  static Marginal normal(double mean = 0.0, double sd = 1.0) {
    if (sd <= 0.0) throw DomainMismatchError("normal sd must be positive");
    return {Type::kNormal, mean, sd, {}};
  }
  static Marginal uniform(double lo, double hi) {
    if (!(lo < hi)) throw DomainMismatchError("uniform interval must be nonempty");
    return {Type::kUniform, lo, hi, {}};
  }
  static Marginal bernoulli(double p) {
    if (p <= 0.0 || p >= 1.0) throw DomainMismatchError("bernoulli p must be in (0,1)");
    return {Type::kBernoulli, p, 0.0, {}};
  }
  static Marginal categorical(std::vector<double> weights) {
    if (weights.size() < 2) throw DomainMismatchError("categorical needs >= 2 weights");
    double total = 0.0;
    for (double w : weights) {
      if (w <= 0.0) throw DomainMismatchError("categorical weights must be positive");
      total += w;
    }
    Marginal m{Type::kCategorical, 0.0, 0.0, std::move(weights)};
    for (double& w : m.weights) w /= total;
    return m;
  }

  bool discrete() const { return type == Type::kBernoulli || type == Type::kCategorical; }

  int cardinality() const {
    switch (type) {
      case Type::kBernoulli: return 2;
      case Type::kCategorical: return static_cast<int>(weights.size());
      default: return 0;
    }
  }

  Domain domain() const {
    return discrete() ? Domain::finite(cardinality()) : Domain::continuous();
  }

  double sample(Rng& rng) const {
    switch (type) {
      case Type::kNormal: return rng.normal(a, b);
      case Type::kUniform: return rng.uniform(a, b);
      case Type::kBernoulli: return rng.bernoulli(a) ? 1.0 : 0.0;
      case Type::kCategorical: return static_cast<double>(rng.categorical(weights));
    }
    return 0.0;
  }

  // Log-density (continuous) or log-mass (discrete); -inf off-support.
  double log_density(double v) const {
    switch (type) {
      case Type::kNormal: {
        const double z = (v - a) / b;
        return -0.5 * z * z - std::log(b) - 0.5 * kLogTwoPi;
      }
      case Type::kUniform:
        return (v >= a && v <= b) ? -std::log(b - a) : kNegInf;
      case Type::kBernoulli:
        if (v == 1.0) return std::log(a);
        if (v == 0.0) return std::log1p(-a);
        return kNegInf;
      case Type::kCategorical: {
        const double r = std::round(v);
        if (r != v || r < 0.0 || r >= static_cast<double>(weights.size())) return kNegInf;
        return std::log(weights[static_cast<std::size_t>(r)]);
      }
    }
    return kNegInf;
  }
};

class ExogenousDist {
 public:
  ExogenousDist() = default;
  explicit ExogenousDist(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {}

  std::size_t size() const { return marginals_.size(); }
  const Marginal& marginal(std::size_t j) const { return marginals_[j]; }
  const std::vector<Marginal>& marginals() const { return marginals_; }

  std::vector<double> sample(Rng& rng) const {
    std::vector<double> u(marginals_.size());
    for (std::size_t j = 0; j < marginals_.size(); ++j) u[j] = marginals_[j].sample(rng);
    return u;
  }

  double log_density(std::span<const double> u) const {
    if (u.size() != marginals_.size()) throw ShapeMismatchError("exogenous assignment width mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < marginals_.size(); ++j) {
      const double lp = marginals_[j].log_density(u[j]);
      if (lp == kNegInf) return kNegInf;
      s += lp;
    }
    return s;
  }

 private:
  std::vector<Marginal> marginals_;
};

struct Mechanism {
  int target = -1;                 // endogenous index
  std::vector<int> endo_parents;   // ordered by declaration index
  std::vector<int> exo_parents;
  expr::Expression fn;             // slots: [endo values..., exo values...]
};

struct Intervention {
  // (endogenous index, value), sorted by index, unique keys.
  std::vector<std::pair<int, double>> assignments;

  bool empty() const { return assignments.empty(); }

  std::optional<double> value_of(int endo_index) const {
    for (const auto& [k, v] : assignments) {
      if (k == endo_index) return v;
    }
    return std::nullopt;
  }

  static Intervention of(std::vector<std::pair<int, double>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].first == pairs[i - 1].first)
        throw DomainMismatchError("duplicate intervention target");
    }
    return Intervention{std::move(pairs)};
  }
};

// Recursive SCM: exogenous/endogenous declarations, one mechanism per
// endogenous variable, and a product exogenous distribution. Immutable after
// construction; evaluation is reentrant.
class Scm {
 public:
  Scm(std::string name, std::vector<Variable> endo_vars, std::vector<Variable> exo_vars,
      std::vector<Mechanism> mechanisms, ExogenousDist exo_dist)
      : name_(std::move(name)),
        endo_vars_(std::move(endo_vars)),
        exo_vars_(std::move(exo_vars)),
        mechanisms_by_target_(endo_vars_.size()),
        exo_dist_(std::move(exo_dist)) {
    if (exo_dist_.size() != exo_vars_.size())
      throw DomainMismatchError("exogenous distribution width mismatch");
    if (mechanisms.size() != endo_vars_.size())
      throw DomainMismatchError("expected exactly one mechanism per endogenous variable");
    std::vector<bool> seen(endo_vars_.size(), false);
    for (auto& m : mechanisms) {
      if (m.target < 0 || m.target >= static_cast<int>(endo_vars_.size()))
        throw UnknownVariableError("mechanism target out of range");
      if (seen[static_cast<std::size_t>(m.target)])
        throw DomainMismatchError("duplicate mechanism for " + endo_vars_[m.target].name);
      for (int p : m.endo_parents) {
        if (p == m.target) throw CycleError("self-loop on " + endo_vars_[m.target].name);
      }
      seen[static_cast<std::size_t>(m.target)] = true;
      mechanisms_by_target_[static_cast<std::size_t>(m.target)] = std::move(m);
    }
    topo_order_ = topological_order();
  }

  const std::string& name() const { return name_; }
  int endo_count() const { return static_cast<int>(endo_vars_.size()); }
  int exo_count() const { return static_cast<int>(exo_vars_.size()); }
  const Variable& endo_var(int i) const { return endo_vars_[static_cast<std::size_t>(i)]; }
  const Variable& exo_var(int j) const { return exo_vars_[static_cast<std::size_t>(j)]; }
  const Mechanism& mechanism(int target) const {
    return mechanisms_by_target_[static_cast<std::size_t>(target)];
  }
  const ExogenousDist& exo_dist() const { return exo_dist_; }
  const std::vector<int>& topo_order() const { return topo_order_; }

  int endo_index(const std::string& name) const {
    for (std::size_t i = 0; i < endo_vars_.size(); ++i) {
      if (endo_vars_[i].name == name) return static_cast<int>(i);
    }
    throw UnknownVariableError("unknown endogenous variable: " + name);
  }

  int exo_index(const std::string& name) const {
    for (std::size_t j = 0; j < exo_vars_.size(); ++j) {
      if (exo_vars_[j].name == name) return static_cast<int>(j);
    }
    throw UnknownVariableError("unknown exogenous variable: " + name);
  }

  void validate_intervention(const Intervention& intervention) const {
    for (const auto& [k, v] : intervention.assignments) {
      if (k < 0 || k >= endo_count()) throw UnknownVariableError("intervention target out of range");
      if (!endo_var(k).domain.contains(v))
        throw DomainMismatchError("intervention value outside domain of " + endo_var(k).name);
    }
  }

  // Unique solution of the submodel at u: mechanisms evaluated in topological
  // order, intervened variables pinned to constants.
  std::vector<double> potential_response(const Intervention& intervention,
                                         std::span<const double> u) const {
    if (u.size() != exo_vars_.size()) throw ShapeMismatchError("exogenous assignment width mismatch");
    std::vector<double> slots(endo_vars_.size() + exo_vars_.size(), 0.0);
    std::copy(u.begin(), u.end(), slots.begin() + static_cast<long>(endo_vars_.size()));
    for (int i : topo_order_) {
      const auto pinned = intervention.value_of(i);
      slots[static_cast<std::size_t>(i)] =
          pinned ? *pinned
                 : mechanisms_by_target_[static_cast<std::size_t>(i)].fn.eval(slots);
    }
    std::vector<double> out(slots.begin(), slots.begin() + static_cast<long>(endo_vars_.size()));
    return out;
  }

  std::vector<double> forward(std::span<const double> u) const {
    return potential_response(Intervention{}, u);
  }

  std::uint64_t structure_hash() const {
    std::uint64_t h = fnv1a(name_);
    for (const auto& v : endo_vars_) {
      h = fnv1a(v.name, h);
      h = fnv1a(v.domain.discrete ? "d" + std::to_string(v.domain.cardinality) : "c", h);
    }
    for (const auto& v : exo_vars_) h = fnv1a(v.name, h);
    for (const auto& m : mechanisms_by_target_) h = fnv1a(m.fn.source(), h);
    return h;
  }

 private:
  // Kahn's algorithm over endogenous parent edges; throws CycleError if no
  // topological order exists.
  std::vector<int> topological_order() const {
    const int n = endo_count();
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
    for (const auto& m : mechanisms_by_target_) {
      for (int p : m.endo_parents) {
        if (p < 0 || p >= n) throw UnknownVariableError("mechanism parent out of range");
        children[static_cast<std::size_t>(p)].push_back(m.target);
        ++indegree[static_cast<std::size_t>(m.target)];
      }
    }
    std::vector<int> frontier;
    for (int i = 0; i < n; ++i) {
      if (indegree[static_cast<std::size_t>(i)] == 0) frontier.push_back(i);
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    while (!frontier.empty()) {
      // Smallest index first: a canonical order, independent of input order.
      const auto it = std::min_element(frontier.begin(), frontier.end());
      const int i = *it;
      frontier.erase(it);
      order.push_back(i);
      for (int c : children[static_cast<std::size_t>(i)]) {
        if (--indegree[static_cast<std::size_t>(c)] == 0) frontier.push_back(c);
      }
    }
    if (order.size() != static_cast<std::size_t>(n))
      throw CycleError("mechanism parent structure is cyclic in " + name_);
    return order;
  }

  std::string name_;
  std::vector<Variable> endo_vars_;
  std::vector<Variable> exo_vars_;
  std::vector<Mechanism> mechanisms_by_target_;
  ExogenousDist exo_dist_;
  std::vector<int> topo_order_;
};

inline std::vector<std::vector<double>> sample_exogenous(const ExogenousDist& dist, int n,
                                                         Rng& rng) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(dist.sample(rng));
  return out;
}

inline double log_density_exogenous(const ExogenousDist& dist, std::span<const double> u) {
  return dist.log_density(u);
}

}  // namespace exom
