#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exom/events.hpp"
#include "exom/proposal.hpp"
#include "exom/queries.hpp"

namespace exom {

struct EmptyInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientRunsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Epsilon-mixture of the learned proposal with the prior; importance weights
// are bounded by 1/epsilon. epsilon = 1 degenerates to sampling the prior
// with unit weights.
struct GuardConfig {
  double epsilon = 0.05;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("guard epsilon must be in (0, 1]");
  }
};

struct EstimateReport {
  double p_hat = 0.0;
  std::vector<double> log_weights;  // per sample; -inf where the indicator is 0
  double eta = 0.0;                 // effective-sample proportion
  double sigma_hat = 0.0;           // sample std of weights / sqrt(n)
  int n = 0;
  std::string method;
  bool failed = false;              // eta <= failure threshold
  bool exceeds_one = false;         // raw importance-sampling estimates may overshoot 1
};

inline constexpr double kDefaultFailureThreshold = 0.01;

namespace detail {

inline EstimateReport finalize_report(std::vector<double> log_weights, int n, std::string method,
                                      double failure_threshold) {
  EstimateReport report;
  report.n = n;
  report.method = std::move(method);
  int members = 0;
  for (double lw : log_weights) {
    if (lw != kNegInf) ++members;
  }
  report.eta = static_cast<double>(members) / static_cast<double>(n);
  const double lse = log_sum_exp(log_weights);
  report.p_hat = lse == kNegInf ? 0.0 : std::exp(lse - std::log(static_cast<double>(n)));
  double var = 0.0;
  for (double lw : log_weights) {
    const double w = lw == kNegInf ? 0.0 : std::exp(lw);
    var += (w - report.p_hat) * (w - report.p_hat);
  }
  report.sigma_hat = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) /
                                 std::sqrt(static_cast<double>(n))
                           : 0.0;
  report.failed = report.eta <= failure_threshold;
  report.exceeds_one = report.p_hat > 1.0;
  report.log_weights = std::move(log_weights);
  return report;
}

inline std::optional<GroupMasks> masks_for(const ConditionalDensityModel* model, const Scm& scm,
                                           const CtfVariableSet& vars) {
  if (!model || !model->config().masks_enabled) return std::nullopt;
  return boundary_masks(scm, vars, model->config().cut);
}

}  // namespace detail

// Importance sampling against the guarded conditional proposal at a fixed
// conditioning point. With model == nullptr (or epsilon = 1) every sample
// comes from the prior and the weights are exactly 1: rejection sampling.
inline EstimateReport estimate_is(const ConditionalDensityModel* model, const Scm& scm,
                                  const CtfEvent& event,
                                  const std::vector<std::vector<double>>& y_star, int n,
                                  GuardConfig guard, std::uint64_t seed,
                                  double failure_threshold = kDefaultFailureThreshold) {
  guard.validate();
  event.validate();
  if (n < 1) throw ConfigError("sample count must be >= 1");
  if (!model && guard.epsilon != 1.0)
    throw ConfigError("prior-only sampling requires guard epsilon = 1");
  const double eps = guard.epsilon;
  Rng rng = Rng::substream(seed, "estimate");

  std::optional<ProposalParams> params;
  std::optional<GroupMasks> masks;
  if (model && eps < 1.0) {
    for (std::size_t i = 0; i < y_star.size(); ++i) {
      for (std::size_t c = 0; c < y_star[i].size(); ++c) {
        if (!event.regions[i][c].contains(y_star[i][c]))
          throw DomainMismatchError("conditioning point must lie in the event");
      }
    }
    masks = detail::masks_for(model, scm, event.variables);
    params = model->condition(event.variables, y_star, masks ? &*masks : nullptr).tile(n);
  }

  Tensor u(n, scm.exo_count());
  std::vector<bool> from_prior(static_cast<std::size_t>(n), true);
  if (params) {
    const Tensor proposal_draws = model->sample_q(*params, rng);
    for (int r = 0; r < n; ++r) {
      const bool prior = rng.bernoulli(eps);
      from_prior[static_cast<std::size_t>(r)] = prior;
      if (prior) {
        const auto pu = scm.exo_dist().sample(rng);
        for (int j = 0; j < scm.exo_count(); ++j) u.at(r, j) = pu[static_cast<std::size_t>(j)];
      } else {
        for (int j = 0; j < scm.exo_count(); ++j) u.at(r, j) = proposal_draws.at(r, j);
      }
    }
  } else {
    for (int r = 0; r < n; ++r) {
      const auto pu = scm.exo_dist().sample(rng);
      for (int j = 0; j < scm.exo_count(); ++j) u.at(r, j) = pu[static_cast<std::size_t>(j)];
    }
  }

  std::vector<double> log_q_values;
  if (params) log_q_values = model->log_q(*params, u);

  std::vector<double> log_weights(static_cast<std::size_t>(n), kNegInf);
  std::vector<double> u_row(static_cast<std::size_t>(scm.exo_count()));
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < scm.exo_count(); ++j) u_row[static_cast<std::size_t>(j)] = u.at(r, j);
    if (!event_membership(event, scm, u_row)) continue;
    if (!params) {
      log_weights[static_cast<std::size_t>(r)] = 0.0;  // p/p
      continue;
    }
    const double log_p = scm.exo_dist().log_density(u_row);
    const double log_guarded =
        log_add_exp(std::log1p(-eps) + log_q_values[static_cast<std::size_t>(r)],
                    std::log(eps) + log_p);
    log_weights[static_cast<std::size_t>(r)] = log_p - log_guarded;
  }
  return detail::finalize_report(std::move(log_weights), n,
                                 params ? "exom-is" : "rs", failure_threshold);
}

inline EstimateReport estimate_is(const ConditionalDensityModel* model, const Scm& scm,
                                  const CtfEvent& event, int n, GuardConfig guard,
                                  std::uint64_t seed,
                                  double failure_threshold = kDefaultFailureThreshold) {
  return estimate_is(model, scm, event, event.centers(), n, guard, seed, failure_threshold);
}

// Rejection sampling: the guard epsilon = 1 path under a different method tag.
inline EstimateReport estimate_rs(const Scm& scm, const CtfEvent& event, int n,
                                  std::uint64_t seed,
                                  double failure_threshold = kDefaultFailureThreshold) {
  EstimateReport report =
      estimate_is(nullptr, scm, event, {}, n, GuardConfig{1.0}, seed, failure_threshold);
  report.method = "rs";
  return report;
}

// Multiple importance sampling: per sample, a conditioning point is drawn
// from an event sampler covering the event (uniform over cube axes, the exact
// value on point axes), then one u from that point's guarded proposal.
inline EstimateReport estimate_mis(const ConditionalDensityModel* model, const Scm& scm,
                                   const CtfEvent& event, int n, GuardConfig guard,
                                   std::uint64_t seed,
                                   double failure_threshold = kDefaultFailureThreshold) {
  guard.validate();
  event.validate();
  if (n < 1) throw ConfigError("sample count must be >= 1");
  if (!model) {
    EstimateReport report =
        estimate_is(nullptr, scm, event, {}, n, GuardConfig{1.0}, seed, failure_threshold);
    report.method = "rs";
    return report;
  }
  const double eps = guard.epsilon;
  Rng rng = Rng::substream(seed, "estimate-mis");

  // Event sampler Q_{Y*}: per-row conditioning points.
  std::vector<Tensor> y_values;
  for (std::size_t i = 0; i < event.variables.groups.size(); ++i) {
    const auto& group_regions = event.regions[i];
    Tensor values(n, static_cast<int>(group_regions.size()));
    for (int r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < group_regions.size(); ++c) {
        const Region& region = group_regions[c];
        values.at(r, static_cast<int>(c)) =
            region.point ? region.lo : rng.uniform(region.lo, region.hi);
      }
    }
    y_values.push_back(std::move(values));
  }
  const auto masks = detail::masks_for(model, scm, event.variables);
  const ProposalParams params =
      model->condition_batch(event.variables, y_values, masks ? &*masks : nullptr);

  Tensor u(n, scm.exo_count());
  const Tensor proposal_draws =
      eps < 1.0 ? model->sample_q(params, rng) : Tensor(n, scm.exo_count(), 0.0);
  for (int r = 0; r < n; ++r) {
    const bool prior = rng.bernoulli(eps);
    if (prior) {
      const auto pu = scm.exo_dist().sample(rng);
      for (int j = 0; j < scm.exo_count(); ++j) u.at(r, j) = pu[static_cast<std::size_t>(j)];
    } else {
      for (int j = 0; j < scm.exo_count(); ++j) u.at(r, j) = proposal_draws.at(r, j);
    }
  }
  const std::vector<double> log_q_values = model->log_q(params, u);

  std::vector<double> log_weights(static_cast<std::size_t>(n), kNegInf);
  std::vector<double> u_row(static_cast<std::size_t>(scm.exo_count()));
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < scm.exo_count(); ++j) u_row[static_cast<std::size_t>(j)] = u.at(r, j);
    if (!event_membership(event, scm, u_row)) continue;
    const double log_p = scm.exo_dist().log_density(u_row);
    const double log_guarded = log_add_exp(
        std::log1p(-eps) + log_q_values[static_cast<std::size_t>(r)], std::log(eps) + log_p);
    log_weights[static_cast<std::size_t>(r)] = log_p - log_guarded;
  }
  return detail::finalize_report(std::move(log_weights), n, "exom-mis", failure_threshold);
}

struct DensityEstimate {
  double density = 0.0;
  EstimateReport probability;
};

// p(y*) ~= P(Y* in cube_l(y*)) / l^d.
inline DensityEstimate estimate_density(const ConditionalDensityModel* model, const Scm& scm,
                                        const CtfVariableSet& vars,
                                        const std::vector<std::vector<double>>& y_star,
                                        double side, int n, GuardConfig guard,
                                        std::uint64_t seed) {
  if (!(side > 0.0)) throw ConfigError("cube side must be > 0");
  CtfEvent event;
  event.variables = vars;
  int dims = 0;
  for (std::size_t i = 0; i < vars.groups.size(); ++i) {
    std::vector<Region> regions;
    for (std::size_t c = 0; c < vars.groups[i].observed.size(); ++c) {
      if (scm.endo_var(vars.groups[i].observed[c]).domain.discrete)
        throw ConfigError("density estimation needs continuous counterfactual variables");
      regions.push_back(Region::cube_axis(y_star[i][c], side));
      ++dims;
    }
    event.regions.push_back(std::move(regions));
  }
  DensityEstimate out;
  out.probability = model ? estimate_is(model, scm, event, y_star, n, guard, seed)
                          : estimate_rs(scm, event, n, seed);
  out.density = out.probability.p_hat / std::pow(side, dims);
  return out;
}

inline std::pair<double, double> metrics_esp_fr(const std::vector<EstimateReport>& reports,
                                                double m) {
  if (reports.empty()) throw EmptyInputError("metrics need at least one report");
  double esp = 0.0;
  int failures = 0;
  for (const auto& r : reports) {
    esp += r.eta;
    if (r.eta <= m) ++failures;
  }
  return {esp / static_cast<double>(reports.size()),
          static_cast<double>(failures) / static_cast<double>(reports.size())};
}

// Dimension-regularized spread over repeated runs:
//   2 * mean over events of std over runs of p_hat^(1/dim).
inline double error_bound(const std::vector<std::vector<double>>& estimates,
                          const std::vector<int>& dims) {
  if (estimates.size() != dims.size()) throw ShapeMismatchError("per-event dims mismatch");
  if (estimates.empty()) throw EmptyInputError("error bound needs at least one event");
  double total = 0.0;
  for (std::size_t e = 0; e < estimates.size(); ++e) {
    const auto& runs = estimates[e];
    if (runs.size() < 2) throw InsufficientRunsError("error bound needs >= 2 runs per event");
    const double inv_dim = 1.0 / static_cast<double>(dims[e]);
    std::vector<double> regularized;
    for (double p : runs) regularized.push_back(std::pow(p, inv_dim));
    double mean = 0.0;
    for (double x : regularized) mean += x;
    mean /= static_cast<double>(regularized.size());
    double var = 0.0;
    for (double x : regularized) var += (x - mean) * (x - mean);
    var /= static_cast<double>(regularized.size());
    total += std::sqrt(var);
  }
  return 2.0 * total / static_cast<double>(estimates.size());
}

// ---------------------------------------------------------------------------
// Cross-entropy importance sampling baseline: per-event proposal fitting.

struct DegenerateEliteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Unconditional mixture proposal over the exogenous space: diagonal-Gaussian
// components on continuous coordinates, independent categoricals on discrete
// ones.
struct CeisProposal {
  std::vector<int> continuous;                 // exogenous indices
  std::vector<int> discrete;                   // exogenous indices
  std::vector<double> weights;                 // mixture weights, sum 1
  std::vector<std::vector<double>> means;      // [component][continuous coord]
  std::vector<std::vector<double>> sds;        // [component][continuous coord]
  std::vector<std::vector<double>> cat_probs;  // [discrete coord][category]

  std::vector<double> sample(const ExogenousDist& dist, Rng& rng) const {
    std::vector<double> u(static_cast<std::size_t>(continuous.size() + discrete.size()), 0.0);
    const int comp = rng.categorical(weights);
    for (std::size_t c = 0; c < continuous.size(); ++c) {
      u[static_cast<std::size_t>(continuous[c])] =
          rng.normal(means[static_cast<std::size_t>(comp)][c], sds[static_cast<std::size_t>(comp)][c]);
    }
    for (std::size_t dcoord = 0; dcoord < discrete.size(); ++dcoord) {
      u[static_cast<std::size_t>(discrete[dcoord])] =
          static_cast<double>(rng.categorical(cat_probs[dcoord]));
    }
    (void)dist;
    return u;
  }

  double log_density(std::span<const double> u) const {
    std::vector<double> comp_lp;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      double lp = std::log(weights[k]);
      for (std::size_t c = 0; c < continuous.size(); ++c) {
        const double z = (u[static_cast<std::size_t>(continuous[c])] - means[k][c]) / sds[k][c];
        lp += -0.5 * z * z - std::log(sds[k][c]) - 0.5 * kLogTwoPi;
      }
      comp_lp.push_back(lp);
    }
    double lp = log_sum_exp(comp_lp);
    for (std::size_t dcoord = 0; dcoord < discrete.size(); ++dcoord) {
      const double v = u[static_cast<std::size_t>(discrete[dcoord])];
      const double r = std::round(v);
      if (r != v || r < 0.0 || r >= static_cast<double>(cat_probs[dcoord].size())) return kNegInf;
      lp += std::log(cat_probs[dcoord][static_cast<std::size_t>(r)]);
    }
    return lp;
  }

  void widen(double factor) {
    for (auto& row : sds) {
      for (double& s : row) s *= factor;
    }
    for (auto& probs : cat_probs) {
      const double card = static_cast<double>(probs.size());
      for (double& p : probs) p = 0.5 * p + 0.5 / card;
    }
  }
};

inline CeisProposal ceis_initial(const Scm& scm, int components) {
  CeisProposal q;
  for (int j = 0; j < scm.exo_count(); ++j) {
    const Marginal& m = scm.exo_dist().marginal(static_cast<std::size_t>(j));
    if (m.discrete()) {
      q.discrete.push_back(j);
      std::vector<double> probs;
      if (m.type == Marginal::Type::kBernoulli) {
        probs = {1.0 - m.a, m.a};
      } else {
        probs = m.weights;
      }
      q.cat_probs.push_back(std::move(probs));
    } else {
      q.continuous.push_back(j);
    }
  }
  q.weights.assign(static_cast<std::size_t>(components), 1.0 / components);
  for (int k = 0; k < components; ++k) {
    std::vector<double> mean, sd;
    for (int c : q.continuous) {
      const Marginal& m = scm.exo_dist().marginal(static_cast<std::size_t>(c));
      if (m.type == Marginal::Type::kNormal) {
        mean.push_back(m.a);
        sd.push_back(m.b);
      } else {
        mean.push_back(0.5 * (m.a + m.b));
        sd.push_back((m.b - m.a) / std::sqrt(12.0));
      }
    }
    q.means.push_back(mean);
    q.sds.push_back(sd);
  }
  return q;
}

// A few rounds of weighted EM on the elite samples.
inline void ceis_fit(CeisProposal& q, const std::vector<std::vector<double>>& elites,
                     const std::vector<double>& weights, Rng& rng) {
  const std::size_t n = elites.size();
  const std::size_t K = q.weights.size();
  const std::size_t d = q.continuous.size();
  if (d > 0) {
    // Reseed component means from elites to escape collapsed starts.
    for (std::size_t k = 0; k < K; ++k) {
      const auto& pick = elites[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)))];
      for (std::size_t c = 0; c < d; ++c) {
        q.means[k][c] = pick[static_cast<std::size_t>(q.continuous[c])];
      }
    }
    for (int em = 0; em < 5; ++em) {
      std::vector<std::vector<double>> resp(n, std::vector<double>(K, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> lp(K);
        for (std::size_t k = 0; k < K; ++k) {
          double acc = std::log(q.weights[k]);
          for (std::size_t c = 0; c < d; ++c) {
            const double z =
                (elites[i][static_cast<std::size_t>(q.continuous[c])] - q.means[k][c]) / q.sds[k][c];
            acc += -0.5 * z * z - std::log(q.sds[k][c]);
          }
          lp[k] = acc;
        }
        const double lse = log_sum_exp(lp);
        for (std::size_t k = 0; k < K; ++k) resp[i][k] = std::exp(lp[k] - lse);
      }
      for (std::size_t k = 0; k < K; ++k) {
        double mass = 0.0;
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double w = weights[i] * resp[i][k];
          mass += w;
          for (std::size_t c = 0; c < d; ++c) {
            mean[c] += w * elites[i][static_cast<std::size_t>(q.continuous[c])];
          }
        }
        if (mass <= 1e-12) continue;
        for (std::size_t c = 0; c < d; ++c) mean[c] /= mass;
        std::vector<double> var(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double w = weights[i] * resp[i][k];
          for (std::size_t c = 0; c < d; ++c) {
            const double diff = elites[i][static_cast<std::size_t>(q.continuous[c])] - mean[c];
            var[c] += w * diff * diff;
          }
        }
        double total_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) total_w += weights[i];
        q.weights[k] = mass / total_w;
        for (std::size_t c = 0; c < d; ++c) {
          q.means[k][c] = mean[c];
          q.sds[k][c] = std::max(std::sqrt(var[c] / mass), 1e-3);
        }
      }
      double wsum = 0.0;
      for (double w : q.weights) wsum += w;
      for (double& w : q.weights) w = std::max(w / wsum, 1e-6);
    }
  }
  for (std::size_t dcoord = 0; dcoord < q.discrete.size(); ++dcoord) {
    const int j = q.discrete[dcoord];
    std::vector<double> counts(q.cat_probs[dcoord].size(), 1e-3);  // smoothing
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      counts[static_cast<std::size_t>(elites[i][static_cast<std::size_t>(j)])] += weights[i];
      total += weights[i];
    }
    for (double& cnt : counts) cnt /= (total + 1e-3 * static_cast<double>(counts.size()));
    q.cat_probs[dcoord] = counts;
  }
}

}  // namespace detail

// Cross-entropy importance sampling: iteratively refits an unconditional
// mixture proposal on indicator-passing samples (all passers are elites,
// weighted by p/q), then estimates with the fitted proposal under the guard.
inline EstimateReport estimate_ceis(const Scm& scm, const CtfEvent& event, int iterations,
                                    int n_per_iter, std::uint64_t seed, int final_n = 0,
                                    GuardConfig guard = GuardConfig{0.05}, int components = 10,
                                    double failure_threshold = kDefaultFailureThreshold) {
  guard.validate();
  event.validate();
  if (iterations < 1 || n_per_iter < 1) throw ConfigError("ceis needs >= 1 iteration and samples");
  if (final_n <= 0) final_n = n_per_iter;
  Rng rng = Rng::substream(seed, "ceis");
  detail::CeisProposal proposal = detail::ceis_initial(scm, components);

  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<double>> elites;
    std::vector<double> weights;
    int widenings = 0;
    while (elites.empty()) {
      for (int i = 0; i < n_per_iter; ++i) {
        auto u = proposal.sample(scm.exo_dist(), rng);
        if (!event_membership(event, scm, u)) continue;
        const double log_p = scm.exo_dist().log_density(u);
        const double log_q = proposal.log_density(u);
        weights.push_back(std::exp(log_p - log_q));
        elites.push_back(std::move(u));
      }
      if (elites.empty()) {
        // No passing samples: widen and retry (DegenerateElite fallback).
        proposal.widen(2.0);
        if (++widenings > 20)
          throw DegenerateEliteError("no indicator-passing samples after repeated widening");
      }
    }
    detail::ceis_fit(proposal, elites, weights, rng);
  }

  // Final estimation pass with the fitted proposal and the epsilon guard.
  const double eps = guard.epsilon;
  std::vector<double> log_weights(static_cast<std::size_t>(final_n), kNegInf);
  int hits = 0;
  for (int i = 0; i < final_n; ++i) {
    std::vector<double> u;
    if (rng.bernoulli(eps)) {
      u = scm.exo_dist().sample(rng);
    } else {
      u = proposal.sample(scm.exo_dist(), rng);
    }
    if (!event_membership(event, scm, u)) continue;
    ++hits;
    const double log_p = scm.exo_dist().log_density(u);
    const double log_guarded =
        log_add_exp(std::log1p(-eps) + proposal.log_density(u), std::log(eps) + log_p);
    log_weights[static_cast<std::size_t>(i)] = log_p - log_guarded;
  }
  (void)hits;
  EstimateReport report =
      detail::finalize_report(std::move(log_weights), final_n, "ceis", failure_threshold);
  return report;
}

// ---------------------------------------------------------------------------
// Query evaluation.

struct QueryTermResult {
  std::string label;
  double coefficient = 1.0;
  EstimateReport report;
};

struct QueryResult {
  QueryKind kind;
  double value = 0.0;
  double sigma = 0.0;  // delta-method standard error
  bool denominator_flagged = false;
  std::vector<QueryTermResult> terms;
  std::optional<QueryTermResult> denominator;
};

// Expands the query into counterfactual probability terms and estimates each
// with multiple importance sampling (or plain rejection sampling when no
// model is given). Conditional queries divide by the denominator probability;
// a denominator estimate below 10x its own standard error is flagged as
// unstable.
inline QueryResult query_value(const Scm& scm, const ConditionalDensityModel* model,
                               QueryKind kind, int treatment, int outcome, int n,
                               std::uint64_t seed, GuardConfig guard = GuardConfig{0.05}) {
  const QueryExpansion expansion = expand_query(scm, kind, treatment, outcome);
  QueryResult result;
  result.kind = kind;
  double numerator = 0.0;
  double numerator_var = 0.0;
  std::uint64_t term_seed = seed;
  for (const auto& term : expansion.numerator) {
    ++term_seed;
    EstimateReport report = model
                                ? estimate_mis(model, scm, term.event, n, guard, term_seed)
                                : estimate_rs(scm, term.event, n, term_seed);
    numerator += term.coefficient * report.p_hat;
    numerator_var += term.coefficient * term.coefficient * report.sigma_hat * report.sigma_hat;
    result.terms.push_back({term.label, term.coefficient, std::move(report)});
  }
  result.value = numerator;
  result.sigma = std::sqrt(numerator_var);
  if (expansion.denominator) {
    ++term_seed;
    EstimateReport den = model
                             ? estimate_mis(model, scm, *expansion.denominator, n, guard, term_seed)
                             : estimate_rs(scm, *expansion.denominator, n, term_seed);
    result.denominator_flagged = den.p_hat < 10.0 * den.sigma_hat;
    if (den.p_hat <= 0.0) {
      result.denominator_flagged = true;
      result.value = std::numeric_limits<double>::quiet_NaN();
      result.sigma = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double ratio = numerator / den.p_hat;
      // Var(A/B) ~ (A/B)^2 (varA/A^2 + varB/B^2)
      double rel = 0.0;
      if (numerator != 0.0) rel += numerator_var / (numerator * numerator);
      rel += (den.sigma_hat * den.sigma_hat) / (den.p_hat * den.p_hat);
      result.value = ratio;
      result.sigma = std::abs(ratio) * std::sqrt(rel);
    }
    result.denominator = QueryTermResult{"denominator", 1.0, std::move(den)};
  }
  return result;
}

}  // namespace exom
