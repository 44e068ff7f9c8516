#include <catch2/catch_amalgamated.hpp>

#include "exom/estimators.hpp"
#include "exom/train.hpp"
#include "exom/zoo.hpp"
#include "oracles.hpp"

using namespace exom;

namespace {

CtfEvent full_domain_event(const Scm& scm) {
  CtfEvent event;
  CtfGroup g;
  for (int v = 0; v < scm.endo_count(); ++v) g.observed.push_back(v);
  event.variables.groups.push_back(g);
  std::vector<Region> regions;
  for (int v = 0; v < scm.endo_count(); ++v) {
    if (scm.endo_var(v).domain.discrete) {
      regions.push_back(Region::interval(-0.5, scm.endo_var(v).domain.cardinality + 0.5));
    } else {
      regions.push_back(Region::interval(-1e30, 1e30));
    }
  }
  event.regions.push_back(std::move(regions));
  return event;
}

// A short but genuinely trained model for estimator tests.
const TrainResult& fairness_model() {
  static const TrainResult result = [] {
    QueryDefaults defaults;
    const Scm scm = load_zoo_scm("FAIRNESS", &defaults);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.dataset_size = 2048;
    cfg.batch_size = 128;
    cfg.val_events = 0;
    cfg.validate_every = 0;
    cfg.seed = 91;
    cfg.model.hidden = 32;
    cfg.model.encoding_dim = 32;
    cfg.model.masks_enabled = true;
    return train_exom(scm, cfg);
  }();
  return result;
}

CtfEvent random_fairness_event(const Scm& scm, Rng& rng) {
  const ScpState state = sample_state_bernoulli(scm, 2, 0.2, 0.75, rng);
  return event_from_state(state, scm, EventKind::kPoint, 0.0, rng);
}

}  // namespace

TEST_CASE("rejection sampling") {
  const Scm scm = load_zoo_scm("CHAIN-LIN-3");
  SECTION("full-domain events have probability exactly one") {
    const EstimateReport report = estimate_rs(scm, full_domain_event(scm), 500, 4);
    CHECK(report.p_hat == 1.0);
    CHECK(report.eta == 1.0);
    CHECK_FALSE(report.failed);
    CHECK(report.method == "rs");
  }
  SECTION("matches enumeration truth within binomial tolerance") {
    const Scm fair = load_zoo_scm("FAIRNESS");
    Rng rng(7);
    for (int rep = 0; rep < 5; ++rep) {
      const CtfEvent event = random_fairness_event(fair, rng);
      const double truth = oracles::enum_event_probability(fair, event);
      const int n = 20000;
      const EstimateReport report = estimate_rs(fair, event, n, 100 + rep);
      CHECK(std::abs(report.p_hat - truth) <=
            3.0 * std::sqrt(truth * (1.0 - truth) / n) + 1e-9);
    }
  }
}

TEST_CASE("guarded importance sampling") {
  const Scm scm = fairness_model().model.scm_name() == "FAIRNESS" ? load_zoo_scm("FAIRNESS")
                                                                  : load_zoo_scm("FAIRNESS");
  const ConditionalDensityModel& model = fairness_model().model;
  Rng rng(13);

  SECTION("guard epsilon = 1 reproduces rejection sampling bit for bit") {
    const CtfEvent event = random_fairness_event(scm, rng);
    const EstimateReport rs = estimate_rs(scm, event, 2000, 55);
    const EstimateReport is = estimate_is(&model, scm, event, 2000, GuardConfig{1.0}, 55);
    CHECK(rs.p_hat == is.p_hat);
    CHECK(rs.eta == is.eta);
    CHECK(rs.log_weights == is.log_weights);
  }
  SECTION("weights never exceed 1/epsilon") {
    const double eps = 0.05;
    for (int rep = 0; rep < 10; ++rep) {
      const CtfEvent event = random_fairness_event(scm, rng);
      const EstimateReport report =
          estimate_is(&model, scm, event, 2000, GuardConfig{eps}, 200 + rep);
      for (double lw : report.log_weights) {
        if (lw != kNegInf) CHECK(lw <= -std::log(eps) + 1e-12);
      }
    }
  }
  SECTION("estimates agree with enumeration truth within 4 sigma") {
    int inside = 0, total = 0;
    for (int rep = 0; rep < 10; ++rep) {
      const CtfEvent event = random_fairness_event(scm, rng);
      const double truth = oracles::enum_event_probability(scm, event);
      const EstimateReport report =
          estimate_is(&model, scm, event, 1000, GuardConfig{0.05}, 300 + rep);
      ++total;
      const double tol = 4.0 * std::max(report.sigma_hat, 1e-6);
      if (std::abs(report.p_hat - truth) <= tol) ++inside;
    }
    CHECK(inside >= total - 1);
  }
  SECTION("conditioning point must lie inside the event") {
    CtfEvent event;
    event.variables.groups.push_back(CtfGroup{{0}, {}, {}});
    event.regions.push_back({Region::exact(1.0)});
    CHECK_THROWS_AS(estimate_is(&model, scm, event, {{0.0}}, 100, GuardConfig{0.05}, 1),
                    DomainMismatchError);
  }
  SECTION("prior-only sampling requires epsilon = 1") {
    const CtfEvent event = random_fairness_event(scm, rng);
    CHECK_THROWS_AS(estimate_is(nullptr, scm, event, {}, 100, GuardConfig{0.5}, 1), ConfigError);
  }
}

TEST_CASE("log-sum-exp accumulation equals direct summation for moderate weights") {
  const Scm scm = load_zoo_scm("FAIRNESS");
  const ConditionalDensityModel& model = fairness_model().model;
  Rng rng(17);
  const CtfEvent event = random_fairness_event(scm, rng);
  const EstimateReport report = estimate_is(&model, scm, event, 4000, GuardConfig{0.1}, 9);
  double direct = 0.0;
  for (double lw : report.log_weights) {
    if (lw != kNegInf) direct += std::exp(lw);
  }
  direct /= static_cast<double>(report.n);
  CHECK(report.p_hat == Catch::Approx(direct).epsilon(1e-12));
}

TEST_CASE("multiple importance sampling") {
  const Scm scm = load_zoo_scm("FAIRNESS");
  const ConditionalDensityModel& model = fairness_model().model;
  Rng rng(23);

  SECTION("agrees with enumeration truth") {
    int inside = 0;
    for (int rep = 0; rep < 10; ++rep) {
      const CtfEvent event = random_fairness_event(scm, rng);
      const double truth = oracles::enum_event_probability(scm, event);
      const EstimateReport report =
          estimate_mis(&model, scm, event, 1000, GuardConfig{0.05}, 400 + rep);
      if (std::abs(report.p_hat - truth) <= 4.0 * std::max(report.sigma_hat, 1e-6)) ++inside;
    }
    CHECK(inside >= 9);
  }
  SECTION("degenerate event sampler matches plain importance sampling in distribution") {
    const CtfEvent event = random_fairness_event(scm, rng);
    std::vector<double> is_estimates, mis_estimates;
    for (int rep = 0; rep < 120; ++rep) {
      is_estimates.push_back(
          estimate_is(&model, scm, event, 250, GuardConfig{0.05}, 1000 + rep).p_hat);
      mis_estimates.push_back(
          estimate_mis(&model, scm, event, 250, GuardConfig{0.05}, 5000 + rep).p_hat);
    }
    CHECK(oracles::ks_two_sample_p(is_estimates, mis_estimates) > 0.01);
  }
  SECTION("without a model it degrades to rejection sampling") {
    const CtfEvent event = random_fairness_event(scm, rng);
    const EstimateReport report = estimate_mis(nullptr, scm, event, 500, GuardConfig{0.05}, 3);
    CHECK(report.method == "rs");
    for (double lw : report.log_weights) {
      if (lw != kNegInf) CHECK(lw == 0.0);
    }
  }
}

TEST_CASE("variance ordering against rejection sampling") {
  // On a trained proposal, importance weights concentrate where the indicator
  // passes, so their sample variance undercuts the rejection-sampling
  // indicator variance on most rare events.
  const Scm scm = load_zoo_scm("FAIRNESS");
  const ConditionalDensityModel& model = fairness_model().model;
  Rng rng(31);
  int better = 0, considered = 0;
  while (considered < 30) {
    const CtfEvent event = random_fairness_event(scm, rng);
    const double truth = oracles::enum_event_probability(scm, event);
    if (truth > 0.2 || truth <= 0.0) continue;  // keep genuinely rare events
    ++considered;
    const int n = 2000;
    const EstimateReport is =
        estimate_is(&model, scm, event, n, GuardConfig{0.05}, 7000 + considered);
    const EstimateReport rs = estimate_rs(scm, event, n, 9000 + considered);
    const double var_is = is.sigma_hat * is.sigma_hat;
    const double var_rs = rs.sigma_hat * rs.sigma_hat;
    if (var_is < var_rs) ++better;
  }
  CHECK(better >= 24);  // >= 80%
}

TEST_CASE("density estimation") {
  const Scm scm = load_zoo_scm("GAUSSIAN-1D");
  SECTION("standard normal density at the mode") {
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.dataset_size = 4096;
    cfg.batch_size = 128;
    cfg.validate_every = 0;
    cfg.seed = 5;
    cfg.model.hidden = 16;
    cfg.model.encoding_dim = 16;
    const TrainResult trained = train_exom(scm, cfg);
    CtfVariableSet vars;
    vars.groups.push_back(CtfGroup{{0}, {}, {}});
    const DensityEstimate est =
        estimate_density(&trained.model, scm, vars, {{0.0}}, 0.02, 10000, GuardConfig{0.05}, 3);
    const double target = 1.0 / std::sqrt(2.0 * M_PI);
    CHECK(std::abs(est.density - target) / target < 0.10);
  }
  SECTION("discrete coordinates are rejected") {
    const Scm fair = load_zoo_scm("FAIRNESS");
    CtfVariableSet vars;
    vars.groups.push_back(CtfGroup{{0}, {}, {}});
    CHECK_THROWS_AS(
        estimate_density(nullptr, fair, vars, {{1.0}}, 0.02, 100, GuardConfig{1.0}, 1),
        ConfigError);
  }
}

TEST_CASE("esp and fr metrics") {
  const auto report_with_eta = [](double eta) {
    EstimateReport r;
    r.eta = eta;
    return r;
  };
  SECTION("all ones") {
    const auto [esp, fr] = metrics_esp_fr({report_with_eta(1.0), report_with_eta(1.0)}, 0.01);
    CHECK(esp == 1.0);
    CHECK(fr == 0.0);
  }
  SECTION("hand arithmetic") {
    const std::vector<EstimateReport> reports{report_with_eta(0.0), report_with_eta(0.5),
                                              report_with_eta(1.0)};
    const auto [esp, fr] = metrics_esp_fr(reports, 0.0);
    CHECK(esp == 0.5);
    CHECK(fr == Catch::Approx(1.0 / 3.0));
  }
  SECTION("failure rate is monotone in the threshold") {
    std::vector<EstimateReport> reports;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) reports.push_back(report_with_eta(rng.uniform()));
    double previous = 0.0;
    for (double m : {0.0, 0.1, 0.3, 0.7, 1.0}) {
      const auto [esp, fr] = metrics_esp_fr(reports, m);
      (void)esp;
      CHECK(fr >= previous);
      previous = fr;
    }
  }
  SECTION("empty input is an error") {
    CHECK_THROWS_AS(metrics_esp_fr({}, 0.01), EmptyInputError);
  }
}

TEST_CASE("dimension-regularized error bound") {
  SECTION("identical runs give zero") {
    CHECK(error_bound({{0.2, 0.2, 0.2}}, {3}) == 0.0);
  }
  SECTION("one-dimensional events reduce to twice the mean std") {
    const std::vector<double> runs{0.1, 0.2, 0.3};
    double mean = 0.2;
    double var = 0.0;
    for (double r : runs) var += (r - mean) * (r - mean);
    var /= 3.0;
    CHECK(error_bound({runs}, {1}) == Catch::Approx(2.0 * std::sqrt(var)));
  }
  SECTION("hand-worked two-dimensional example") {
    // sqrt(0.04) = 0.2, sqrt(0.09) = 0.3; population std = 0.05.
    CHECK(error_bound({{0.04, 0.09}}, {2}) == Catch::Approx(0.1));
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(error_bound({}, {}), EmptyInputError);
    CHECK_THROWS_AS(error_bound({{0.1}}, {1}), InsufficientRunsError);
    CHECK_THROWS_AS(error_bound({{0.1, 0.2}}, {1, 2}), ShapeMismatchError);
  }
}

TEST_CASE("cross-entropy importance sampling") {
  SECTION("full-domain events converge immediately") {
    const Scm scm = load_zoo_scm("CHAIN-LIN-3");
    const EstimateReport report =
        estimate_ceis(scm, full_domain_event(scm), 1, 2000, 11, 2000);
    // Every sample passes; the estimate is the mean of p/q' for the fitted
    // proposal, an unbiased estimate of 1.
    CHECK(report.eta == 1.0);
    CHECK(std::abs(report.p_hat - 1.0) <= 3.0 * report.sigma_hat + 0.01);
  }
  SECTION("discrete events match enumeration truth") {
    const Scm scm = load_zoo_scm("FAIRNESS");
    Rng rng(41);
    int inside = 0;
    for (int rep = 0; rep < 5; ++rep) {
      const CtfEvent event = random_fairness_event(scm, rng);
      const double truth = oracles::enum_event_probability(scm, event);
      const EstimateReport report = estimate_ceis(scm, event, 5, 2000, 600 + rep, 4000);
      if (std::abs(report.p_hat - truth) <= 4.0 * std::max(report.sigma_hat, 1e-6)) ++inside;
    }
    CHECK(inside >= 4);
  }
  SECTION("fitting beats plain rejection sampling on a rare cube event") {
    const Scm scm = load_zoo_scm("CHAIN-LIN-3");
    Rng rng(47);
    ScpState state;
    state.variables.groups.push_back(CtfGroup{{0, 1, 2}, {}, {}});
    const CtfEvent event = event_from_state(state, scm, EventKind::kCube, 0.25, rng);
    const EstimateReport ceis = estimate_ceis(scm, event, 8, 3000, 5, 3000);
    const EstimateReport rs = estimate_rs(scm, event, 3000, 5);
    CHECK(ceis.eta >= rs.eta);
    CHECK(ceis.eta > 0.0);
  }
}

TEST_CASE("query estimation") {
  SECTION("null effect when the treatment has no path to the outcome") {
    const Scm scm = load_scm_json(R"json({
      "name": "null-effect",
      "variables": [
        {"name": "X", "domain": {"discrete": 2}},
        {"name": "Y", "domain": {"discrete": 2}},
        {"name": "M", "domain": {"discrete": 2}}
      ],
      "exogenous": [
        {"name": "Ux", "marginal": {"type": "bernoulli", "p": 0.5}},
        {"name": "Uy", "marginal": {"type": "bernoulli", "p": 0.4}},
        {"name": "Um", "marginal": {"type": "bernoulli", "p": 0.3}}
      ],
      "mechanisms": [
        {"target": "X", "expr": "Ux"},
        {"target": "Y", "expr": "Uy"},
        {"target": "M", "expr": "X + Um - 2 * X * Um"}
      ]
    })json");
    const QueryResult result =
        query_value(scm, nullptr, QueryKind::kAte, scm.endo_index("X"), scm.endo_index("Y"),
                    20000, 3);
    CHECK(std::abs(result.value) <= 3.0 * result.sigma + 1e-9);
  }
  SECTION("all four queries match enumeration truth via rejection sampling") {
    QueryDefaults defaults;
    const Scm scm = load_zoo_scm("FAIRNESS", &defaults);
    const int x = scm.endo_index(defaults.treatment);
    const int y = scm.endo_index(defaults.outcome);
    for (const QueryKind kind :
         {QueryKind::kAte, QueryKind::kEtt, QueryKind::kNde, QueryKind::kCtfDe}) {
      INFO(to_string(kind));
      const QueryExpansion ex = expand_query(scm, kind, x, y);
      double truth = 0.0;
      for (const auto& term : ex.numerator) {
        truth += term.coefficient * oracles::enum_event_probability(scm, term.event);
      }
      if (ex.denominator) truth /= oracles::enum_event_probability(scm, *ex.denominator);
      const QueryResult result = query_value(scm, nullptr, kind, x, y, 40000, 17);
      CHECK(std::abs(result.value - truth) <= 3.0 * result.sigma + 1e-9);
      CHECK_FALSE(result.denominator_flagged);
    }
  }
  SECTION("near-zero denominators are flagged") {
    const Scm scm = load_scm_json(R"json({
      "name": "rare-treatment",
      "variables": [
        {"name": "X", "domain": {"discrete": 2}},
        {"name": "Y", "domain": {"discrete": 2}}
      ],
      "exogenous": [
        {"name": "Ux", "marginal": {"type": "bernoulli", "p": 0.0005}},
        {"name": "Uy", "marginal": {"type": "bernoulli", "p": 0.4}}
      ],
      "mechanisms": [
        {"target": "X", "expr": "Ux"},
        {"target": "Y", "expr": "cond(X - 0.5, 1 - Uy, Uy)"}
      ]
    })json");
    const QueryResult result =
        query_value(scm, nullptr, QueryKind::kEtt, scm.endo_index("X"), scm.endo_index("Y"),
                    2000, 7);
    CHECK(result.denominator_flagged);
  }
}
