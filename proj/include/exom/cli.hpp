#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exom/estimators.hpp"
#include "exom/events.hpp"
#include "exom/manifest.hpp"
#include "exom/train.hpp"
#include "exom/zoo.hpp"

namespace exom::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Scm resolve_scm(const std::string& name, const std::string& file,
                       QueryDefaults* defaults = nullptr) {
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open SCM file " + file);
    std::ostringstream os;
    os << in.rdbuf();
    return load_scm_json(os.str(), defaults);
  }
  return load_zoo_scm(name, defaults);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return nlohmann::json::parse(in);
}

inline std::string join_path(const std::string& out_dir, const std::string& name) {
  const std::filesystem::path p(name);
  if (p.is_absolute()) return name;
  return (std::filesystem::path(out_dir) / p).string();
}

inline void run_parallel(int jobs, int n_tasks, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n_tasks));
  if (jobs == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n_tasks) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Shared trainer for train/compare/ablate.
struct TrainRequest {
  std::string scm_name;
  std::string scm_file;
  HeadKind head = HeadKind::kGmm;
  AggregatorKind aggregator = AggregatorKind::kAttention;
  std::string mask = "endo";  // endo|all|no|off
  std::string process = "bernoulli:k=3,rho1=0.2,rho2=0.75";
  int epochs = 200;
  int dataset_size = 16384;
  int batch_size = 256;
  int hidden = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int val_events = 256;
  int val_samples = 256;
  int validate_every = 1;
  double cube_side = 0.02;
  double fr_threshold = 0.01;
};

inline TrainConfig to_train_config(const TrainRequest& req, const Scm& scm,
                                   const QueryDefaults& defaults) {
  TrainConfig cfg;
  cfg.epochs = req.epochs;
  cfg.dataset_size = req.dataset_size;
  cfg.batch_size = req.batch_size;
  cfg.process = ProcessSpec::parse(req.process);
  if (cfg.process.kind == ProcessSpec::Kind::kQuery) {
    if (defaults.treatment.empty() || defaults.outcome.empty())
      throw ConfigError("query process needs treatment/outcome defaults on the SCM");
    cfg.process.query.treatment = scm.endo_index(defaults.treatment);
    cfg.process.query.outcome = scm.endo_index(defaults.outcome);
  }
  cfg.model.head = req.head;
  cfg.model.aggregator = req.aggregator;
  cfg.model.hidden = req.hidden;
  if (req.mask == "off") {
    cfg.model.masks_enabled = false;
  } else {
    cfg.model.masks_enabled = true;
    cfg.model.cut = req.mask == "all"  ? CutStrategy::kAllCut
                    : req.mask == "no" ? CutStrategy::kNoCut
                                       : CutStrategy::kEndoCut;
    if (req.mask != "all" && req.mask != "no" && req.mask != "endo")
      throw ConfigError("mask must be endo|all|no|off");
  }
  cfg.optim.lr = req.lr;
  cfg.seed = req.seed;
  cfg.val_events = req.val_events;
  cfg.val_samples = req.val_samples;
  cfg.validate_every = req.validate_every;
  cfg.cube_side = req.cube_side;
  cfg.fr_threshold = req.fr_threshold;
  return cfg;
}

inline double eta_for_event(const ConditionalDensityModel& model, const Scm& scm,
                            const CtfEvent& event, int n_samples, Rng& rng) {
  const auto masks = exom::detail::masks_for(&model, scm, event.variables);
  const ProposalParams params =
      model.condition(event.variables, event.centers(), masks ? &*masks : nullptr)
          .tile(n_samples);
  const Tensor samples = model.sample_q(params, rng);
  std::vector<double> row(static_cast<std::size_t>(scm.exo_count()));
  int hits = 0;
  for (int r = 0; r < n_samples; ++r) {
    for (int j = 0; j < scm.exo_count(); ++j) row[static_cast<std::size_t>(j)] = samples.at(r, j);
    if (event_membership(event, scm, row)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

inline std::vector<CtfEvent> draw_events(const Scm& scm, const ProcessSpec& process, int n_events,
                                         double cube_side, Rng& rng) {
  std::vector<CtfEvent> events;
  for (int e = 0; e < n_events; ++e) {
    const ScpState state = sample_state(scm, process, rng);
    events.push_back(event_from_state(state, scm, EventKind::kCube, cube_side, rng));
  }
  return events;
}

inline nlohmann::json report_to_json(const EstimateReport& r) {
  return nlohmann::json{{"p_hat", r.p_hat},       {"eta", r.eta},
                        {"sigma_hat", r.sigma_hat}, {"n", r.n},
                        {"method", r.method},     {"failed", r.failed},
                        {"exceeds_one", r.exceeds_one}};
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_zoo(const std::string& action, const std::string& name,
                   const std::string& dot_causal, const std::string& dot_augmented) {
  if (action == "list") {
    for (const auto& n : zoo_names()) std::cout << n << "\n";
    return 0;
  }
  if (action == "show") {
    const auto& entry = zoo_entry(name);
    std::cout << nlohmann::json::parse(entry.json_text).dump(2) << "\n";
    const Scm scm = load_zoo_scm(name);
    if (!dot_causal.empty()) write_text_file(dot_causal, to_dot_causal(scm));
    if (!dot_augmented.empty())
      write_text_file(dot_augmented, to_dot(augmented_graph(scm), scm, scm.name()));
    return 0;
  }
  throw UsageError("zoo action must be list or show");
}

inline int cmd_boundary(const std::string& scm_name, const std::string& scm_file,
                        const std::string& event_file, const std::string& process_spec,
                        std::uint64_t state_seed, const std::string& cut,
                        const std::string& dot_dir) {
  const Scm scm = detail::resolve_scm(scm_name, scm_file);
  CtfVariableSet vars;
  if (!event_file.empty()) {
    vars = event_from_json(detail::read_json_file(event_file), scm).variables;
  } else {
    Rng rng = Rng::substream(state_seed, "boundary-state");
    vars = sample_state(scm, ProcessSpec::parse(process_spec), rng).variables;
  }
  const CutStrategy strategy = cut == "all"  ? CutStrategy::kAllCut
                               : cut == "no" ? CutStrategy::kNoCut
                                             : CutStrategy::kEndoCut;
  const auto boundaries = counterfactual_markov_boundary(scm, vars, strategy);

  nlohmann::json out;
  out["scm"] = scm.name();
  out["cut"] = to_string(strategy);
  auto& groups = out["groups"] = nlohmann::json::array();
  for (const auto& g : vars.groups) {
    nlohmann::json gj;
    for (int y : g.observed) gj["observed"].push_back(scm.endo_var(y).name);
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      gj["intervened"][scm.endo_var(g.intervened[t]).name] = g.intervened_values[t];
    }
    groups.push_back(gj);
  }
  auto& bj = out["boundaries"];
  for (const auto& mb : boundaries) {
    nlohmann::json entry;
    for (const auto& sub : mb.per_submodel) {
      nlohmann::json names = nlohmann::json::array();
      for (int v : sub) names.push_back(scm.endo_var(v).name);
      entry["per_submodel"].push_back(names);
    }
    entry["union"] = nlohmann::json::array();
    for (int v : mb.union_boundary) entry["union"].push_back(scm.endo_var(v).name);
    bj[scm.exo_var(mb.exo_var).name] = entry;
  }
  std::cout << out.dump(2) << "\n";

  if (!dot_dir.empty()) {
    const AugmentedGraph base = augmented_graph(scm);
    write_text_file(detail::join_path(dot_dir, "causal.dot"), to_dot_causal(scm));
    write_text_file(detail::join_path(dot_dir, "augmented.dot"), to_dot(base, scm, scm.name()));
    for (std::size_t i = 0; i < vars.groups.size(); ++i) {
      std::vector<std::pair<int, double>> pins;
      for (std::size_t t = 0; t < vars.groups[i].intervened.size(); ++t) {
        pins.emplace_back(vars.groups[i].intervened[t], vars.groups[i].intervened_values[t]);
      }
      const auto mutilated = mutilate(base, Intervention::of(std::move(pins)), strategy);
      write_text_file(detail::join_path(dot_dir, "mutilated_" + std::to_string(i) + ".dot"),
                      to_dot(mutilated, scm, scm.name() + " submodel " + std::to_string(i)));
    }
  }
  return 0;
}

inline int cmd_train(const detail::TrainRequest& req, const std::string& out_dir,
                     const std::string& ckpt_name, const std::string& trace_name) {
  QueryDefaults defaults;
  const Scm scm = detail::resolve_scm(req.scm_name, req.scm_file, &defaults);
  const TrainConfig cfg = detail::to_train_config(req, scm, defaults);

  ExperimentManifest manifest;
  manifest.command = "train";
  manifest.config = train_config_to_json(cfg);
  manifest.config["head"] = to_string(req.head);
  manifest.config["aggregator"] = to_string(req.aggregator);
  manifest.config["mask"] = req.mask;
  manifest.seeds = {req.seed};
  manifest.scm_name = scm.name();
  manifest.zoo_hash = hex64(zoo_version_hash());
  const std::string mhash = manifest.manifest_hash();

  TrainResult result = train_exom(scm, cfg);

  nlohmann::json ckpt = result.checkpoint;
  ckpt["manifest_hash"] = mhash;
  emit_artifact(manifest, detail::join_path(out_dir, ckpt_name), ckpt.dump());
  std::string trace_csv = "# manifest_hash=" + mhash + "\n" + result.trace.to_csv();
  emit_artifact(manifest, detail::join_path(out_dir, trace_name), trace_csv);
  write_text_file(detail::join_path(out_dir, "train_manifest.json"), manifest.to_json().dump(2));

  const TraceRow& last = result.trace.rows.back();
  std::cout << nlohmann::json{{"scm", scm.name()},
                              {"epochs", cfg.epochs},
                              {"final_objective", last.objective},
                              {"final_val_esp", last.val_esp},
                              {"final_val_fr", last.val_fr},
                              {"skipped_steps", result.skipped_steps},
                              {"checkpoint", detail::join_path(out_dir, ckpt_name)}}
                   .dump(2)
            << "\n";
  return 0;
}

inline int cmd_estimate(const std::string& ckpt_file, const std::string& event_file,
                        const std::string& method, int n, double guard_eps, std::uint64_t seed,
                        int ceis_iters, int ceis_samples, double fr_threshold,
                        const std::string& scm_name, const std::string& scm_file,
                        const std::string& out_path, const std::string& out_dir) {
  const nlohmann::json event_json = detail::read_json_file(event_file);
  std::string resolved_name = scm_name;
  if (resolved_name.empty() && scm_file.empty()) {
    resolved_name = event_json.value("scm", "");
    if (resolved_name.empty()) throw ConfigError("event file names no SCM; pass --scm");
  }
  const Scm scm = detail::resolve_scm(resolved_name, scm_file);
  const CtfEvent event = event_from_json(event_json, scm);

  std::optional<ConditionalDensityModel> model;
  if (method == "exom" || method == "exom-mis") {
    if (ckpt_file.empty()) throw ConfigError("--ckpt is required for method " + method);
    model = load_model_checkpoint(scm, detail::read_json_file(ckpt_file));
  }

  EstimateReport report;
  if (method == "exom") {
    report = estimate_is(&*model, scm, event, n, GuardConfig{guard_eps}, seed, fr_threshold);
  } else if (method == "exom-mis") {
    report = estimate_mis(&*model, scm, event, n, GuardConfig{guard_eps}, seed, fr_threshold);
  } else if (method == "rs") {
    report = estimate_rs(scm, event, n, seed, fr_threshold);
  } else if (method == "ceis") {
    report = estimate_ceis(scm, event, ceis_iters, ceis_samples, seed, n,
                           GuardConfig{guard_eps}, 10, fr_threshold);
  } else {
    throw UsageError("method must be exom|exom-mis|rs|ceis");
  }

  nlohmann::json out = detail::report_to_json(report);
  out["scm"] = scm.name();
  out["event"] = event_to_json(event, scm);
  if (!out_path.empty()) {
    ExperimentManifest manifest;
    manifest.command = "estimate";
    manifest.config = {{"method", method}, {"n", n}, {"guard", guard_eps}, {"event", event_json}};
    manifest.seeds = {seed};
    manifest.scm_name = scm.name();
    manifest.zoo_hash = hex64(zoo_version_hash());
    out["manifest_hash"] = manifest.manifest_hash();
    emit_artifact(manifest, detail::join_path(out_dir, out_path), out.dump(2));
    write_text_file(detail::join_path(out_dir, "estimate_manifest.json"),
                    manifest.to_json().dump(2));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

inline int cmd_query(const std::string& scm_name, const std::string& scm_file,
                     const std::string& ckpt_file, const std::string& kind_name,
                     std::string treatment, std::string outcome, int n, std::uint64_t seed,
                     double guard_eps) {
  QueryDefaults defaults;
  const Scm scm = detail::resolve_scm(scm_name, scm_file, &defaults);
  if (treatment.empty()) treatment = defaults.treatment;
  if (outcome.empty()) outcome = defaults.outcome;
  if (treatment.empty() || outcome.empty())
    throw ConfigError("no treatment/outcome given and the SCM declares no defaults");
  const QueryKind kind = query_kind_from_string(kind_name);

  std::optional<ConditionalDensityModel> model;
  if (!ckpt_file.empty()) model = load_model_checkpoint(scm, detail::read_json_file(ckpt_file));

  const QueryResult result =
      query_value(scm, model ? &*model : nullptr, kind, scm.endo_index(treatment),
                  scm.endo_index(outcome), n, seed, GuardConfig{guard_eps});

  nlohmann::json out{{"scm", scm.name()},
                     {"query", kind_name},
                     {"treatment", treatment},
                     {"outcome", outcome},
                     {"value", result.value},
                     {"sigma", result.sigma},
                     {"ci95", {result.value - 1.96 * result.sigma, result.value + 1.96 * result.sigma}},
                     {"denominator_flagged", result.denominator_flagged},
                     {"method", model ? "exom-mis" : "rs"}};
  auto& terms = out["terms"] = nlohmann::json::array();
  for (const auto& t : result.terms) {
    nlohmann::json tj = detail::report_to_json(t.report);
    tj["label"] = t.label;
    tj["coefficient"] = t.coefficient;
    terms.push_back(tj);
  }
  if (result.denominator) {
    out["denominator"] = detail::report_to_json(result.denominator->report);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct CompareOptions {
  std::vector<std::string> scms;
  std::vector<std::string> methods;
  int seeds = 5;
  int epochs = 200;
  int events = 1024;
  int n_samples = 1000;
  std::string process = "bernoulli:k=3,rho1=0.2,rho2=0.75";
  std::string mask = "endo";
  double cube_side = 0.02;
  double fr_threshold = 0.01;
  int jobs = 1;
  int dataset_size = 16384;
  int batch_size = 256;
  std::uint64_t seed_base = 0;
};

inline int cmd_compare(const CompareOptions& opt, const std::string& out_dir) {
  struct Task {
    std::string scm;
    std::string method;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (const auto& scm : opt.scms) {
    for (const auto& method : opt.methods) {
      for (int s = 0; s < opt.seeds; ++s) tasks.push_back({scm, method, s});
    }
  }
  struct Row {
    std::string scm, method;
    int seed;
    double esp, fr;
  };
  std::vector<Row> rows(tasks.size());

  detail::run_parallel(opt.jobs, static_cast<int>(tasks.size()), [&](int idx) {
    const Task& task = tasks[static_cast<std::size_t>(idx)];
    QueryDefaults defaults;
    const Scm scm = detail::resolve_scm(task.scm, "", &defaults);
    const std::uint64_t seed = opt.seed_base + static_cast<std::uint64_t>(task.seed_index);
    const ProcessSpec process = [&] {
      ProcessSpec p = ProcessSpec::parse(opt.process);
      if (p.kind == ProcessSpec::Kind::kQuery) {
        p.query.treatment = scm.endo_index(defaults.treatment);
        p.query.outcome = scm.endo_index(defaults.outcome);
      }
      return p;
    }();
    // The same per-seed events for every method.
    Rng event_rng = Rng::substream(seed, "compare-events-" + task.scm);
    const auto events = detail::draw_events(scm, process, opt.events, opt.cube_side, event_rng);

    std::vector<double> etas;
    etas.reserve(events.size());
    Rng sample_rng = Rng::substream(seed, "compare-sampling-" + task.scm + "-" + task.method);
    if (task.method == "exom-gmm" || task.method == "exom-maf") {
      detail::TrainRequest req;
      req.scm_name = task.scm;
      req.head = task.method == "exom-gmm" ? HeadKind::kGmm : HeadKind::kMaf;
      req.mask = opt.mask;
      req.process = opt.process;
      req.epochs = opt.epochs;
      req.dataset_size = opt.dataset_size;
      req.batch_size = opt.batch_size;
      req.seed = seed;
      req.validate_every = 0;
      req.cube_side = opt.cube_side;
      req.fr_threshold = opt.fr_threshold;
      TrainConfig cfg = detail::to_train_config(req, scm, defaults);
      const TrainResult result = train_exom(scm, cfg);
      for (const auto& event : events) {
        etas.push_back(detail::eta_for_event(result.model, scm, event, opt.n_samples, sample_rng));
      }
    } else if (task.method == "rs") {
      for (const auto& event : events) {
        etas.push_back(
            estimate_rs(scm, event, opt.n_samples, sample_rng.next_u64(), opt.fr_threshold).eta);
      }
    } else if (task.method == "ceis") {
      // Equal total sample budget with the trained methods, split per event.
      const long total_budget = static_cast<long>(opt.epochs) * opt.dataset_size;
      const long n_events = std::max<long>(static_cast<long>(events.size()), 1);
      const int per_event = static_cast<int>(std::max<long>(256, total_budget / n_events));
      const int iters = 10;
      for (const auto& event : events) {
        etas.push_back(estimate_ceis(scm, event, iters, std::max(32, per_event / iters),
                                     sample_rng.next_u64(), opt.n_samples, GuardConfig{0.05}, 10,
                                     opt.fr_threshold)
                           .eta);
      }
    } else {
      throw UsageError("method must be exom-gmm|exom-maf|rs|ceis");
    }
    double esp = 0.0;
    int failures = 0;
    for (double eta : etas) {
      esp += eta;
      if (eta <= opt.fr_threshold) ++failures;
    }
    rows[static_cast<std::size_t>(idx)] = {task.scm, task.method, task.seed_index,
                                           esp / static_cast<double>(etas.size()),
                                           static_cast<double>(failures) /
                                               static_cast<double>(etas.size())};
  });

  ExperimentManifest manifest;
  manifest.command = "compare";
  manifest.config = {{"scms", opt.scms},       {"methods", opt.methods},
                     {"seeds", opt.seeds},     {"epochs", opt.epochs},
                     {"events", opt.events},   {"n_samples", opt.n_samples},
                     {"process", opt.process}, {"mask", opt.mask},
                     {"fr_threshold", opt.fr_threshold}};
  for (int s = 0; s < opt.seeds; ++s) manifest.seeds.push_back(opt.seed_base + s);
  manifest.scm_name = opt.scms.size() == 1 ? opt.scms[0] : "multiple";
  manifest.zoo_hash = hex64(zoo_version_hash());
  const std::string mhash = manifest.manifest_hash();

  std::ostringstream csv;
  csv << "# manifest_hash=" << mhash << "\n";
  csv << "scm,method,seed,metric,value\n";
  for (const auto& r : rows) {
    csv << r.scm << "," << r.method << "," << r.seed << ",esp," << r.esp << "\n";
    csv << r.scm << "," << r.method << "," << r.seed << ",fr," << r.fr << "\n";
  }
  emit_artifact(manifest, detail::join_path(out_dir, "compare_results.csv"), csv.str());

  std::ostringstream summary;
  summary << "# manifest_hash=" << mhash << "\n";
  summary << "scm,method,metric,mean,ci95\n";
  for (const auto& scm : opt.scms) {
    for (const auto& method : opt.methods) {
      for (const std::string metric : {"esp", "fr"}) {
        std::vector<double> vals;
        for (const auto& r : rows) {
          if (r.scm == scm && r.method == method) vals.push_back(metric == "esp" ? r.esp : r.fr);
        }
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
        const double ci = 1.96 * sd / std::sqrt(static_cast<double>(vals.size()));
        summary << scm << "," << method << "," << metric << "," << mean << "," << ci << "\n";
      }
    }
  }
  emit_artifact(manifest, detail::join_path(out_dir, "compare_summary.csv"), summary.str());
  write_text_file(detail::join_path(out_dir, "compare_manifest.json"), manifest.to_json().dump(2));
  std::cout << summary.str();
  return 0;
}

struct AblateOptions {
  std::string scm;
  std::vector<std::string> aggregators = {"concat", "sum", "wsum", "attention"};
  std::vector<std::string> masks = {"off", "endo", "all", "no"};
  int seeds = 5;
  int epochs = 200;
  int events = 256;
  int n_samples = 256;
  std::string process = "bernoulli:k=3,rho1=0.2,rho2=0.75";
  std::string head = "gmm";
  int jobs = 1;
  int dataset_size = 16384;
  int batch_size = 256;
  double cube_side = 0.02;
  double fr_threshold = 0.01;
  std::uint64_t seed_base = 0;
};

inline int cmd_ablate(const AblateOptions& opt, const std::string& out_dir) {
  struct Task {
    std::string aggregator, mask;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (const auto& agg : opt.aggregators) {
    for (const auto& mask : opt.masks) {
      for (int s = 0; s < opt.seeds; ++s) tasks.push_back({agg, mask, s});
    }
  }
  struct Row {
    std::string aggregator, mask;
    int seed;
    double esp, fr;
  };
  std::vector<Row> rows(tasks.size());

  detail::run_parallel(opt.jobs, static_cast<int>(tasks.size()), [&](int idx) {
    const Task& task = tasks[static_cast<std::size_t>(idx)];
    QueryDefaults defaults;
    const Scm scm = detail::resolve_scm(opt.scm, "", &defaults);
    const std::uint64_t seed = opt.seed_base + static_cast<std::uint64_t>(task.seed_index);
    detail::TrainRequest req;
    req.scm_name = opt.scm;
    req.head = head_from_string(opt.head);
    req.aggregator = aggregator_from_string(task.aggregator);
    req.mask = task.mask;
    req.process = opt.process;
    req.epochs = opt.epochs;
    req.dataset_size = opt.dataset_size;
    req.batch_size = opt.batch_size;
    req.seed = seed;
    req.validate_every = 0;
    req.cube_side = opt.cube_side;
    req.fr_threshold = opt.fr_threshold;
    TrainConfig cfg = detail::to_train_config(req, scm, defaults);
    const TrainResult result = train_exom(scm, cfg);
    Rng event_rng = Rng::substream(seed, "ablate-events-" + opt.scm);
    const auto events =
        detail::draw_events(scm, cfg.process, opt.events, opt.cube_side, event_rng);
    Rng sample_rng = Rng::substream(seed, "ablate-sampling-" + task.aggregator + "-" + task.mask);
    double esp = 0.0;
    int failures = 0;
    for (const auto& event : events) {
      const double eta =
          detail::eta_for_event(result.model, scm, event, opt.n_samples, sample_rng);
      esp += eta;
      if (eta <= opt.fr_threshold) ++failures;
    }
    rows[static_cast<std::size_t>(idx)] = {task.aggregator, task.mask, task.seed_index,
                                           esp / static_cast<double>(events.size()),
                                           static_cast<double>(failures) /
                                               static_cast<double>(events.size())};
  });

  ExperimentManifest manifest;
  manifest.command = "ablate";
  manifest.config = {{"scm", opt.scm},           {"aggregators", opt.aggregators},
                     {"masks", opt.masks},       {"seeds", opt.seeds},
                     {"epochs", opt.epochs},     {"events", opt.events},
                     {"n_samples", opt.n_samples}, {"head", opt.head},
                     {"process", opt.process}};
  for (int s = 0; s < opt.seeds; ++s) manifest.seeds.push_back(opt.seed_base + s);
  manifest.scm_name = opt.scm;
  manifest.zoo_hash = hex64(zoo_version_hash());
  const std::string mhash = manifest.manifest_hash();

  std::ostringstream csv;
  csv << "# manifest_hash=" << mhash << "\n";
  csv << "scm,aggregator,mask,seed,metric,value\n";
  for (const auto& r : rows) {
    csv << opt.scm << "," << r.aggregator << "," << r.mask << "," << r.seed << ",esp," << r.esp
        << "\n";
    csv << opt.scm << "," << r.aggregator << "," << r.mask << "," << r.seed << ",fr," << r.fr
        << "\n";
  }
  emit_artifact(manifest, detail::join_path(out_dir, "ablate_results.csv"), csv.str());

  // Improvement rows: per aggregator and mask strategy, mean ESP gain over
  // the unmasked baseline of the same aggregator and seed.
  std::ostringstream improvement;
  improvement << "# manifest_hash=" << mhash << "\n";
  improvement << "scm,aggregator,mask,seed,esp_improvement\n";
  for (const auto& r : rows) {
    if (r.mask == "off") continue;
    for (const auto& base : rows) {
      if (base.mask == "off" && base.aggregator == r.aggregator && base.seed == r.seed) {
        improvement << opt.scm << "," << r.aggregator << "," << r.mask << "," << r.seed << ","
                    << (r.esp - base.esp) << "\n";
      }
    }
  }
  emit_artifact(manifest, detail::join_path(out_dir, "ablate_improvement.csv"), improvement.str());
  write_text_file(detail::join_path(out_dir, "ablate_manifest.json"), manifest.to_json().dump(2));
  std::cout << "wrote " << detail::join_path(out_dir, "ablate_results.csv") << "\n";
  return 0;
}

inline int cmd_verify(const std::string& manifest_path) {
  const ExperimentManifest manifest =
      ExperimentManifest::from_json(detail::read_json_file(manifest_path));
  const auto issues = verify_manifest(manifest);
  if (issues.empty()) {
    std::cout << nlohmann::json{{"ok", true}, {"outputs", manifest.outputs.size()}}.dump() << "\n";
    return 0;
  }
  nlohmann::json out{{"ok", false}};
  for (const auto& issue : issues) {
    out["issues"].push_back({{"path", issue.path}, {"problem", issue.problem}});
  }
  std::cout << out.dump(2) << "\n";
  return 1;
}

// ---------------------------------------------------------------------------

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"counterfactual probability estimation on structural causal models"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file mirroring the flags");

  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "output directory")->envname("EXOM_OUT_DIR");
  int jobs = 1;
  app.add_option("--jobs", jobs, "worker threads for multi-run subcommands");

  // zoo
  auto* zoo = app.add_subcommand("zoo", "list or show built-in SCMs");
  std::string zoo_action, zoo_name, dot_causal, dot_augmented;
  zoo->add_option("action", zoo_action, "list | show")->required();
  zoo->add_option("name", zoo_name, "SCM name (for show)");
  zoo->add_option("--dot-causal", dot_causal, "write causal graph DOT file");
  zoo->add_option("--dot-augmented", dot_augmented, "write augmented graph DOT file");

  // boundary
  auto* boundary = app.add_subcommand("boundary", "counterfactual Markov boundaries as JSON");
  std::string b_scm, b_scm_file, b_event, b_process = "bernoulli:k=3,rho1=0.2,rho2=0.75";
  std::string b_cut = "endo", b_dot_dir;
  std::uint64_t b_state_seed = 0;
  boundary->add_option("--scm", b_scm, "zoo SCM name");
  boundary->add_option("--scm-file", b_scm_file, "custom SCM JSON file");
  boundary->add_option("--event", b_event, "event JSON file defining the variable set");
  boundary->add_option("--process", b_process, "process spec used to sample a state");
  boundary->add_option("--state-seed", b_state_seed, "seed for the sampled state");
  boundary->add_option("--cut", b_cut, "endo | all | no")->check(CLI::IsMember({"endo", "all", "no"}));
  boundary->add_option("--dot-dir", b_dot_dir, "directory for DOT exports");

  // train
  auto* train = app.add_subcommand("train", "train a conditional proposal");
  detail::TrainRequest treq;
  std::string t_head = "gmm", t_agg = "attention", t_ckpt = "ckpt.json", t_trace = "trace.csv";
  train->add_option("--scm", treq.scm_name, "zoo SCM name");
  train->add_option("--scm-file", treq.scm_file, "custom SCM JSON file");
  train->add_option("--head", t_head, "gmm | maf")->check(CLI::IsMember({"gmm", "maf"}));
  train->add_option("--aggregator", t_agg, "concat | sum | wsum | attention")
      ->check(CLI::IsMember({"concat", "sum", "wsum", "attention"}));
  train->add_option("--mask", treq.mask, "endo | all | no | off")
      ->check(CLI::IsMember({"endo", "all", "no", "off"}));
  train->add_option("--process", treq.process, "bernoulli:k=K[,rho1=..,rho2=..] | query:KIND");
  train->add_option("--epochs", treq.epochs, "training epochs");
  train->add_option("--dataset", treq.dataset_size, "samples per epoch");
  train->add_option("--batch", treq.batch_size, "batch size");
  train->add_option("--hidden", treq.hidden, "hidden layer width");
  train->add_option("--lr", treq.lr, "initial learning rate");
  train->add_option("--seed", treq.seed, "training seed");
  train->add_option("--val-events", treq.val_events, "validation events per epoch");
  train->add_option("--val-samples", treq.val_samples, "samples per validation event");
  train->add_option("--validate-every", treq.validate_every, "validation cadence (0 = final only)");
  train->add_option("--cube-side", treq.cube_side, "validation cube side length");
  train->add_option("--fr-threshold", treq.fr_threshold, "failure-rate threshold m");
  train->add_option("--out", t_ckpt, "checkpoint filename");
  train->add_option("--trace", t_trace, "trace CSV filename");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate one counterfactual probability");
  std::string e_ckpt, e_event, e_method = "exom", e_scm, e_scm_file, e_out;
  int e_n = 1000, e_ceis_iters = 10, e_ceis_samples = 1000;
  double e_guard = 0.05, e_fr = 0.01;
  std::uint64_t e_seed = 0;
  estimate->add_option("--ckpt", e_ckpt, "model checkpoint");
  estimate->add_option("--event", e_event, "event JSON file")->required();
  estimate->add_option("--method", e_method, "exom | exom-mis | rs | ceis");
  estimate->add_option("--n", e_n, "sample count");
  estimate->add_option("--guard", e_guard, "guard mixture epsilon");
  estimate->add_option("--seed", e_seed, "sampling seed");
  estimate->add_option("--ceis-iters", e_ceis_iters, "cross-entropy iterations");
  estimate->add_option("--ceis-samples", e_ceis_samples, "samples per cross-entropy iteration");
  estimate->add_option("--fr-threshold", e_fr, "failure threshold m");
  estimate->add_option("--scm", e_scm, "zoo SCM name (defaults to the event file's)");
  estimate->add_option("--scm-file", e_scm_file, "custom SCM JSON file");
  estimate->add_option("--out", e_out, "write the report JSON here");

  // query
  auto* query = app.add_subcommand("query", "estimate a causal query");
  std::string q_scm, q_scm_file, q_ckpt, q_kind = "ate", q_treatment, q_outcome;
  int q_n = 1000;
  double q_guard = 0.05;
  std::uint64_t q_seed = 0;
  query->add_option("--scm", q_scm, "zoo SCM name");
  query->add_option("--scm-file", q_scm_file, "custom SCM JSON file");
  query->add_option("--ckpt", q_ckpt, "model checkpoint (omit for rejection sampling)");
  query->add_option("--kind", q_kind, "ate | ett | nde | ctfde")
      ->check(CLI::IsMember({"ate", "ett", "nde", "ctfde"}));
  query->add_option("--treatment", q_treatment, "treatment variable (defaults from the SCM)");
  query->add_option("--outcome", q_outcome, "outcome variable (defaults from the SCM)");
  query->add_option("--n", q_n, "samples per probability term");
  query->add_option("--seed", q_seed, "sampling seed");
  query->add_option("--guard", q_guard, "guard mixture epsilon");

  // compare
  auto* compare = app.add_subcommand("compare", "methods x SCMs table of ESP/FR across seeds");
  CompareOptions copt;
  std::string c_scms = "simpson-nlin", c_methods = "exom-gmm,rs";
  compare->add_option("--scms", c_scms, "comma-separated zoo SCM names");
  compare->add_option("--methods", c_methods, "comma-separated: exom-gmm,exom-maf,rs,ceis");
  compare->add_option("--seeds", copt.seeds, "number of seeds");
  compare->add_option("--epochs", copt.epochs, "training epochs per run");
  compare->add_option("--events", copt.events, "evaluation events per run");
  compare->add_option("--n-samples", copt.n_samples, "samples per event");
  compare->add_option("--process", copt.process, "process spec");
  compare->add_option("--mask", copt.mask, "endo | all | no | off");
  compare->add_option("--dataset", copt.dataset_size, "samples per epoch");
  compare->add_option("--batch", copt.batch_size, "batch size");
  compare->add_option("--cube-side", copt.cube_side, "event cube side length");
  compare->add_option("--fr-threshold", copt.fr_threshold, "failure threshold m");
  compare->add_option("--seed-base", copt.seed_base, "first seed");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "aggregator x mask sweep");
  AblateOptions aopt;
  std::string a_aggs = "concat,sum,wsum,attention", a_masks = "off,endo,all,no";
  ablate->add_option("--scm", aopt.scm, "zoo SCM name")->required();
  ablate->add_option("--aggregators", a_aggs, "comma-separated aggregators");
  ablate->add_option("--masks", a_masks, "comma-separated mask strategies");
  ablate->add_option("--seeds", aopt.seeds, "number of seeds");
  ablate->add_option("--epochs", aopt.epochs, "training epochs per run");
  ablate->add_option("--events", aopt.events, "evaluation events per run");
  ablate->add_option("--n-samples", aopt.n_samples, "samples per event");
  ablate->add_option("--process", aopt.process, "process spec");
  ablate->add_option("--head", aopt.head, "gmm | maf");
  ablate->add_option("--dataset", aopt.dataset_size, "samples per epoch");
  ablate->add_option("--batch", aopt.batch_size, "batch size");
  ablate->add_option("--cube-side", aopt.cube_side, "event cube side length");
  ablate->add_option("--fr-threshold", aopt.fr_threshold, "failure threshold m");
  ablate->add_option("--seed-base", aopt.seed_base, "first seed");

  // verify
  auto* verify = app.add_subcommand("verify", "re-check a manifest's artifacts");
  std::string v_manifest;
  verify->add_option("manifest", v_manifest, "manifest JSON path")->required();

  std::vector<char*> argv;
  std::vector<std::string> owned = std::move(args);
  std::string program = "exom";
  argv.push_back(program.data());
  for (auto& a : owned) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*zoo) return cmd_zoo(zoo_action, zoo_name, dot_causal, dot_augmented);
    if (*boundary)
      return cmd_boundary(b_scm, b_scm_file, b_event, b_process, b_state_seed, b_cut, b_dot_dir);
    if (*train) {
      treq.head = head_from_string(t_head);
      treq.aggregator = aggregator_from_string(t_agg);
      return cmd_train(treq, out_dir, t_ckpt, t_trace);
    }
    if (*estimate)
      return cmd_estimate(e_ckpt, e_event, e_method, e_n, e_guard, e_seed, e_ceis_iters,
                          e_ceis_samples, e_fr, e_scm, e_scm_file, e_out, out_dir);
    if (*query)
      return cmd_query(q_scm, q_scm_file, q_ckpt, q_kind, q_treatment, q_outcome, q_n, q_seed,
                       q_guard);
    if (*compare) {
      const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream is(s);
        std::string item;
        while (std::getline(is, item, ',')) {
          if (!item.empty()) out.push_back(item);
        }
        return out;
      };
      copt.scms = split(c_scms);
      copt.methods = split(c_methods);
      copt.jobs = jobs;
      return cmd_compare(copt, out_dir);
    }
    if (*ablate) {
      const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream is(s);
        std::string item;
        while (std::getline(is, item, ',')) {
          if (!item.empty()) out.push_back(item);
        }
        return out;
      };
      aopt.aggregators = split(a_aggs);
      aopt.masks = split(a_masks);
      aopt.jobs = jobs;
      return cmd_ablate(aopt, out_dir);
    }
    if (*verify) return cmd_verify(v_manifest);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "runtime"}}.dump() << "\n";
    return 1;
  }
}

}  // namespace exom::cli
