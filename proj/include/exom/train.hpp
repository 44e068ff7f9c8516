#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "exom/events.hpp"
#include "exom/nn.hpp"
#include "exom/proposal.hpp"

namespace exom {

struct TrainConfig {
  int epochs = 200;
  int dataset_size = 16384;
  int batch_size = 256;
  ProcessSpec process;
  ModelConfig model;
  AdamWConfig optim;
  int plateau_patience = 5;
  double plateau_factor = 0.5;
  std::uint64_t seed = 0;
  double cube_side = 0.02;       // validation event size on continuous coordinates
  int val_events = 256;
  int val_samples = 256;
  int validate_every = 1;        // 0 disables per-epoch validation
  double fr_threshold = 0.01;
  double max_skip_fraction = 0.01;
  int calibration_samples = 4096;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1 || dataset_size < batch_size || dataset_size % batch_size != 0)
      throw ConfigError("dataset_size must be a positive multiple of batch_size");
  }
};

struct TraceRow {
  int epoch = 0;
  double objective = 0.0;  // mean negative conditional log-likelihood
  double val_esp = std::numeric_limits<double>::quiet_NaN();
  double val_fr = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  std::string to_csv() const {
    std::ostringstream os;
    os << "epoch,objective,val_esp,val_fr,lr\n";
    for (const auto& r : rows) {
      os << r.epoch << "," << r.objective << "," << r.val_esp << "," << r.val_fr << "," << r.lr
         << "\n";
    }
    return os.str();
  }
};

struct ValidationResult {
  double esp = 0.0;
  double fr = 0.0;
  std::vector<double> etas;
};

namespace detail {

inline std::string shape_key(const CtfVariableSet& vars) {
  std::ostringstream os;
  for (const auto& g : vars.groups) {
    os << "|y";
    for (int v : g.observed) os << "," << v;
    os << ";x";
    for (int v : g.intervened) os << "," << v;
  }
  return os.str();
}

// Masks depend only on the group shapes (the boundary is graphical), so they
// are cached per state shape.
class MaskCache {
 public:
  const GroupMasks* get(const Scm& scm, const CtfVariableSet& vars, const ModelConfig& config) {
    if (!config.masks_enabled) return nullptr;
    const std::string key = shape_key(vars);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, boundary_masks(scm, vars, config.cut)).first;
    }
    return &it->second;
  }

 private:
  std::map<std::string, GroupMasks> cache_;
};

inline Standardization calibrate(const Scm& scm, int samples, Rng& rng) {
  Standardization stats;
  std::vector<RunningStats> endo(static_cast<std::size_t>(scm.endo_count()));
  for (int s = 0; s < samples; ++s) {
    const auto u = scm.exo_dist().sample(rng);
    const auto v = scm.forward(u);
    for (int i = 0; i < scm.endo_count(); ++i) endo[static_cast<std::size_t>(i)].add(v[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < scm.endo_count(); ++i) {
    stats.endo.push_back(scm.endo_var(i).domain.discrete
                             ? MeanStd{}
                             : endo[static_cast<std::size_t>(i)].finish());
  }
  for (int j = 0; j < scm.exo_count(); ++j) {
    const Marginal& m = scm.exo_dist().marginal(static_cast<std::size_t>(j));
    MeanStd ms;
    switch (m.type) {
      case Marginal::Type::kNormal:
        ms = {m.a, m.b};
        break;
      case Marginal::Type::kUniform:
        ms = {0.5 * (m.a + m.b), (m.b - m.a) / std::sqrt(12.0)};
        break;
      default:
        ms = {};  // discrete coordinates are not standardized
        break;
    }
    stats.exo.push_back(ms);
  }
  return stats;
}

struct Batch {
  CtfVariableSet vars;
  std::vector<Tensor> observed_values;  // per group [B×|Y_i|]
  Tensor u;                             // [B×|U|]
};

inline Batch draw_batch(const Scm& scm, const ScpState& state, int batch_size, Rng& rng) {
  Batch batch;
  batch.vars = state.variables;
  batch.u = Tensor(batch_size, scm.exo_count());
  std::vector<std::vector<double>> us;
  us.reserve(static_cast<std::size_t>(batch_size));
  for (int r = 0; r < batch_size; ++r) {
    auto u = scm.exo_dist().sample(rng);
    for (int j = 0; j < scm.exo_count(); ++j) batch.u.at(r, j) = u[static_cast<std::size_t>(j)];
    us.push_back(std::move(u));
  }
  for (const auto& g : state.variables.groups) {
    std::vector<std::pair<int, double>> pins;
    for (std::size_t t = 0; t < g.intervened.size(); ++t) {
      pins.emplace_back(g.intervened[t], g.intervened_values[t]);
    }
    const Intervention intervention = Intervention::of(std::move(pins));
    Tensor values(batch_size, static_cast<int>(g.observed.size()));
    for (int r = 0; r < batch_size; ++r) {
      const auto response = scm.potential_response(intervention, us[static_cast<std::size_t>(r)]);
      for (std::size_t c = 0; c < g.observed.size(); ++c) {
        values.at(r, static_cast<int>(c)) = response[static_cast<std::size_t>(g.observed[c])];
      }
    }
    batch.observed_values.push_back(std::move(values));
  }
  return batch;
}

}  // namespace detail

// Effective-sample proportion and failure rate of the proposal over events
// drawn from the evaluation distribution (state sampler plus a fresh u).
inline ValidationResult validate(const ConditionalDensityModel& model, const Scm& scm,
                                 const ProcessSpec& process, int n_events,
                                 int n_samples_per_event, double threshold, double cube_side,
                                 Rng& rng) {
  if (n_events < 1 || n_samples_per_event < 1) throw ConfigError("validation sizes must be >= 1");
  detail::MaskCache mask_cache;
  ValidationResult result;
  for (int e = 0; e < n_events; ++e) {
    const ScpState state = sample_state(scm, process, rng);
    const CtfEvent event = event_from_state(state, scm, EventKind::kCube, cube_side, rng);
    const GroupMasks* masks = mask_cache.get(scm, event.variables, model.config());
    const ProposalParams params =
        model.condition(event.variables, event.centers(), masks).tile(n_samples_per_event);
    const Tensor samples = model.sample_q(params, rng);
    int hits = 0;
    std::vector<double> u_row(static_cast<std::size_t>(scm.exo_count()));
    for (int r = 0; r < n_samples_per_event; ++r) {
      for (int j = 0; j < scm.exo_count(); ++j) u_row[static_cast<std::size_t>(j)] = samples.at(r, j);
      if (event_membership(event, scm, u_row)) ++hits;
    }
    result.etas.push_back(static_cast<double>(hits) / static_cast<double>(n_samples_per_event));
  }
  double esp = 0.0;
  int failures = 0;
  for (double eta : result.etas) {
    esp += eta;
    if (eta <= threshold) ++failures;
  }
  result.esp = esp / static_cast<double>(result.etas.size());
  result.fr = static_cast<double>(failures) / static_cast<double>(result.etas.size());
  return result;
}

struct TrainResult {
  ConditionalDensityModel model;
  TrainTrace trace;
  nlohmann::json checkpoint;  // model + optimizer + rng state + config
  int skipped_steps = 0;
};

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return nlohmann::json{{"epochs", cfg.epochs},
                        {"dataset_size", cfg.dataset_size},
                        {"batch_size", cfg.batch_size},
                        {"process", cfg.process.to_string()},
                        {"seed", cfg.seed},
                        {"lr", cfg.optim.lr},
                        {"weight_decay", cfg.optim.weight_decay},
                        {"plateau_patience", cfg.plateau_patience},
                        {"plateau_factor", cfg.plateau_factor},
                        {"cube_side", cfg.cube_side},
                        {"fr_threshold", cfg.fr_threshold}};
}

// One pass of the conditional-likelihood objective: draw a state, draw a
// batch of exogenous units, push them through the submodels, and maximize
// log q(u | y*) over the resulting pairs.
inline TrainResult train_exom(const Scm& scm, const TrainConfig& cfg) {
  cfg.validate();
  ConditionalDensityModel model(scm, cfg.model);
  Rng init_rng = Rng::substream(cfg.seed, "init");
  model.init(init_rng);
  Rng calib_rng = Rng::substream(cfg.seed, "calibration");
  model.set_standardization(detail::calibrate(scm, cfg.calibration_samples, calib_rng));

  AdamW optimizer(model.params(), cfg.optim);
  PlateauScheduler scheduler(cfg.plateau_patience, cfg.plateau_factor);
  detail::MaskCache mask_cache;

  Rng data_rng = Rng::substream(cfg.seed, "data");
  Rng val_rng = Rng::substream(cfg.seed, "validation");

  const int steps_per_epoch = cfg.dataset_size / cfg.batch_size;
  TrainResult result{std::move(model), {}, {}, 0};
  int total_steps = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double objective_sum = 0.0;
    int counted_steps = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      ++total_steps;
      const ScpState state = sample_state(scm, cfg.process, data_rng);
      const detail::Batch batch = detail::draw_batch(scm, state, cfg.batch_size, data_rng);
      const GroupMasks* masks = mask_cache.get(scm, batch.vars, cfg.model);

      Tape tape;
      const auto encoded = result.model.encode_groups(batch.vars, batch.observed_values);
      std::vector<Tape::Id> inputs;
      for (const auto& rows : encoded) inputs.push_back(tape.constant(rows));
      const ConditionedBatch cb = result.model.condition_on_tape(tape, inputs, masks);
      const Tape::Id lq = result.model.log_q_on_tape(tape, cb, batch.u);
      const Tape::Id loss = tape.neg(tape.mean_all(lq));
      const double loss_value = tape.value(loss).v[0];
      if (!std::isfinite(loss_value)) {
        ++result.skipped_steps;
        if (static_cast<double>(result.skipped_steps) >
            cfg.max_skip_fraction * static_cast<double>(cfg.epochs * steps_per_epoch)) {
          throw NonFiniteLossError("non-finite loss in epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(step) + " (state " +
                                   detail::shape_key(batch.vars) + "); skip budget exhausted");
        }
        continue;
      }
      optimizer.zero_grad();
      tape.backward(loss);

      // Masking contract spot check on the first step of each epoch: the loss
      // gradient of every value slot outside the union of boundary masks (and
      // intervened slots) must vanish identically.
      if (masks && step == 0) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          const Tensor& g = tape.grad(inputs[i]);
          for (int v = 0; v < scm.endo_count(); ++v) {
            bool in_any = false;
            for (int j = 0; j < scm.exo_count(); ++j) {
              if (masks->value_masks[i][static_cast<std::size_t>(j)].at(0, v) != 0.0) {
                in_any = true;
                break;
              }
            }
            if (in_any) continue;
            for (int r = 0; r < g.rows; ++r) {
              if (g.at(r, v) != 0.0)
                throw NonFiniteLossError("masking contract violated at epoch " +
                                         std::to_string(epoch));
            }
          }
        }
      }
      optimizer.step();
      objective_sum += loss_value;
      ++counted_steps;
    }

    TraceRow row;
    row.epoch = epoch;
    row.objective = counted_steps > 0 ? objective_sum / counted_steps
                                      : std::numeric_limits<double>::quiet_NaN();
    if (cfg.validate_every > 0 && (epoch % cfg.validate_every == 0 || epoch + 1 == cfg.epochs)) {
      Rng epoch_val_rng = val_rng.fork(static_cast<std::uint64_t>(epoch));
      const ValidationResult val =
          validate(result.model, scm, cfg.process, cfg.val_events, cfg.val_samples,
                   cfg.fr_threshold, cfg.cube_side, epoch_val_rng);
      row.val_esp = val.esp;
      row.val_fr = val.fr;
    }
    const double factor = scheduler.observe(row.objective);
    if (factor != 1.0) optimizer.set_lr(optimizer.lr() * factor);
    row.lr = optimizer.lr();
    result.trace.rows.push_back(row);
  }

  result.checkpoint = nlohmann::json{{"model", result.model.to_json()},
                                     {"optimizer",
                                      {{"step_count", optimizer.step_count()},
                                       {"lr", optimizer.lr()}}},
                                     {"rng_state", data_rng.state_string()},
                                     {"train_config", train_config_to_json(cfg)}};
  auto& moments = result.checkpoint["optimizer"]["moments"];
  const auto params = result.model.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    moments[params[k]->name] = {{"m", optimizer.first_moments()[k].v},
                                {"v", optimizer.second_moments()[k].v}};
  }
  return result;
}

inline ConditionalDensityModel load_model_checkpoint(const Scm& scm, const nlohmann::json& ckpt) {
  return ConditionalDensityModel::from_json(scm, ckpt.contains("model") ? ckpt.at("model") : ckpt);
}

}  // namespace exom
