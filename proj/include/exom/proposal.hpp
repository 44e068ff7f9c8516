#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exom/ctf_types.hpp"
#include "exom/graph.hpp"
#include "exom/nn.hpp"
#include "exom/scm.hpp"
#include "exom/tensor.hpp"

namespace exom {

struct TooManyGroupsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class HeadKind { kGmm, kMaf };
enum class AggregatorKind { kConcatenation, kSummation, kWeightedSummation, kAttention };

inline const char* to_string(HeadKind h) { return h == HeadKind::kGmm ? "gmm" : "maf"; }
inline HeadKind head_from_string(const std::string& s) {
  if (s == "gmm") return HeadKind::kGmm;
  if (s == "maf") return HeadKind::kMaf;
  throw ConfigError("unknown density head: " + s);
}

inline const char* to_string(AggregatorKind a) {
  switch (a) {
    case AggregatorKind::kConcatenation: return "concat";
    case AggregatorKind::kSummation: return "sum";
    case AggregatorKind::kWeightedSummation: return "wsum";
    case AggregatorKind::kAttention: return "attention";
  }
  return "?";
}
inline AggregatorKind aggregator_from_string(const std::string& s) {
  if (s == "concat") return AggregatorKind::kConcatenation;
  if (s == "sum") return AggregatorKind::kSummation;
  if (s == "wsum") return AggregatorKind::kWeightedSummation;
  if (s == "attention") return AggregatorKind::kAttention;
  throw ConfigError("unknown aggregator: " + s);
}

struct ModelConfig {
  HeadKind head = HeadKind::kGmm;
  AggregatorKind aggregator = AggregatorKind::kAttention;
  int gmm_components = 10;
  bool gmm_mask_scales = true;  // when off, scales are inferred from the unmasked aggregate
  int maf_transforms = 5;
  int maf_context_dim = 8;
  int hidden = 64;
  int hidden_layers = 2;
  int encoding_dim = 64;
  int max_groups = 8;           // concatenation aggregator only
  bool masks_enabled = false;
  CutStrategy cut = CutStrategy::kEndoCut;
  double scale_floor = 1e-6;
};

// Per-variable affine standardization of conditioning values and continuous
// exogenous targets. Identity until calibrated.
struct Standardization {
  std::vector<MeanStd> endo;
  std::vector<MeanStd> exo;
};

// Conditioning-network output for a batch: one parameter slice per exogenous
// variable, plus the shared mixture logits for the GMM head.
struct ConditionedBatch {
  int batch = 0;
  std::vector<Tape::Id> theta;     // per exogenous variable
  Tape::Id mixture_logits = -1;    // GMM with continuous coordinates only
};

// Same thing as plain values, detached from any tape.
struct ProposalParams {
  int batch = 0;
  std::vector<Tensor> theta;
  Tensor mixture_logits;

  ProposalParams tile(int n) const {
    ProposalParams out;
    out.batch = n;
    for (const auto& t : theta) out.theta.push_back(tile_rows(t, n));
    if (mixture_logits.cols > 0) out.mixture_logits = tile_rows(mixture_logits, n);
    return out;
  }
};

// Boundary-derived input masks: one |V|-wide row per (group, exogenous)
// pair. Value slots survive for boundary members and intervened variables;
// the two indicator blocks always pass.
struct GroupMasks {
  std::vector<std::vector<Tensor>> value_masks;  // [group][exo] -> [1×|V|]
};

inline GroupMasks boundary_masks(const Scm& scm, const CtfVariableSet& vars, CutStrategy cut) {
  const auto boundaries = counterfactual_markov_boundary(scm, vars, cut);
  GroupMasks masks;
  masks.value_masks.resize(vars.groups.size());
  for (std::size_t i = 0; i < vars.groups.size(); ++i) {
    masks.value_masks[i].reserve(static_cast<std::size_t>(scm.exo_count()));
    for (int j = 0; j < scm.exo_count(); ++j) {
      Tensor m(1, scm.endo_count(), 0.0);
      for (int v : boundaries[static_cast<std::size_t>(j)].per_submodel[i]) m.at(0, v) = 1.0;
      for (int x : vars.groups[i].intervened) m.at(0, x) = 1.0;
      masks.value_masks[i].push_back(std::move(m));
    }
  }
  return masks;
}

// Conditional proposal distribution Q_{U|y*}: a set encoder over per-submodel
// conditioning vectors, a permutation-invariant aggregator, and a density
// head (conditional GMM or conditional masked autoregressive flow, with
// categorical heads for discrete exogenous coordinates).
class ConditionalDensityModel {
 public:
  ConditionalDensityModel(const Scm& scm, ModelConfig config)
      : config_(config),
        scm_name_(scm.name()),
        scm_hash_(scm.structure_hash()),
        endo_count_(scm.endo_count()),
        exo_count_(scm.exo_count()) {
    stats_.endo.assign(static_cast<std::size_t>(endo_count_), MeanStd{});
    stats_.exo.assign(static_cast<std::size_t>(exo_count_), MeanStd{});
    for (int j = 0; j < exo_count_; ++j) {
      const Marginal& m = scm.exo_dist().marginal(static_cast<std::size_t>(j));
      if (m.discrete()) {
        discrete_cardinality_.push_back(m.cardinality());
      } else {
        discrete_cardinality_.push_back(0);
        continuous_coords_.push_back(j);
      }
    }
    build_networks();
  }

  const ModelConfig& config() const { return config_; }
  const std::string& scm_name() const { return scm_name_; }
  std::uint64_t scm_hash() const { return scm_hash_; }
  int endo_count() const { return endo_count_; }
  int exo_count() const { return exo_count_; }
  int conditioning_width() const { return 3 * endo_count_; }
  const Standardization& standardization() const { return stats_; }
  void set_standardization(Standardization s) { stats_ = std::move(s); }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    auto append = [&out](std::vector<Param*> ps) {
      out.insert(out.end(), ps.begin(), ps.end());
    };
    append(encoder_.params());
    if (config_.aggregator == AggregatorKind::kWeightedSummation) append(weight_net_.params());
    if (config_.aggregator == AggregatorKind::kAttention) append(score_net_.params());
    for (auto& h : head_mean_) append(h.params());
    for (auto& h : head_scale_) append(h.params());
    for (auto& h : head_context_) append(h.params());
    for (auto& h : head_categorical_) append(h.params());
    if (has_mixture_logits()) append(head_logits_.params());
    for (auto& row : maf_conditioners_) {
      for (auto& c : row) append(c.params());
    }
    return out;
  }

  void init(Rng& rng) {
    encoder_.init(rng);
    if (config_.aggregator == AggregatorKind::kWeightedSummation) weight_net_.init(rng);
    if (config_.aggregator == AggregatorKind::kAttention) score_net_.init(rng);
    for (auto& h : head_mean_) h.init(rng);
    for (auto& h : head_scale_) h.init(rng);
    for (auto& h : head_context_) h.init(rng);
    for (auto& h : head_categorical_) h.init(rng);
    if (has_mixture_logits()) head_logits_.init(rng);
    for (auto& row : maf_conditioners_) {
      for (auto& c : row) c.init(rng);
    }
  }

  // --- encoding ---------------------------------------------------------

  // c = pi(y ∪ x; Y ∪ X) ⊕ omega(Y) ⊕ omega(X), one vector per group; value
  // slots are standardized, indicator blocks are binary.
  std::vector<std::vector<double>> encode_event(const CtfVariableSet& vars,
                                                const std::vector<std::vector<double>>& values) const {
    if (values.size() != vars.groups.size()) throw ShapeMismatchError("group value count mismatch");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < vars.groups.size(); ++i) {
      const CtfGroup& g = vars.groups[i];
      if (values[i].size() != g.observed.size())
        throw ShapeMismatchError("group width mismatch in group " + std::to_string(i));
      std::vector<double> c(static_cast<std::size_t>(conditioning_width()), 0.0);
      for (std::size_t t = 0; t < g.observed.size(); ++t) {
        const int v = g.observed[t];
        c[static_cast<std::size_t>(v)] = standardize_endo(v, values[i][t]);
        c[static_cast<std::size_t>(endo_count_ + v)] = 1.0;
      }
      for (std::size_t t = 0; t < g.intervened.size(); ++t) {
        const int x = g.intervened[t];
        c[static_cast<std::size_t>(x)] = standardize_endo(x, g.intervened_values[t]);
        c[static_cast<std::size_t>(2 * endo_count_ + x)] = 1.0;
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  // Batched encoding: per group, observed values as [B×|Y_i|] rows.
  std::vector<Tensor> encode_groups(const CtfVariableSet& vars,
                                    const std::vector<Tensor>& observed_values) const {
    if (observed_values.size() != vars.groups.size())
      throw ShapeMismatchError("group value count mismatch");
    const int batch = observed_values.empty() ? 0 : observed_values[0].rows;
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < vars.groups.size(); ++i) {
      const CtfGroup& g = vars.groups[i];
      const Tensor& vals = observed_values[i];
      if (vals.cols != static_cast<int>(g.observed.size()) || vals.rows != batch)
        throw ShapeMismatchError("group value shape mismatch");
      Tensor c(batch, conditioning_width(), 0.0);
      for (int r = 0; r < batch; ++r) {
        for (std::size_t t = 0; t < g.observed.size(); ++t) {
          const int v = g.observed[t];
          c.at(r, v) = standardize_endo(v, vals.at(r, static_cast<int>(t)));
          c.at(r, endo_count_ + v) = 1.0;
        }
        for (std::size_t t = 0; t < g.intervened.size(); ++t) {
          const int x = g.intervened[t];
          c.at(r, x) = standardize_endo(x, g.intervened_values[t]);
          c.at(r, 2 * endo_count_ + x) = 1.0;
        }
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  // --- conditioning -------------------------------------------------------

  // theta_{y*,j} = g({h_j(c_i, m_ij)}): each exogenous variable's parameter
  // slice sees only its masked view of every group, aggregated across groups.
  ConditionedBatch condition_on_tape(Tape& tape, const std::vector<Tape::Id>& group_inputs,
                                     const GroupMasks* masks) const {
    if (group_inputs.empty()) throw ShapeMismatchError("conditioning needs >= 1 group");
    const int k = static_cast<int>(group_inputs.size());
    if (config_.aggregator == AggregatorKind::kConcatenation && k > config_.max_groups)
      throw TooManyGroupsError("concatenation aggregator supports at most " +
                               std::to_string(config_.max_groups) + " groups");
    if (masks && static_cast<int>(masks->value_masks.size()) != k)
      throw ShapeMismatchError("mask group count mismatch");

    ConditionedBatch out;
    out.batch = tape.value(group_inputs[0]).rows;
    AggregateCache cache;

    // Shared heads (mixture logits, unmasked scales) read the union-masked
    // aggregate: the union over exogenous variables of the per-variable
    // boundary masks. Every value slot some theta slice may legitimately use
    // passes; slots outside every boundary stay invisible to the whole loss.
    GroupMasks union_masks;
    const GroupMasks* shared_masks = nullptr;
    if (masks) {
      union_masks.value_masks.resize(masks->value_masks.size());
      for (std::size_t i = 0; i < masks->value_masks.size(); ++i) {
        Tensor u = masks->value_masks[i][0];
        for (std::size_t j = 1; j < masks->value_masks[i].size(); ++j) {
          for (int v = 0; v < u.cols; ++v) {
            u.at(0, v) = std::max(u.at(0, v), masks->value_masks[i][j].at(0, v));
          }
        }
        union_masks.value_masks[i].push_back(std::move(u));
      }
      shared_masks = &union_masks;
    }
    const Tape::Id shared =
        shared_masks ? aggregate(tape, group_inputs, shared_masks, 0, &cache)
                     : aggregate(tape, group_inputs, nullptr, -1, &cache);
    if (has_mixture_logits()) {
      out.mixture_logits = head_logits_.forward(tape, shared);
    }

    for (int j = 0; j < exo_count_; ++j) {
      const Tape::Id agg =
          masks ? aggregate(tape, group_inputs, masks, j, &cache) : shared;
      Tape::Id theta_j;
      if (discrete_cardinality_[static_cast<std::size_t>(j)] > 0) {
        theta_j = head_categorical_[categorical_slot_[static_cast<std::size_t>(j)]].forward(tape, agg);
      } else if (config_.head == HeadKind::kGmm) {
        const std::size_t slot = continuous_slot_[static_cast<std::size_t>(j)];
        const Tape::Id means = head_mean_[slot].forward(tape, agg);
        const Tape::Id scale_src =
            (config_.gmm_mask_scales || !masks) ? agg : shared;
        const Tape::Id scales = head_scale_[slot].forward(tape, scale_src);
        theta_j = tape.concat_cols({means, scales});
      } else {
        theta_j = head_context_[continuous_slot_[static_cast<std::size_t>(j)]].forward(tape, agg);
      }
      out.theta.push_back(theta_j);
    }
    return out;
  }

  ProposalParams condition(const CtfVariableSet& vars,
                           const std::vector<std::vector<double>>& values,
                           const GroupMasks* masks) const {
    Tape tape;
    const auto rows = encode_event(vars, values);
    std::vector<Tape::Id> inputs;
    for (const auto& r : rows) inputs.push_back(tape.constant(Tensor::row_vector(r)));
    const ConditionedBatch cb = condition_on_tape(tape, inputs, masks);
    return detach(tape, cb);
  }

  // Batched variant: one conditioned row per batch row, for event samplers
  // that vary y* per sample.
  ProposalParams condition_batch(const CtfVariableSet& vars,
                                 const std::vector<Tensor>& observed_values,
                                 const GroupMasks* masks) const {
    Tape tape;
    const auto rows = encode_groups(vars, observed_values);
    std::vector<Tape::Id> inputs;
    for (auto& r : rows) inputs.push_back(tape.constant(std::move(r)));
    const ConditionedBatch cb = condition_on_tape(tape, inputs, masks);
    return detach(tape, cb);
  }

  // --- density ------------------------------------------------------------

  // log q(u | y*) per batch row; u on the original exogenous scale, one row
  // per conditioned batch row.
  Tape::Id log_q_on_tape(Tape& tape, const ConditionedBatch& cb, const Tensor& u) const {
    if (u.rows != cb.batch || u.cols != exo_count_)
      throw ShapeMismatchError("exogenous batch shape mismatch");
    std::vector<Tape::Id> parts;

    if (!continuous_coords_.empty()) {
      parts.push_back(config_.head == HeadKind::kGmm ? gmm_log_q(tape, cb, u)
                                                     : maf_log_q(tape, cb, u));
    }
    for (int j = 0; j < exo_count_; ++j) {
      const int card = discrete_cardinality_[static_cast<std::size_t>(j)];
      if (card == 0) continue;
      std::vector<int> idx(static_cast<std::size_t>(u.rows));
      for (int r = 0; r < u.rows; ++r) {
        const double v = u.at(r, j);
        const double rounded = std::round(v);
        if (rounded != v || rounded < 0.0 || rounded >= static_cast<double>(card))
          throw DomainMismatchError("discrete exogenous value off-support on tape path");
        idx[static_cast<std::size_t>(r)] = static_cast<int>(rounded);
      }
      const Tape::Id lsm = tape.log_softmax_cols(cb.theta[static_cast<std::size_t>(j)]);
      parts.push_back(tape.gather_cols(lsm, std::move(idx)));
    }
    Tape::Id total = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) total = tape.add(total, parts[i]);
    return total;
  }

  // Numeric wrapper: -inf for off-support rows, no tape exposed.
  std::vector<double> log_q(const ProposalParams& params, const Tensor& u) const {
    std::vector<double> out(static_cast<std::size_t>(u.rows), 0.0);
    std::vector<bool> valid(static_cast<std::size_t>(u.rows), true);
    Tensor patched = u;
    for (int r = 0; r < u.rows; ++r) {
      for (int j = 0; j < exo_count_; ++j) {
        const int card = discrete_cardinality_[static_cast<std::size_t>(j)];
        if (card == 0) continue;
        const double v = u.at(r, j);
        if (std::round(v) != v || v < 0.0 || v >= static_cast<double>(card)) {
          valid[static_cast<std::size_t>(r)] = false;
          patched.at(r, j) = 0.0;
        }
      }
    }
    Tape tape;
    const ConditionedBatch cb = params_on_tape(tape, params);
    const Tape::Id lq = log_q_on_tape(tape, cb, patched);
    for (int r = 0; r < u.rows; ++r) {
      out[static_cast<std::size_t>(r)] =
          valid[static_cast<std::size_t>(r)] ? tape.value(lq).at(r, 0) : kNegInf;
    }
    return out;
  }

  // One draw per conditioned row, on the original exogenous scale.
  Tensor sample_q(const ProposalParams& params, Rng& rng) const {
    const int batch = params.batch;
    Tensor u(batch, exo_count_, 0.0);
    if (!continuous_coords_.empty()) {
      if (config_.head == HeadKind::kGmm) {
        gmm_sample(params, rng, u);
      } else {
        maf_sample(params, rng, u);
      }
    }
    for (int j = 0; j < exo_count_; ++j) {
      const int card = discrete_cardinality_[static_cast<std::size_t>(j)];
      if (card == 0) continue;
      const Tensor& logits = params.theta[static_cast<std::size_t>(j)];
      std::vector<double> w(static_cast<std::size_t>(card));
      for (int r = 0; r < batch; ++r) {
        double m = kNegInf;
        for (int c = 0; c < card; ++c) m = std::max(m, logits.at(r, c));
        for (int c = 0; c < card; ++c) w[static_cast<std::size_t>(c)] = std::exp(logits.at(r, c) - m);
        u.at(r, j) = static_cast<double>(rng.categorical(w));
      }
    }
    return u;
  }

  // --- checkpointing --------------------------------------------------------

  nlohmann::json to_json() {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["scm_name"] = scm_name_;
    j["scm_hash"] = hex64(scm_hash_);
    j["config"] = {{"head", std::string(to_string(config_.head))},
                   {"aggregator", std::string(to_string(config_.aggregator))},
                   {"gmm_components", config_.gmm_components},
                   {"gmm_mask_scales", config_.gmm_mask_scales},
                   {"maf_transforms", config_.maf_transforms},
                   {"maf_context_dim", config_.maf_context_dim},
                   {"hidden", config_.hidden},
                   {"hidden_layers", config_.hidden_layers},
                   {"encoding_dim", config_.encoding_dim},
                   {"max_groups", config_.max_groups},
                   {"masks_enabled", config_.masks_enabled},
                   {"cut", std::string(to_string(config_.cut))},
                   {"scale_floor", config_.scale_floor}};
    auto& stats = j["standardization"];
    for (const auto& s : stats_.endo) stats["endo"].push_back({{"mean", s.mean}, {"std", s.std}});
    for (const auto& s : stats_.exo) stats["exo"].push_back({{"mean", s.mean}, {"std", s.std}});
    auto& params_json = j["params"];
    for (Param* p : params()) {
      params_json[p->name] = {{"rows", p->value.rows}, {"cols", p->value.cols}, {"data", p->value.v}};
    }
    return j;
  }

  static ConditionalDensityModel from_json(const Scm& scm, const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointVersion)
      throw ConfigError("checkpoint format version mismatch");
    if (j.at("scm_hash").get<std::string>() != hex64(scm.structure_hash()))
      throw ConfigError("checkpoint was trained against a different SCM (" +
                        j.at("scm_name").get<std::string>() + ")");
    const auto& cj = j.at("config");
    ModelConfig config;
    config.head = head_from_string(cj.at("head").get<std::string>());
    config.aggregator = aggregator_from_string(cj.at("aggregator").get<std::string>());
    config.gmm_components = cj.at("gmm_components").get<int>();
    config.gmm_mask_scales = cj.at("gmm_mask_scales").get<bool>();
    config.maf_transforms = cj.at("maf_transforms").get<int>();
    config.maf_context_dim = cj.at("maf_context_dim").get<int>();
    config.hidden = cj.at("hidden").get<int>();
    config.hidden_layers = cj.at("hidden_layers").get<int>();
    config.encoding_dim = cj.at("encoding_dim").get<int>();
    config.max_groups = cj.at("max_groups").get<int>();
    config.masks_enabled = cj.at("masks_enabled").get<bool>();
    const std::string cut = cj.at("cut").get<std::string>();
    config.cut = cut == "all"  ? CutStrategy::kAllCut
                 : cut == "no" ? CutStrategy::kNoCut
                               : CutStrategy::kEndoCut;
    config.scale_floor = cj.at("scale_floor").get<double>();

    ConditionalDensityModel model(scm, config);
    auto& stats = model.stats_;
    stats.endo.clear();
    for (const auto& s : j.at("standardization").at("endo")) {
      stats.endo.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
    }
    stats.exo.clear();
    for (const auto& s : j.at("standardization").at("exo")) {
      stats.exo.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
    }
    const auto& params_json = j.at("params");
    for (Param* p : model.params()) {
      const auto& pj = params_json.at(p->name);
      if (pj.at("rows").get<int>() != p->value.rows || pj.at("cols").get<int>() != p->value.cols)
        throw ConfigError("checkpoint parameter shape mismatch: " + p->name);
      p->value.v = pj.at("data").get<std::vector<double>>();
    }
    return model;
  }

  ConditionedBatch params_on_tape(Tape& tape, const ProposalParams& params) const {
    ConditionedBatch cb;
    cb.batch = params.batch;
    for (const auto& t : params.theta) cb.theta.push_back(tape.constant(t));
    if (params.mixture_logits.cols > 0) cb.mixture_logits = tape.constant(params.mixture_logits);
    return cb;
  }

  ProposalParams detach(const Tape& tape, const ConditionedBatch& cb) const {
    ProposalParams params;
    params.batch = cb.batch;
    for (Tape::Id id : cb.theta) params.theta.push_back(tape.value(id));
    if (cb.mixture_logits >= 0) params.mixture_logits = tape.value(cb.mixture_logits);
    return params;
  }

  const std::vector<int>& continuous_coords() const { return continuous_coords_; }
  int discrete_cardinality(int j) const { return discrete_cardinality_[static_cast<std::size_t>(j)]; }

  // Density-direction flow transform (standardized input space -> base space)
  // and its inverse, exposed for round-trip checks. Columns follow
  // continuous_coords() order.
  Tensor maf_forward(const ProposalParams& params, const Tensor& u) const {
    Tape tape;
    const int batch = params.batch;
    const int d = static_cast<int>(continuous_coords_.size());
    const int c = config_.maf_context_dim;
    std::vector<Tape::Id> z(static_cast<std::size_t>(d));
    std::vector<Tape::Id> theta(static_cast<std::size_t>(exo_count_), -1);
    for (int p = 0; p < d; ++p) {
      const int j = continuous_coords_[static_cast<std::size_t>(p)];
      const MeanStd& s = stats_.exo[static_cast<std::size_t>(j)];
      Tensor col(batch, 1);
      for (int r = 0; r < batch; ++r) col.at(r, 0) = (u.at(r, j) - s.mean) / s.std;
      z[static_cast<std::size_t>(p)] = tape.constant(std::move(col));
      theta[static_cast<std::size_t>(j)] = tape.constant(params.theta[static_cast<std::size_t>(j)]);
    }
    for (int t = 0; t < config_.maf_transforms; ++t) {
      const auto order = maf_order(t);
      std::vector<Tape::Id> z_next(static_cast<std::size_t>(d));
      for (int pos = 0; pos < d; ++pos) {
        const int p = order[static_cast<std::size_t>(pos)];
        const int j = continuous_coords_[static_cast<std::size_t>(p)];
        std::vector<Tape::Id> inputs;
        for (int q = 0; q < pos; ++q)
          inputs.push_back(z[static_cast<std::size_t>(order[static_cast<std::size_t>(q)])]);
        inputs.push_back(tape.slice_cols(theta[static_cast<std::size_t>(j)], t * c, c));
        const Tape::Id ss = maf_conditioners_[static_cast<std::size_t>(t)][static_cast<std::size_t>(pos)]
                                .forward(tape, tape.concat_cols(inputs));
        const Tape::Id shift = tape.select_col(ss, 0);
        const Tape::Id log_scale = clamp_log_scale(tape, tape.select_col(ss, 1));
        z_next[static_cast<std::size_t>(p)] =
            tape.mul(tape.sub(z[static_cast<std::size_t>(p)], shift), tape.exp_(tape.neg(log_scale)));
      }
      z = std::move(z_next);
    }
    Tensor out(batch, d);
    for (int p = 0; p < d; ++p) {
      for (int r = 0; r < batch; ++r) out.at(r, p) = tape.value(z[static_cast<std::size_t>(p)]).at(r, 0);
    }
    return out;
  }

  Tensor maf_inverse(const ProposalParams& params, const Tensor& z_base) const {
    const int batch = params.batch;
    const int d = static_cast<int>(continuous_coords_.size());
    const int c = config_.maf_context_dim;
    Tensor z = z_base;
    for (int t = config_.maf_transforms - 1; t >= 0; --t) {
      const auto order = maf_order(t);
      Tensor prev(batch, d, 0.0);
      for (int pos = 0; pos < d; ++pos) {
        const int p = order[static_cast<std::size_t>(pos)];
        const int j = continuous_coords_[static_cast<std::size_t>(p)];
        Tape tape;
        Tensor cond_in(batch, pos + c);
        for (int r = 0; r < batch; ++r) {
          for (int q = 0; q < pos; ++q) {
            cond_in.at(r, q) = prev.at(r, order[static_cast<std::size_t>(q)]);
          }
          const Tensor& theta = params.theta[static_cast<std::size_t>(j)];
          for (int i = 0; i < c; ++i) cond_in.at(r, pos + i) = theta.at(r, t * c + i);
        }
        const Tape::Id out = maf_conditioners_[static_cast<std::size_t>(t)][static_cast<std::size_t>(pos)]
                                 .forward(tape, tape.constant(std::move(cond_in)));
        const Tensor& ss = tape.value(out);
        for (int r = 0; r < batch; ++r) {
          const double shift = ss.at(r, 0);
          const double log_scale = 3.0 * std::tanh(ss.at(r, 1) / 3.0);
          prev.at(r, p) = z.at(r, p) * std::exp(log_scale) + shift;
        }
      }
      z = prev;
    }
    Tensor u(batch, exo_count_, 0.0);
    for (int p = 0; p < d; ++p) {
      const int j = continuous_coords_[static_cast<std::size_t>(p)];
      const MeanStd& s = stats_.exo[static_cast<std::size_t>(j)];
      for (int r = 0; r < batch; ++r) u.at(r, j) = z.at(r, p) * s.std + s.mean;
    }
    return u;
  }

  bool has_mixture_logits() const {
    return config_.head == HeadKind::kGmm && !continuous_coords_.empty();
  }

  double standardize_endo(int v, double value) const {
    const MeanStd& s = stats_.endo[static_cast<std::size_t>(v)];
    return (value - s.mean) / s.std;
  }

  // Lifts a |V|-wide value-slot mask to the full conditioning width; both
  // indicator blocks pass.
  Tensor lift_mask(const Tensor& value_mask) const {
    if (value_mask.cols != endo_count_) throw ShapeMismatchError("mask width must equal |V|");
    Tensor m(1, conditioning_width(), 1.0);
    for (int v = 0; v < endo_count_; ++v) m.at(0, v) = value_mask.at(0, v);
    return m;
  }

 private:
  static constexpr int kCheckpointVersion = 1;

  void build_networks() {
    const int width = conditioning_width();
    encoder_ = Mlp("encoder", width, config_.encoding_dim, config_.hidden, config_.hidden_layers,
                   Activation::kTanh);
    if (config_.aggregator == AggregatorKind::kWeightedSummation) {
      weight_net_ = Mlp("weight_net", config_.encoding_dim, config_.encoding_dim, config_.hidden,
                        config_.hidden_layers, Activation::kTanh);
    }
    if (config_.aggregator == AggregatorKind::kAttention) {
      score_net_ = Mlp("score_net", width, config_.encoding_dim, config_.hidden,
                       config_.hidden_layers, Activation::kTanh);
    }
    const int agg_dim = config_.aggregator == AggregatorKind::kConcatenation
                            ? config_.encoding_dim * config_.max_groups
                            : config_.encoding_dim;

    continuous_slot_.assign(static_cast<std::size_t>(exo_count_), 0);
    categorical_slot_.assign(static_cast<std::size_t>(exo_count_), 0);
    for (int j = 0; j < exo_count_; ++j) {
      const int card = discrete_cardinality_[static_cast<std::size_t>(j)];
      const std::string tag = ".u" + std::to_string(j);
      if (card > 0) {
        categorical_slot_[static_cast<std::size_t>(j)] = head_categorical_.size();
        head_categorical_.emplace_back("head_cat" + tag, agg_dim, card, 0, 0,
                                       Activation::kIdentity);
      } else if (config_.head == HeadKind::kGmm) {
        continuous_slot_[static_cast<std::size_t>(j)] = head_mean_.size();
        head_mean_.emplace_back("head_mean" + tag, agg_dim, config_.gmm_components, 0, 0,
                                Activation::kIdentity);
        head_scale_.emplace_back("head_scale" + tag, agg_dim, config_.gmm_components, 0, 0,
                                 Activation::kIdentity);
      } else {
        continuous_slot_[static_cast<std::size_t>(j)] = head_context_.size();
        head_context_.emplace_back("head_ctx" + tag, agg_dim,
                                   config_.maf_transforms * config_.maf_context_dim, 0, 0,
                                   Activation::kIdentity);
      }
    }
    if (has_mixture_logits()) {
      head_logits_ = Mlp("head_logits", agg_dim, config_.gmm_components, 0, 0,
                         Activation::kIdentity);
    }
    if (config_.head == HeadKind::kMaf && !continuous_coords_.empty()) {
      const int d = static_cast<int>(continuous_coords_.size());
      maf_conditioners_.resize(static_cast<std::size_t>(config_.maf_transforms));
      for (int t = 0; t < config_.maf_transforms; ++t) {
        for (int p = 0; p < d; ++p) {
          maf_conditioners_[static_cast<std::size_t>(t)].emplace_back(
              "maf.t" + std::to_string(t) + ".p" + std::to_string(p),
              p + config_.maf_context_dim, 2, config_.hidden, config_.hidden_layers,
              Activation::kTanh);
        }
      }
    }
  }

  // Coordinate visit order of transform t; alternating direction, as usual
  // for stacked autoregressive transforms.
  std::vector<int> maf_order(int t) const {
    std::vector<int> order(continuous_coords_.size());
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = static_cast<int>(p);
    if (t % 2 == 1) std::reverse(order.begin(), order.end());
    return order;
  }

  // Memo for identical masked views within one conditioning call: distinct
  // exogenous variables often share a boundary mask, so their encoder and
  // score passes coincide.
  struct AggregateCache {
    std::map<std::pair<int, std::string>, Tape::Id> masked_input;
    std::map<Tape::Id, Tape::Id> encoding;
    std::map<Tape::Id, Tape::Id> score;
  };

  Tape::Id aggregate(Tape& tape, const std::vector<Tape::Id>& group_inputs,
                     const GroupMasks* masks, int exo_j, AggregateCache* cache = nullptr) const {
    const int k = static_cast<int>(group_inputs.size());
    std::vector<Tape::Id> masked_inputs;
    masked_inputs.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      if (masks && exo_j >= 0) {
        const Tensor& value_mask =
            masks->value_masks[static_cast<std::size_t>(i)][static_cast<std::size_t>(exo_j)];
        if (cache) {
          std::string key(value_mask.v.size(), '0');
          for (std::size_t b = 0; b < value_mask.v.size(); ++b) {
            if (value_mask.v[b] != 0.0) key[b] = '1';
          }
          auto [it, inserted] = cache->masked_input.try_emplace({i, std::move(key)}, -1);
          if (inserted) {
            it->second =
                tape.cmul_row(group_inputs[static_cast<std::size_t>(i)], lift_mask(value_mask));
          }
          masked_inputs.push_back(it->second);
          continue;
        }
        masked_inputs.push_back(
            tape.cmul_row(group_inputs[static_cast<std::size_t>(i)], lift_mask(value_mask)));
      } else {
        masked_inputs.push_back(group_inputs[static_cast<std::size_t>(i)]);
      }
    }
    std::vector<Tape::Id> encodings;
    encodings.reserve(static_cast<std::size_t>(k));
    for (Tape::Id in : masked_inputs) {
      if (cache) {
        auto [it, inserted] = cache->encoding.try_emplace(in, -1);
        if (inserted) it->second = encoder_.forward(tape, in);
        encodings.push_back(it->second);
      } else {
        encodings.push_back(encoder_.forward(tape, in));
      }
    }

    const auto scored = [&](const Mlp& net, const std::vector<Tape::Id>& ins) {
      std::vector<Tape::Id> scores;
      for (Tape::Id in : ins) {
        if (cache) {
          auto [it, inserted] = cache->score.try_emplace(in, -1);
          if (inserted) it->second = net.forward(tape, in);
          scores.push_back(it->second);
        } else {
          scores.push_back(net.forward(tape, in));
        }
      }
      return scores;
    };
    switch (config_.aggregator) {
      case AggregatorKind::kSummation:
        return tape.sum_list(encodings);
      case AggregatorKind::kWeightedSummation:
        return softmax_weighted_sum(tape, scored(weight_net_, encodings), encodings);
      case AggregatorKind::kAttention:
        return softmax_weighted_sum(tape, scored(score_net_, masked_inputs), encodings);
      case AggregatorKind::kConcatenation: {
        std::vector<Tape::Id> parts = encodings;
        const Tensor zero(tape.value(encodings[0]).rows, config_.encoding_dim, 0.0);
        for (int i = k; i < config_.max_groups; ++i) parts.push_back(tape.constant(zero));
        return tape.concat_cols(parts);
      }
    }
    throw ConfigError("unreachable aggregator");
  }

  // Elementwise softmax over groups, then a weighted order-independent sum of
  // the encodings.
  Tape::Id softmax_weighted_sum(Tape& tape, const std::vector<Tape::Id>& scores,
                                const std::vector<Tape::Id>& encodings) const {
    Tape::Id m = scores[0];
    for (std::size_t i = 1; i < scores.size(); ++i) m = tape.max2(m, scores[i]);
    std::vector<Tape::Id> exps;
    for (Tape::Id s : scores) exps.push_back(tape.exp_(tape.sub(s, m)));
    const Tape::Id denom = tape.sum_list(exps);
    std::vector<Tape::Id> weighted;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      weighted.push_back(tape.mul(tape.div(exps[i], denom), encodings[i]));
    }
    return tape.sum_list(weighted);
  }

  // --- GMM head -------------------------------------------------------------

  Tape::Id gmm_log_q(Tape& tape, const ConditionedBatch& cb, const Tensor& u) const {
    const int K = config_.gmm_components;
    const int batch = cb.batch;
    Tape::Id total_sq = -1;
    Tape::Id total_log_s = -1;
    double log_jacobian = 0.0;
    for (int j : continuous_coords_) {
      const MeanStd& s = stats_.exo[static_cast<std::size_t>(j)];
      log_jacobian -= std::log(s.std);
      Tensor ubar(batch, 1);
      for (int r = 0; r < batch; ++r) ubar.at(r, 0) = (u.at(r, j) - s.mean) / s.std;
      const Tape::Id ubar_id = tape.constant(std::move(ubar));
      const Tape::Id theta = cb.theta[static_cast<std::size_t>(j)];
      const Tape::Id means = tape.slice_cols(theta, 0, K);
      const Tape::Id scales =
          tape.add_scalar(tape.softplus_(tape.slice_cols(theta, K, K)), config_.scale_floor);
      const Tape::Id z = tape.div(tape.sub_bc1(means, ubar_id), scales);
      const Tape::Id sq = tape.square(z);
      const Tape::Id log_s = tape.log_(scales);
      total_sq = total_sq < 0 ? sq : tape.add(total_sq, sq);
      total_log_s = total_log_s < 0 ? log_s : tape.add(total_log_s, log_s);
    }
    const double d = static_cast<double>(continuous_coords_.size());
    Tape::Id comp_lp = tape.sub(tape.scale(total_sq, -0.5), total_log_s);
    comp_lp = tape.add_scalar(comp_lp, -0.5 * d * kLogTwoPi);
    const Tape::Id mix = tape.log_softmax_cols(cb.mixture_logits);
    const Tape::Id joint = tape.add(comp_lp, mix);
    const Tape::Id m = tape.row_max(joint);
    const Tape::Id lse = tape.add(m, tape.log_(tape.row_sum(tape.exp_(tape.sub_bc1(joint, m)))));
    return tape.add_scalar(lse, log_jacobian);
  }

  void gmm_sample(const ProposalParams& params, Rng& rng, Tensor& u) const {
    const int K = config_.gmm_components;
    std::vector<double> w(static_cast<std::size_t>(K));
    for (int r = 0; r < params.batch; ++r) {
      double m = kNegInf;
      for (int c = 0; c < K; ++c) m = std::max(m, params.mixture_logits.at(r, c));
      for (int c = 0; c < K; ++c) {
        w[static_cast<std::size_t>(c)] = std::exp(params.mixture_logits.at(r, c) - m);
      }
      const int comp = rng.categorical(w);
      for (int j : continuous_coords_) {
        const Tensor& theta = params.theta[static_cast<std::size_t>(j)];
        const double mean = theta.at(r, comp);
        const double scale = softplus(theta.at(r, K + comp)) + config_.scale_floor;
        const double ubar = mean + scale * rng.normal();
        const MeanStd& s = stats_.exo[static_cast<std::size_t>(j)];
        u.at(r, j) = ubar * s.std + s.mean;
      }
    }
  }

  // --- MAF head ---------------------------------------------------------------

  // Log-density direction: z^t_j = (z^{t-1}_j - shift) * exp(-scale), with the
  // conditioner fed the previous layer's preceding coordinates plus this
  // coordinate's context slice. The soft clamp keeps log-scales bounded.
  static Tape::Id clamp_log_scale(Tape& tape, Tape::Id a) {
    return tape.scale(tape.tanh_(tape.scale(a, 1.0 / 3.0)), 3.0);
  }

  Tape::Id maf_log_q(Tape& tape, const ConditionedBatch& cb, const Tensor& u) const {
    const int batch = cb.batch;
    const int d = static_cast<int>(continuous_coords_.size());
    const int c = config_.maf_context_dim;
    double log_jacobian = 0.0;
    std::vector<Tape::Id> z(static_cast<std::size_t>(d));
    for (int p = 0; p < d; ++p) {
      const int j = continuous_coords_[static_cast<std::size_t>(p)];
      const MeanStd& s = stats_.exo[static_cast<std::size_t>(j)];
      log_jacobian -= std::log(s.std);
      Tensor col(batch, 1);
      for (int r = 0; r < batch; ++r) col.at(r, 0) = (u.at(r, j) - s.mean) / s.std;
      z[static_cast<std::size_t>(p)] = tape.constant(std::move(col));
    }
    Tape::Id logdet = tape.constant(Tensor(batch, 1, 0.0));
    for (int t = 0; t < config_.maf_transforms; ++t) {
      const auto order = maf_order(t);
      std::vector<Tape::Id> z_next(static_cast<std::size_t>(d));
      for (int pos = 0; pos < d; ++pos) {
        const int p = order[static_cast<std::size_t>(pos)];
        const int j = continuous_coords_[static_cast<std::size_t>(p)];
        std::vector<Tape::Id> inputs;
        for (int q = 0; q < pos; ++q) inputs.push_back(z[static_cast<std::size_t>(order[static_cast<std::size_t>(q)])]);
        inputs.push_back(tape.slice_cols(cb.theta[static_cast<std::size_t>(j)], t * c, c));
        const Tape::Id cond_in = tape.concat_cols(inputs);
        const Tape::Id shift_scale =
            maf_conditioners_[static_cast<std::size_t>(t)][static_cast<std::size_t>(pos)].forward(
                tape, cond_in);
        const Tape::Id shift = tape.select_col(shift_scale, 0);
        const Tape::Id log_scale = clamp_log_scale(tape, tape.select_col(shift_scale, 1));
        z_next[static_cast<std::size_t>(p)] =
            tape.mul(tape.sub(z[static_cast<std::size_t>(p)], shift), tape.exp_(tape.neg(log_scale)));
        logdet = tape.sub(logdet, log_scale);
      }
      z = std::move(z_next);
    }
    Tape::Id base = tape.constant(Tensor(batch, 1, -0.5 * static_cast<double>(d) * kLogTwoPi));
    for (int p = 0; p < d; ++p) {
      base = tape.sub(base, tape.scale(tape.square(z[static_cast<std::size_t>(p)]), 0.5));
    }
    return tape.add_scalar(tape.add(base, logdet), log_jacobian);
  }

  void maf_sample(const ProposalParams& params, Rng& rng, Tensor& u) const {
    const int d = static_cast<int>(continuous_coords_.size());
    Tensor z(params.batch, d);
    for (double& x : z.v) x = rng.normal();
    const Tensor filled = maf_inverse(params, z);
    for (int j : continuous_coords_) {
      for (int r = 0; r < params.batch; ++r) u.at(r, j) = filled.at(r, j);
    }
  }

  ModelConfig config_;
  std::string scm_name_;
  std::uint64_t scm_hash_ = 0;
  int endo_count_ = 0;
  int exo_count_ = 0;
  std::vector<int> discrete_cardinality_;  // 0 for continuous coordinates
  std::vector<int> continuous_coords_;
  std::vector<std::size_t> continuous_slot_;
  std::vector<std::size_t> categorical_slot_;
  Standardization stats_;

  Mlp encoder_;
  Mlp weight_net_;
  Mlp score_net_;
  Mlp head_logits_;
  std::vector<Mlp> head_mean_;
  std::vector<Mlp> head_scale_;
  std::vector<Mlp> head_context_;
  std::vector<Mlp> head_categorical_;
  std::vector<std::vector<Mlp>> maf_conditioners_;  // [transform][position]
};

}  // namespace exom
