#pragma once

#include <string>
#include <vector>

#include "exom/tensor.hpp"

namespace exom {

enum class Activation { kTanh, kRelu, kIdentity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation: " + s);
}

inline void xavier_init(Param& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows + p.value.cols));
  for (double& x : p.value.v) x = rng.uniform(-limit, limit);
}

// Multilayer perceptron with optional input masking: the mask row multiplies
// the input before the first affine map, so masked coordinates contribute
// exactly zero to every output and carry exactly zero input gradient.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, int in, int out, int hidden, int hidden_layers, Activation act)
      : in_(in), out_(out), act_(act) {
    int width_in = in;
    for (int l = 0; l < hidden_layers; ++l) {
      weights_.emplace_back(name + ".w" + std::to_string(l), hidden, width_in);
      biases_.emplace_back(name + ".b" + std::to_string(l), 1, hidden);
      width_in = hidden;
    }
    weights_.emplace_back(name + ".w" + std::to_string(hidden_layers), out, width_in);
    biases_.emplace_back(name + ".b" + std::to_string(hidden_layers), 1, out);
  }

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  void init(Rng& rng) {
    for (auto& w : weights_) xavier_init(w, rng);
    for (auto& b : biases_) b.value.fill(0.0);
  }

  Tape::Id forward(Tape& tape, Tape::Id x) const {
    if (tape.value(x).cols != in_) throw ShapeMismatchError("mlp input width mismatch");
    Tape::Id h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = tape.affine(h, const_cast<Param&>(weights_[l]), const_cast<Param&>(biases_[l]));
      if (l + 1 < weights_.size()) {
        switch (act_) {
          case Activation::kTanh: h = tape.tanh_(h); break;
          case Activation::kRelu: h = tape.relu(h); break;
          case Activation::kIdentity: break;
        }
      }
    }
    return h;
  }

  Tape::Id forward_masked(Tape& tape, Tape::Id x, const Tensor& mask_row) const {
    return forward(tape, tape.cmul_row(x, mask_row));
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (auto& w : weights_) out.push_back(&w);
    for (auto& b : biases_) out.push_back(&b);
    return out;
  }

 private:
  int in_ = 0;
  int out_ = 0;
  Activation act_ = Activation::kTanh;
  std::vector<Param> weights_;
  std::vector<Param> biases_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// AdamW with decoupled weight decay.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::vector<Param*> params, AdamWConfig config)
      : params_(std::move(params)), config_(config) {
    for (Param* p : params_) {
      m_.emplace_back(p->value.rows, p->value.cols, 0.0);
      v_.emplace_back(p->value.rows, p->value.cols, 0.0);
    }
  }

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  long step_count() const { return step_; }

  void zero_grad() {
    for (Param* p : params_) p->zero_grad();
  }

  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Param& p = *params_[k];
      for (std::size_t i = 0; i < p.value.v.size(); ++i) {
        const double g = p.grad.v[i];
        m_[k].v[i] = config_.beta1 * m_[k].v[i] + (1.0 - config_.beta1) * g;
        v_[k].v[i] = config_.beta2 * v_[k].v[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = m_[k].v[i] / bc1;
        const double vhat = v_[k].v[i] / bc2;
        p.value.v[i] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) +
                                      config_.weight_decay * p.value.v[i]);
      }
    }
  }

  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  std::vector<Tensor>& mutable_first_moments() { return m_; }
  std::vector<Tensor>& mutable_second_moments() { return v_; }
  void set_step_count(long s) { step_ = s; }

 private:
  std::vector<Param*> params_;
  AdamWConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long step_ = 0;
};

// Reduce-on-plateau: after `patience` consecutive non-improving epochs the
// next one triggers a single lr *= factor.
class PlateauScheduler {
 public:
  PlateauScheduler() = default;
  PlateauScheduler(int patience, double factor) : patience_(patience), factor_(factor) {}

  // Returns the multiplier applied this epoch (1.0 or factor).
  double observe(double metric) {
    if (metric < best_) {
      best_ = metric;
      bad_epochs_ = 0;
      return 1.0;
    }
    ++bad_epochs_;
    if (bad_epochs_ > patience_) {
      bad_epochs_ = 0;
      return factor_;
    }
    return 1.0;
  }

 private:
  int patience_ = 5;
  double factor_ = 0.5;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace exom
