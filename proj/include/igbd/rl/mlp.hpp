#pragma once

#include <vector>

#include <json.hpp>

#include "igbd/util/random.hpp"

namespace igbd::rl {

// Fully connected network with tanh hidden layers and a linear output.
// All weights and biases live in one flat vector, layer by layer, each
// layer as a row-major (out x in) weight block followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  // Weights ~ N(0, 1/fan_in), scaled by output_gain on the last layer;
  // biases zero.
  Mlp(std::vector<int> sizes, Rng& rng, double output_gain = 1.0);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  std::size_t num_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Activations per layer, input first, output last.
  struct Tape {
    std::vector<std::vector<double>> act;
  };

  std::vector<double> forward(const std::vector<double>& x) const;
  std::vector<double> forward(const std::vector<double>& x, Tape& tape) const;
  // Adds dL/dparams to grad (sized num_params()) for one sample given
  // dL/doutput.
  void backward(const Tape& tape, const std::vector<double>& grad_out, std::vector<double>& grad) const;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
  }
  void build_offsets();

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;

  friend nlohmann::json to_json(const Mlp& m);
  friend Mlp mlp_from_json(const nlohmann::json& j);
};

// {"sizes": [...], "layers": [{"rows", "cols", "weight": row-major, "bias"}]}
nlohmann::json to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);

// Adam on a flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_, b1_, b2_, eps_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace igbd::rl
