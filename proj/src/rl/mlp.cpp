#include "igbd/rl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace igbd::rl {

Mlp::Mlp(std::vector<int> sizes, Rng& rng, double output_gain) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least an input and an output size");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  build_offsets();
  for (int l = 0; l < num_layers(); ++l) {
    const double scale = (l + 1 == num_layers() ? output_gain : 1.0) / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t n = static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
    for (std::size_t k = 0; k < n; ++k) params_[weight_offset(l) + k] = scale * rng.normal();
  }
}

void Mlp::build_offsets() {
  offsets_.clear();
  std::size_t off = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(off, 0.0);
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
  Tape tape;
  return forward(x, tape);
}

std::vector<double> Mlp::forward(const std::vector<double>& x, Tape& tape) const {
  if (static_cast<int>(x.size()) != input_dim()) throw std::invalid_argument("MLP input has the wrong size");
  tape.act.resize(sizes_.size());
  tape.act[0] = x;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const auto& a = tape.act[l];
    auto& z = tape.act[l + 1];
    z.assign(out, 0.0);
    for (int r = 0; r < out; ++r) {
      double s = b[r];
      const double* row = w + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) s += row[c] * a[c];
      z[r] = l + 1 < num_layers() ? std::tanh(s) : s;
    }
  }
  return tape.act.back();
}

void Mlp::backward(const Tape& tape, const std::vector<double>& grad_out, std::vector<double>& grad) const {
  if (static_cast<int>(grad_out.size()) != output_dim()) throw std::invalid_argument("output gradient has the wrong size");
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  std::vector<double> delta = grad_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    if (l + 1 < num_layers()) {
      for (int r = 0; r < out; ++r) delta[r] *= 1.0 - tape.act[l + 1][r] * tape.act[l + 1][r];
    }
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    const auto& a = tape.act[l];
    std::vector<double> prev(in, 0.0);
    for (int r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      const double* row = w + static_cast<std::size_t>(r) * in;
      double* grow = gw + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) {
        grow[c] += d * a[c];
        prev[c] += d * row[c];
      }
    }
    delta = std::move(prev);
  }
}

nlohmann::json to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < m.num_layers(); ++l) {
    const int in = m.sizes_[l], out = m.sizes_[l + 1];
    const auto w0 = m.params_.begin() + static_cast<std::ptrdiff_t>(m.weight_offset(l));
    const auto b0 = m.params_.begin() + static_cast<std::ptrdiff_t>(m.bias_offset(l));
    layers.push_back({{"rows", out},
                      {"cols", in},
                      {"weight", std::vector<double>(w0, w0 + static_cast<std::ptrdiff_t>(in) * out)},
                      {"bias", std::vector<double>(b0, b0 + out)}});
  }
  return {{"sizes", m.sizes_}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  m.sizes_ = j.at("sizes").get<std::vector<int>>();
  if (m.sizes_.size() < 2) throw std::invalid_argument("MLP document needs at least two sizes");
  m.build_offsets();
  const auto& layers = j.at("layers");
  if (static_cast<int>(layers.size()) != m.num_layers()) throw std::invalid_argument("MLP layer count mismatch");
  for (int l = 0; l < m.num_layers(); ++l) {
    const auto& L = layers[l];
    const int in = m.sizes_[l], out = m.sizes_[l + 1];
    if (L.at("rows").get<int>() != out || L.at("cols").get<int>() != in) {
      throw std::invalid_argument("MLP layer shape mismatch");
    }
    const auto w = L.at("weight").get<std::vector<double>>();
    const auto b = L.at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(in) * out || b.size() != static_cast<std::size_t>(out)) {
      throw std::invalid_argument("MLP layer data has the wrong length");
    }
    std::copy(w.begin(), w.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.weight_offset(l)));
    std::copy(b.begin(), b.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.bias_offset(l)));
  }
  return m;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = b1_ * m_[k] + (1.0 - b1_) * grad[k];
    v_[k] = b2_ * v_[k] + (1.0 - b2_) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

}  // namespace igbd::rl
