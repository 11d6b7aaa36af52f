#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailcert/error.hpp"
#include "tailcert/numerics.hpp"

namespace tailcert {

enum class ActivationKind { relu, logistic, tanh, identity };

/// Elementwise activation with its verified Lipschitz constant.
class Activation {
 public:
  constexpr Activation() = default;
  constexpr explicit Activation(ActivationKind kind) : kind_(kind) {}

  static Activation parse(std::string_view name) {
    if (name == "relu") return Activation(ActivationKind::relu);
    if (name == "logistic") return Activation(ActivationKind::logistic);
    if (name == "tanh") return Activation(ActivationKind::tanh);
    if (name == "identity") return Activation(ActivationKind::identity);
    throw DomainError("unknown activation '" + std::string(name) + "'");
  }

  constexpr ActivationKind kind() const noexcept { return kind_; }

  constexpr std::string_view name() const noexcept {
    switch (kind_) {
      case ActivationKind::relu: return "relu";
      case ActivationKind::logistic: return "logistic";
      case ActivationKind::tanh: return "tanh";
      case ActivationKind::identity: return "identity";
    }
    return "identity";
  }

  /// sup |σ'|: 1/4 for the logistic function, 1 otherwise.
  constexpr double lipschitz_constant() const noexcept {
    return kind_ == ActivationKind::logistic ? 0.25 : 1.0;
  }

  double operator()(double x) const noexcept {
    switch (kind_) {
      case ActivationKind::relu: return x > 0.0 ? x : 0.0;
      case ActivationKind::logistic: return 1.0 / (1.0 + std::exp(-x));
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::identity: return x;
    }
    return x;
  }

  friend constexpr bool operator==(Activation, Activation) = default;

 private:
  ActivationKind kind_ = ActivationKind::identity;
};

struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation;
};

/// A finite feed-forward network x ↦ σ_L(W_L ⋯ σ_1(W_1 x + b_1) ⋯ + b_L).
/// Shapes and finiteness are validated at construction; the object is
/// immutable afterwards.
class FeedForwardNetwork {
 public:
  explicit FeedForwardNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network must have at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      if (layer.weight.empty()) throw ShapeError("layer has an empty weight matrix", l);
      if (layer.bias.size() != layer.weight.rows())
        throw ShapeError("layer " + std::to_string(l) + ": bias dim " +
                             std::to_string(layer.bias.size()) + " != weight rows " +
                             std::to_string(layer.weight.rows()),
                         l);
      if (!all_finite(layer.bias))
        throw DomainError("layer " + std::to_string(l) + ": non-finite bias entry");
      if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())
        throw ShapeError("layer " + std::to_string(l) + ": weight cols " +
                             std::to_string(layer.weight.cols()) + " != previous rows " +
                             std::to_string(layers_[l - 1].weight.rows()),
                         l);
    }
  }

  std::size_t input_dim() const noexcept { return layers_.front().weight.cols(); }
  std::size_t output_dim() const noexcept { return layers_.back().weight.rows(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  Vector forward(std::span<const double> z) const {
    if (z.size() != input_dim())
      throw ShapeError("forward: input dim " + std::to_string(z.size()) + " != layer 0 cols " +
                           std::to_string(input_dim()),
                       0);
    Vector h(z.begin(), z.end());
    for (const Layer& layer : layers_) {
      Vector next = layer.weight.multiply(h);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = layer.activation(next[i] + layer.bias[i]);
      h = std::move(next);
    }
    return h;
  }

 private:
  std::vector<Layer> layers_;
};

/// `second ∘ first`.
inline FeedForwardNetwork concat(const FeedForwardNetwork& first, const FeedForwardNetwork& second) {
  if (first.output_dim() != second.input_dim())
    throw ShapeError("concat: output dim of first != input dim of second", first.depth());
  std::vector<Layer> layers = first.layers();
  layers.insert(layers.end(), second.layers().begin(), second.layers().end());
  return FeedForwardNetwork(std::move(layers));
}

/// Multiplies every weight matrix by `s`, leaving biases untouched.
inline FeedForwardNetwork scale_weights(const FeedForwardNetwork& net, double s) {
  std::vector<Layer> layers = net.layers();
  for (Layer& layer : layers) layer.weight = layer.weight.scaled(s);
  return FeedForwardNetwork(std::move(layers));
}

/// Drops the final layer's rows outside `keep`; composes the network with a
/// coordinate projection.
inline FeedForwardNetwork project_outputs(const FeedForwardNetwork& net,
                                          std::span<const std::size_t> keep) {
  if (keep.empty()) throw ShapeError("project_outputs: empty coordinate set");
  std::vector<Layer> layers = net.layers();
  Layer& last = layers.back();
  std::vector<double> w;
  Vector b;
  for (std::size_t r : keep) {
    if (r >= last.weight.rows()) throw ShapeError("project_outputs: coordinate out of range");
    auto row = last.weight.row(r);
    w.insert(w.end(), row.begin(), row.end());
    b.push_back(last.bias[r]);
  }
  last.weight = Matrix(keep.size(), last.weight.cols(), std::move(w));
  last.bias = std::move(b);
  return FeedForwardNetwork(std::move(layers));
}

// ---------------------------------------------------------------------------
// Lipschitz certification
// ---------------------------------------------------------------------------

enum class NormMethod { spectral, frobenius, min };

inline std::string_view to_string(NormMethod m) {
  switch (m) {
    case NormMethod::spectral: return "spectral";
    case NormMethod::frobenius: return "frobenius";
    case NormMethod::min: return "min";
  }
  return "min";
}

struct LayerLipschitz {
  double operator_bound = 0.0;
  double activation_constant = 1.0;
  double spectral = 0.0;   // inflated power-iteration estimate
  double frobenius = 0.0;
};

struct LipschitzBound {
  double value = 0.0;
  std::vector<LayerLipschitz> per_layer;
  NormMethod method = NormMethod::min;
  double tol = 0.0;
};

/// Upper bound on the Euclidean Lipschitz constant of `net`: the product over
/// layers of (activation constant × operator-norm bound of W_l). Biases do not
/// enter. With NormMethod::min each operator bound is
/// min(spectral·(1+tol), ‖W_l‖_F).
inline LipschitzBound certified_lipschitz(const FeedForwardNetwork& net, double tol = 1e-9,
                                          NormMethod method = NormMethod::min) {
  LipschitzBound out;
  out.method = method;
  out.tol = tol;
  out.value = 1.0;
  for (const Layer& layer : net.layers()) {
    LayerLipschitz lb;
    lb.activation_constant = layer.activation.lipschitz_constant();
    lb.frobenius = frobenius_norm(layer.weight);
    if (method != NormMethod::frobenius) lb.spectral = spectral_norm(layer.weight, tol) * (1.0 + tol);
    switch (method) {
      case NormMethod::spectral: lb.operator_bound = lb.spectral; break;
      case NormMethod::frobenius: lb.operator_bound = lb.frobenius; break;
      case NormMethod::min: lb.operator_bound = std::min(lb.spectral, lb.frobenius); break;
    }
    out.value *= lb.operator_bound * lb.activation_constant;
    out.per_layer.push_back(lb);
  }
  return out;
}

/// Largest observed ‖f(x) − f(y)‖ / ‖x − y‖ over `n_pairs` sampled pairs.
///
/// Pairs cycle through three families: local Gaussian perturbations
/// (x, x + r·g), independent uniform pairs in [−r, r]^d, and axis-aligned
/// perturbations (x, x + r·g·e_k). Pairs with x == y are skipped.
inline double empirical_lipschitz_lower_bound(const FeedForwardNetwork& net, RngStream& rng,
                                              std::size_t n_pairs, double sampling_radius) {
  if (n_pairs == 0) throw DomainError("empirical_lipschitz_lower_bound: n_pairs must be >= 1");
  if (!(sampling_radius > 0.0)) throw DomainError("sampling_radius must be positive");
  const std::size_t d = net.input_dim();
  auto uniform_point = [&] {
    Vector x(d);
    for (double& v : x) v = rng.uniform(-sampling_radius, sampling_radius);
    return x;
  };
  double best = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    Vector x = uniform_point();
    Vector y;
    switch (i % 3) {
      case 0: {
        y = x;
        for (double& v : y) v += sampling_radius * rng.normal();
        break;
      }
      case 1: y = uniform_point(); break;
      default: {
        y = x;
        y[(i / 3) % d] += sampling_radius * rng.normal();
        break;
      }
    }
    const double dx = distance2(x, y);
    if (!(dx > 0.0)) continue;
    const double ratio = distance2(net.forward(x), net.forward(y)) / dx;
    if (ratio > best) best = ratio;
  }
  return best;
}

/// Network with weights W_l ~ N(0, weight_scale² / fan_in) i.i.d. and zero
/// biases. `activations` has one entry per layer (widths.size() − 1).
inline FeedForwardNetwork random_network(RngStream& rng, std::span<const std::size_t> widths,
                                         std::span<const Activation> activations,
                                         double weight_scale) {
  if (widths.size() < 2) throw DomainError("random_network: need at least two widths");
  if (activations.size() != widths.size() - 1)
    throw ShapeError("random_network: need one activation per layer");
  if (weight_scale < 0.0) throw DomainError("random_network: weight_scale must be >= 0");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    if (fan_in == 0 || fan_out == 0) throw DomainError("random_network: widths must be positive");
    const double sd = weight_scale / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = sd * rng.normal();
    layers.push_back(Layer{Matrix(fan_out, fan_in, std::move(w)), Vector(fan_out, 0.0),
                           activations[l]});
  }
  return FeedForwardNetwork(std::move(layers));
}

inline FeedForwardNetwork random_network(RngStream& rng, std::span<const std::size_t> widths,
                                         Activation activation, double weight_scale) {
  if (widths.size() < 2) throw DomainError("random_network: need at least two widths");
  std::vector<Activation> acts(widths.size() - 1, activation);
  return random_network(rng, widths, acts, weight_scale);
}

/// Single-layer linear network x ↦ W x.
inline FeedForwardNetwork linear_network(Matrix w, Activation activation = Activation{}) {
  Vector b(w.rows(), 0.0);
  std::vector<Layer> layers;
  layers.push_back(Layer{std::move(w), std::move(b), activation});
  return FeedForwardNetwork(std::move(layers));
}

}  // namespace tailcert
