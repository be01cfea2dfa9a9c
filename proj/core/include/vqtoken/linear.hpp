#pragma once

#include <optional>
#include <vector>

#include "vqtoken/matrix.hpp"

namespace vqtoken {

enum class Activation { kIdentity, kRelu };

/// Affine layer y = x W + b with cached input for the backward pass.
/// weight is (in x out); bias is a 1 x out row broadcast over batch rows.
struct LinearLayer {
  Matrix weight;
  Matrix bias;
  std::optional<Matrix> cached_input;

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out) : weight(in, out), bias(1, out) {}

  /// Centered uniform init scaled by 1/sqrt(fan-in); bias zero.
  static LinearLayer init(std::size_t in, std::size_t out, Rng& rng);

  std::size_t fan_in() const { return weight.rows(); }
  std::size_t fan_out() const { return weight.cols(); }

  Matrix forward(const Matrix& x, bool cache);
};

struct LinearGrads {
  Matrix weight;
  Matrix bias;
};

/// Stack of affine layers with the activation applied after every hidden
/// layer (the last layer stays affine). Backward is hand-derived per layer.
struct Mlp {
  std::vector<LinearLayer> layers;
  Activation activation = Activation::kRelu;

  struct BackwardResult {
    std::vector<LinearGrads> layer_grads;  // aligned with layers
    Matrix input_grad;
  };

  /// Throws ContractError on chained dimension mismatch.
  Matrix forward(const Matrix& x, bool cache = false);

  /// Gradients of a scalar loss given d(loss)/d(output). Requires a prior
  /// forward(..., cache=true); throws StateError otherwise.
  BackwardResult backward(const Matrix& upstream_grad) const;

  void clear_cache();

  std::size_t input_dim() const { return layers.front().fan_in(); }
  std::size_t output_dim() const { return layers.back().fan_out(); }

 private:
  // Post-activation inputs to each layer plus pre-activation outputs,
  // recorded during a cached forward.
  std::vector<Matrix> pre_activations_;
};

/// Hidden widths in order; e.g. make_mlp(5, {8}, 3) is 5 -> 8 -> 3.
Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             Rng& rng, Activation activation = Activation::kRelu);

}  // namespace vqtoken
