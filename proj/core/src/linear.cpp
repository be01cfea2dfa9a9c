#include "vqtoken/linear.hpp"

#include <cmath>
#include <string>

#include "vqtoken/errors.hpp"
#include "vqtoken/flops.hpp"

namespace vqtoken {

LinearLayer LinearLayer::init(std::size_t in, std::size_t out, Rng& rng) {
  LinearLayer layer(in, out);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  layer.weight = Matrix::random_uniform(in, out, scale, rng);
  layer.bias = Matrix(1, out);
  return layer;
}

Matrix LinearLayer::forward(const Matrix& x, bool cache) {
  if (x.cols() != weight.rows()) {
    throw ContractError("linear: input dim " + std::to_string(x.cols()) +
                        " != weight rows " + std::to_string(weight.rows()));
  }
  Matrix y = matmul(x, weight);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias(0, j);
  flops::add(y.size());
  if (cache) cached_input = x;
  return y;
}

namespace {

Matrix apply_activation(const Matrix& z, Activation act) {
  if (act == Activation::kIdentity) return z;
  Matrix out = z;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

// Backward of an affine layer: dW = x^T g, db = column sums of g, dx = g W^T.
LinearGrads affine_grads(const LinearLayer& layer, const Matrix& grad_out) {
  const Matrix& x = *layer.cached_input;
  LinearGrads grads;
  grads.weight = matmul(transpose(x), grad_out);
  grads.bias = Matrix(1, grad_out.cols());
  for (std::size_t i = 0; i < grad_out.rows(); ++i)
    for (std::size_t j = 0; j < grad_out.cols(); ++j) grads.bias(0, j) += grad_out(i, j);
  flops::add(grad_out.size());
  return grads;
}

}  // namespace

Matrix Mlp::forward(const Matrix& x, bool cache) {
  if (layers.empty()) throw ContractError("mlp: no layers");
  if (cache) pre_activations_.clear();
  Matrix h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Matrix z = layers[i].forward(h, cache);
    if (cache) pre_activations_.push_back(z);
    h = (i + 1 < layers.size()) ? apply_activation(z, activation) : std::move(z);
  }
  require_finite(h, "mlp forward");
  return h;
}

Mlp::BackwardResult Mlp::backward(const Matrix& upstream_grad) const {
  if (pre_activations_.size() != layers.size()) {
    throw StateError("mlp backward called before cached forward");
  }
  BackwardResult result;
  result.layer_grads.resize(layers.size());
  Matrix g = upstream_grad;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const LinearLayer& layer = layers[idx];
    if (!layer.cached_input) throw StateError("mlp backward: missing cached input");
    result.layer_grads[idx] = affine_grads(layer, g);
    g = matmul(g, transpose(layer.weight));
    if (idx > 0 && activation == Activation::kRelu) {
      const Matrix& z = pre_activations_[idx - 1];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (z.data()[i] <= 0.0) g.data()[i] = 0.0;
      }
    }
  }
  result.input_grad = std::move(g);
  return result;
}

void Mlp::clear_cache() {
  pre_activations_.clear();
  for (auto& layer : layers) layer.cached_input.reset();
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
             Rng& rng, Activation activation) {
  Mlp mlp;
  mlp.activation = activation;
  std::size_t prev = in;
  for (std::size_t h : hidden) {
    mlp.layers.push_back(LinearLayer::init(prev, h, rng));
    prev = h;
  }
  mlp.layers.push_back(LinearLayer::init(prev, out, rng));
  return mlp;
}

}  // namespace vqtoken
