#include "vqtoken/probe.hpp"

#include <cmath>
#include <string>

#include "vqtoken/errors.hpp"

namespace vqtoken {

void fit_standardizer(const Matrix& features, Matrix& mean, Matrix& scale) {
  const std::size_t n = features.rows();
  const std::size_t f = features.cols();
  if (n == 0) throw ContractError("standardizer: no samples");
  mean = Matrix(1, f);
  scale = Matrix(1, f);
  for (std::size_t j = 0; j < f; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += features(i, j);
    m /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = features(i, j) - m;
      var += d * d;
    }
    var /= static_cast<double>(n);
    mean(0, j) = m;
    scale(0, j) = 1.0 / (std::sqrt(var) + 1e-8);
  }
}

Matrix standardize(const Matrix& features, const Matrix& mean, const Matrix& scale) {
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = (out(i, j) - mean(0, j)) * scale(0, j);
  return out;
}

namespace {

// Mean cross-entropy plus the gradient w.r.t. logits, (softmax - onehot)/n.
double ce_loss_and_grad(const Matrix& logits, const std::vector<int>& labels,
                        Matrix& grad) {
  const std::size_t n = logits.rows();
  const Matrix probs = row_softmax(logits);
  grad = probs;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y)), 1e-300));
    grad(i, static_cast<std::size_t>(y)) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grad.data()) g *= inv;
  return loss * inv;
}

}  // namespace

LinearProbe train_probe(const Matrix& features, const std::vector<int>& labels,
                        std::size_t num_classes, const ProbeConfig& cfg) {
  if (features.rows() != labels.size() || features.rows() == 0) {
    throw ContractError("train_probe: features/labels mismatch");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ContractError("train_probe: label out of range");
    }
  }

  LinearProbe probe;
  fit_standardizer(features, probe.feat_mean, probe.feat_scale);
  const Matrix x = standardize(features, probe.feat_mean, probe.feat_scale);
  probe.weight = Matrix(features.cols(), num_classes);
  probe.bias = Matrix(1, num_classes);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix logits = matmul(x, probe.weight);
    for (std::size_t i = 0; i < logits.rows(); ++i)
      for (std::size_t j = 0; j < num_classes; ++j) logits(i, j) += probe.bias(0, j);

    Matrix grad;
    const double loss = ce_loss_and_grad(logits, labels, grad);
    if (!std::isfinite(loss)) {
      throw StateError("train_probe: loss diverged at epoch " + std::to_string(epoch) +
                       " (lr=" + std::to_string(cfg.lr) + ")");
    }
    probe.loss_history.push_back(loss);

    const Matrix dw = matmul(transpose(x), grad);
    axpy(probe.weight, -cfg.lr, dw);
    for (std::size_t i = 0; i < grad.rows(); ++i)
      for (std::size_t j = 0; j < num_classes; ++j)
        probe.bias(0, j) -= cfg.lr * grad(i, j);
  }
  return probe;
}

Matrix probe_logits(const LinearProbe& probe, const Matrix& raw_features) {
  const Matrix x = standardize(raw_features, probe.feat_mean, probe.feat_scale);
  Matrix logits = matmul(x, probe.weight);
  for (std::size_t i = 0; i < logits.rows(); ++i)
    for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += probe.bias(0, j);
  return logits;
}

double evaluate_probe(const LinearProbe& probe, const Matrix& raw_features,
                      const std::vector<int>& labels) {
  if (raw_features.rows() != labels.size() || labels.empty()) {
    throw ContractError("evaluate_probe: features/labels mismatch");
  }
  const Matrix logits = probe_logits(probe, raw_features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace vqtoken
