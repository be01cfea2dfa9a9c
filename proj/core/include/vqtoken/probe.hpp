#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqtoken/matrix.hpp"

namespace vqtoken {

struct ProbeConfig {
  std::size_t epochs = 500;
  double lr = 0.1;
};

/// Multinomial logistic regression head over frozen per-clip features.
/// Features are standardized with train-split statistics (stored so
/// evaluation applies the same affine map). Zero-initialized weights make
/// training deterministic without a seed.
struct LinearProbe {
  Matrix weight;     // F x C
  Matrix bias;       // 1 x C
  Matrix feat_mean;  // 1 x F
  Matrix feat_scale; // 1 x F, reciprocal std
  std::string trained_on;
  std::vector<double> loss_history;  // per epoch, non-increasing at default lr
};

/// Standardization statistics from a feature matrix (rows = samples).
void fit_standardizer(const Matrix& features, Matrix& mean, Matrix& scale);
Matrix standardize(const Matrix& features, const Matrix& mean, const Matrix& scale);

/// Full-batch gradient descent on softmax cross-entropy. Throws StateError
/// if the loss diverges to a non-finite value.
LinearProbe train_probe(const Matrix& features, const std::vector<int>& labels,
                        std::size_t num_classes, const ProbeConfig& cfg);

Matrix probe_logits(const LinearProbe& probe, const Matrix& raw_features);

/// Accuracy in percent (argmax prediction, ties to the lower class id).
double evaluate_probe(const LinearProbe& probe, const Matrix& raw_features,
                      const std::vector<int>& labels);

}  // namespace vqtoken
