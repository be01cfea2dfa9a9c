#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vqtoken/matrix.hpp"

namespace vqtoken {

/// Named view of a trainable tensor used by the gradient checker.
struct ParamRef {
  std::string name;
  Matrix* value;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t param_count = 0;  // scalar parameters checked
  std::vector<std::pair<std::string, double>> per_param_errors;  // per tensor

  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

/// Compares analytic gradients against central finite differences.
///
/// `loss` re-evaluates the scalar loss at the current parameter values;
/// `analytic` returns d(loss)/d(param) aligned with `params`. Each scalar is
/// perturbed by +/-step; relative error is |a - n| / max(|a|, |n|, 1e-8).
/// A non-finite loss under perturbation raises ContractError naming the
/// offending parameter entry.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<std::vector<Matrix>()>& analytic,
                           const std::vector<ParamRef>& params, double step = 1e-5);

}  // namespace vqtoken
