#include "vqtoken/grad_check.hpp"

#include <cmath>

#include "vqtoken/errors.hpp"

namespace vqtoken {

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<std::vector<Matrix>()>& analytic,
                           const std::vector<ParamRef>& params, double step) {
  const std::vector<Matrix> grads = analytic();
  if (grads.size() != params.size()) {
    throw ContractError("grad_check: analytic gradient count mismatch");
  }

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = *params[p].value;
    const Matrix& grad = grads[p];
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      throw ContractError("grad_check: gradient shape mismatch for " + params[p].name);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value.data()[i];
      value.data()[i] = original + step;
      const double plus = loss();
      value.data()[i] = original - step;
      const double minus = loss();
      value.data()[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw ContractError("grad_check: non-finite loss perturbing " + params[p].name +
                            "[" + std::to_string(i) + "]");
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = grad.data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
      ++report.param_count;
    }
    report.per_param_errors.emplace_back(params[p].name, worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  return report;
}

}  // namespace vqtoken
