#ifndef RECURNET_GRAD_CHECK_HPP
#define RECURNET_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "recurnet/tensor.hpp"

namespace recurnet {

template <typename Scalar>
using TensorProgram = std::function<Tensor<Scalar>(Tape<Scalar>*)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_element = 0;
};

/// Compares reverse-mode gradients of a deterministic scalar program against
/// central differences of step `step`. The relative error of each element is
/// |a - c| / max(|a|, |c|, eps).
template <typename Scalar>
GradCheckResult grad_check_detailed(const TensorProgram<Scalar>& program, std::vector<Tensor<Scalar>> params,
                                    double eps, double step) {
  for (auto& p : params) p.set_requires_grad(true);
  {
    Tape<Scalar> tape;
    Tensor<Scalar> loss = program(&tape);
    tape.backward(loss);
  }
  std::vector<typename Tensor<Scalar>::Buffer> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.has_grad() ? p.grad() : Tensor<Scalar>::Buffer::Zero(p.value().size()));

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<Scalar>& p = params[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const Scalar saved = p[i];
      p[i] = saved + static_cast<Scalar>(step);
      const double up = static_cast<double>(program(nullptr).item());
      p[i] = saved - static_cast<Scalar>(step);
      const double down = static_cast<double>(program(nullptr).item());
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = static_cast<double>(analytic[k][static_cast<Eigen::Index>(i)]);
      const double denom = std::max({std::abs(a), std::abs(numeric), eps});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) result = {err, k, i};
    }
  }
  return result;
}

template <typename Scalar>
double grad_check(const TensorProgram<Scalar>& program, std::vector<Tensor<Scalar>> params, double eps,
                  double step = 1e-6) {
  return grad_check_detailed(program, std::move(params), eps, step).max_relative_error;
}

}  // namespace recurnet

#endif  // RECURNET_GRAD_CHECK_HPP
