#ifndef REPLAYCL_GRAD_CHECK_HPP
#define REPLAYCL_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "replaycl/layers.hpp"
#include "replaycl/tensor.hpp"

namespace replaycl {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  bool passed = false;
};

// Compares analytic gradients of loss = sum(forward(x)) against central
// finite differences, parameter element by parameter element. Meant for
// double precision networks.
inline double rel_error(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / denom;
}

template <typename T>
GradCheckReport grad_check(Sequential<T>& net, const Tensor<T>& input,
                           double tolerance, const RunContext& ctx = {},
                           double h = 1e-5) {
  GradCheckReport report;

  auto loss_of = [&](void) {
    Tensor<T> y = net.forward(input, ctx);
    double s = 0;
    for (T v : y.data) s += static_cast<double>(v);
    return s;
  };

  // Analytic pass.
  net.zero_grad();
  Tensor<T> y = net.forward(input, ctx);
  Tensor<T> ones(y.shape);
  ones.fill(T(1));
  net.backward(ones);

  for (auto* p : net.parameters()) {
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      double analytic = p->grad.data[i];
      T saved = p->value.data[i];
      p->value.data[i] = saved + static_cast<T>(h);
      double lp = loss_of();
      p->value.data[i] = saved - static_cast<T>(h);
      double lm = loss_of();
      p->value.data[i] = saved;
      double numeric = (lp - lm) / (2.0 * h);
      double e = rel_error(analytic, numeric);
      if (e > report.max_rel_error) {
        report.max_rel_error = e;
        report.worst_parameter = p->name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace replaycl

#endif  // REPLAYCL_GRAD_CHECK_HPP
