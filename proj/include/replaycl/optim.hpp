#ifndef REPLAYCL_OPTIM_HPP
#define REPLAYCL_OPTIM_HPP

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "replaycl/tensor.hpp"

namespace replaycl {

// SGD with classical momentum; weight decay enters as an L2 term added to
// the gradient.
template <typename T>
class Sgd {
 public:
  Sgd(double lr, double momentum = 0.0, double weight_decay = 0.0)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::vector<Parameter<T>*>& params) {
    for (auto* p : params) {
      auto& vel = velocity_[p];
      if (vel.size() != p->value.numel()) vel.assign(p->value.numel(), T(0));
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        double g = p->grad.data[i] + weight_decay_ * p->value.data[i];
        if (!std::isfinite(g))
          throw std::runtime_error("sgd: non-finite gradient in " + p->name);
        double v = momentum_ * vel[i] + g;
        vel[i] = static_cast<T>(v);
        p->value.data[i] -= static_cast<T>(lr_ * v);
      }
    }
  }

 private:
  double lr_, momentum_, weight_decay_;
  std::unordered_map<Parameter<T>*, std::vector<T>> velocity_;
};

template <typename T>
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Parameter<T>*>& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (auto* p : params) {
      auto& s = state_[p];
      if (s.m.size() != p->value.numel()) {
        s.m.assign(p->value.numel(), 0.0);
        s.v.assign(p->value.numel(), 0.0);
      }
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        double g = p->grad.data[i];
        if (!std::isfinite(g))
          throw std::runtime_error("adam: non-finite gradient in " + p->name);
        s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
        s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
        double mhat = s.m[i] / bc1;
        double vhat = s.v[i] / bc2;
        p->value.data[i] -=
            static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  struct State {
    std::vector<double> m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::unordered_map<Parameter<T>*, State> state_;
};

}  // namespace replaycl

#endif  // REPLAYCL_OPTIM_HPP
