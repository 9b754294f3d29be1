#ifndef REPLAYCL_LAYERS_HPP
#define REPLAYCL_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/rng.hpp"
#include "replaycl/tensor.hpp"

namespace replaycl {

struct RunContext {
  bool train = false;
  RngEngine* dropout_rng = nullptr;
};

// Layer with explicit forward/backward. Each layer caches what its own
// backward needs from the most recent forward.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, const RunContext& ctx) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::string kind() const = 0;
};

namespace init {

// He-uniform for layers feeding ReLU, Xavier-uniform otherwise.
template <typename T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, RngEngine& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void xavier_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out,
                    RngEngine& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace init

template <typename T>
class Dense : public Layer<T> {
 public:
  // weight is [d_out, d_in].
  Dense(std::size_t d_in, std::size_t d_out, const std::string& name)
      : d_in_(d_in),
        d_out_(d_out),
        weight_(Tensor<T>({d_out, d_in}), name + ".weight"),
        bias_(Tensor<T>({d_out}), name + ".bias") {}

  void init_he(RngEngine& rng) { init::he_uniform(weight_.value, d_in_, rng); }
  void init_xavier(RngEngine& rng) {
    init::xavier_uniform(weight_.value, d_in_, d_out_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 2 || x.shape[1] != d_in_)
      throw std::invalid_argument("dense: expected input (batch," +
                                  std::to_string(d_in_) + "), got " +
                                  Tensor<T>::shape_str(x.shape));
    input_ = x;
    std::size_t batch = x.shape[0];
    Tensor<T> y({batch, d_out_});
    for (std::size_t b = 0; b < batch; ++b) {
      const T* xi = &x.data[b * d_in_];
      T* yi = &y.data[b * d_out_];
      for (std::size_t o = 0; o < d_out_; ++o) {
        const T* w = &weight_.value.data[o * d_in_];
        T acc = bias_.value.data[o];
        for (std::size_t i = 0; i < d_in_; ++i) acc += w[i] * xi[i];
        yi[o] = acc;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    std::size_t batch = input_.shape[0];
    Tensor<T> gx({batch, d_in_});
    for (std::size_t b = 0; b < batch; ++b) {
      const T* xi = &input_.data[b * d_in_];
      const T* gyi = &gy.data[b * d_out_];
      T* gxi = &gx.data[b * d_in_];
      for (std::size_t o = 0; o < d_out_; ++o) {
        T g = gyi[o];
        bias_.grad.data[o] += g;
        const T* w = &weight_.value.data[o * d_in_];
        T* gw = &weight_.grad.data[o * d_in_];
        for (std::size_t i = 0; i < d_in_; ++i) {
          gw[i] += g * xi[i];
          gxi[i] += g * w[i];
        }
      }
    }
    return gx;
  }

  std::vector<Parameter<T>*> parameters() override {
    return {&weight_, &bias_};
  }
  std::string kind() const override { return "dense"; }

  std::size_t in_features() const { return d_in_; }
  std::size_t out_features() const { return d_out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t d_in_, d_out_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// 1D convolution over (batch, channels, length).
template <typename T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(std::size_t ch_in, std::size_t ch_out, std::size_t kernel,
         std::size_t stride, std::size_t padding, const std::string& name)
      : ch_in_(ch_in),
        ch_out_(ch_out),
        kernel_(kernel),
        stride_(stride),
        padding_(padding),
        weight_(Tensor<T>({ch_out, ch_in, kernel}), name + ".weight"),
        bias_(Tensor<T>({ch_out}), name + ".bias") {}

  void init_he(RngEngine& rng) {
    init::he_uniform(weight_.value, ch_in_ * kernel_, rng);
  }
  void init_xavier(RngEngine& rng) {
    init::xavier_uniform(weight_.value, ch_in_ * kernel_, ch_out_ * kernel_,
                         rng);
  }

  static std::size_t out_len(std::size_t len, std::size_t kernel,
                             std::size_t stride, std::size_t padding) {
    if (len + 2 * padding < kernel)
      throw std::invalid_argument("conv1d: input shorter than kernel");
    return (len + 2 * padding - kernel) / stride + 1;
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 3 || x.shape[1] != ch_in_)
      throw std::invalid_argument("conv1d: expected input (batch," +
                                  std::to_string(ch_in_) + ",len), got " +
                                  Tensor<T>::shape_str(x.shape));
    input_ = x;
    std::size_t batch = x.shape[0], len = x.shape[2];
    std::size_t lout = out_len(len, kernel_, stride_, padding_);
    Tensor<T> y({batch, ch_out_, lout});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t co = 0; co < ch_out_; ++co) {
        T* yo = &y.data[(b * ch_out_ + co) * lout];
        T bias = bias_.value.data[co];
        for (std::size_t o = 0; o < lout; ++o) yo[o] = bias;
        for (std::size_t ci = 0; ci < ch_in_; ++ci) {
          const T* xi = &x.data[(b * ch_in_ + ci) * len];
          const T* w = &weight_.value.data[(co * ch_in_ + ci) * kernel_];
          for (std::size_t o = 0; o < lout; ++o) {
            std::ptrdiff_t base = static_cast<std::ptrdiff_t>(o * stride_) -
                                  static_cast<std::ptrdiff_t>(padding_);
            T acc = 0;
            for (std::size_t k = 0; k < kernel_; ++k) {
              std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(k);
              if (t >= 0 && t < static_cast<std::ptrdiff_t>(len))
                acc += w[k] * xi[t];
            }
            yo[o] += acc;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    std::size_t batch = input_.shape[0], len = input_.shape[2];
    std::size_t lout = gy.shape[2];
    Tensor<T> gx(input_.shape);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t co = 0; co < ch_out_; ++co) {
        const T* gyo = &gy.data[(b * ch_out_ + co) * lout];
        for (std::size_t o = 0; o < lout; ++o)
          bias_.grad.data[co] += gyo[o];
        for (std::size_t ci = 0; ci < ch_in_; ++ci) {
          const T* xi = &input_.data[(b * ch_in_ + ci) * len];
          T* gxi = &gx.data[(b * ch_in_ + ci) * len];
          const T* w = &weight_.value.data[(co * ch_in_ + ci) * kernel_];
          T* gw = &weight_.grad.data[(co * ch_in_ + ci) * kernel_];
          for (std::size_t o = 0; o < lout; ++o) {
            std::ptrdiff_t base = static_cast<std::ptrdiff_t>(o * stride_) -
                                  static_cast<std::ptrdiff_t>(padding_);
            T g = gyo[o];
            for (std::size_t k = 0; k < kernel_; ++k) {
              std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(k);
              if (t >= 0 && t < static_cast<std::ptrdiff_t>(len)) {
                gw[k] += g * xi[t];
                gxi[t] += g * w[k];
              }
            }
          }
        }
      }
    }
    return gx;
  }

  std::vector<Parameter<T>*> parameters() override {
    return {&weight_, &bias_};
  }
  std::string kind() const override { return "conv1d"; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t ch_in_, ch_out_, kernel_, stride_, padding_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

// Transposed 1D convolution; exact adjoint of Conv1d with the same
// (kernel, stride, padding). Weight layout is [ch_in, ch_out, kernel] so a
// Conv1d weight [ch_out, ch_in, k] maps directly onto the deconv whose
// input channels are the conv's output channels.
template <typename T>
class Deconv1d : public Layer<T> {
 public:
  Deconv1d(std::size_t ch_in, std::size_t ch_out, std::size_t kernel,
           std::size_t stride, std::size_t padding, const std::string& name)
      : ch_in_(ch_in),
        ch_out_(ch_out),
        kernel_(kernel),
        stride_(stride),
        padding_(padding),
        weight_(Tensor<T>({ch_in, ch_out, kernel}), name + ".weight"),
        bias_(Tensor<T>({ch_out}), name + ".bias") {}

  void init_he(RngEngine& rng) {
    init::he_uniform(weight_.value, ch_in_ * kernel_, rng);
  }
  void init_xavier(RngEngine& rng) {
    init::xavier_uniform(weight_.value, ch_in_ * kernel_, ch_out_ * kernel_,
                         rng);
  }

  static std::size_t nominal_len(std::size_t len, std::size_t kernel,
                                 std::size_t stride, std::size_t padding) {
    std::size_t full = (len - 1) * stride + kernel;
    if (full < 2 * padding)
      throw std::invalid_argument("deconv1d: padding exceeds nominal length");
    return full - 2 * padding;
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 3 || x.shape[1] != ch_in_)
      throw std::invalid_argument("deconv1d: expected input (batch," +
                                  std::to_string(ch_in_) + ",len), got " +
                                  Tensor<T>::shape_str(x.shape));
    input_ = x;
    std::size_t batch = x.shape[0], len = x.shape[2];
    std::size_t lout = nominal_len(len, kernel_, stride_, padding_);
    Tensor<T> y({batch, ch_out_, lout});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t co = 0; co < ch_out_; ++co) {
        T* yo = &y.data[(b * ch_out_ + co) * lout];
        T bias = bias_.value.data[co];
        for (std::size_t o = 0; o < lout; ++o) yo[o] = bias;
      }
      for (std::size_t ci = 0; ci < ch_in_; ++ci) {
        const T* xi = &x.data[(b * ch_in_ + ci) * len];
        for (std::size_t co = 0; co < ch_out_; ++co) {
          T* yo = &y.data[(b * ch_out_ + co) * lout];
          const T* w = &weight_.value.data[(ci * ch_out_ + co) * kernel_];
          for (std::size_t i = 0; i < len; ++i) {
            std::ptrdiff_t base = static_cast<std::ptrdiff_t>(i * stride_) -
                                  static_cast<std::ptrdiff_t>(padding_);
            T v = xi[i];
            for (std::size_t k = 0; k < kernel_; ++k) {
              std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(k);
              if (t >= 0 && t < static_cast<std::ptrdiff_t>(lout))
                yo[t] += v * w[k];
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    std::size_t batch = input_.shape[0], len = input_.shape[2];
    std::size_t lout = gy.shape[2];
    Tensor<T> gx(input_.shape);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t co = 0; co < ch_out_; ++co) {
        const T* gyo = &gy.data[(b * ch_out_ + co) * lout];
        for (std::size_t o = 0; o < lout; ++o) bias_.grad.data[co] += gyo[o];
      }
      for (std::size_t ci = 0; ci < ch_in_; ++ci) {
        const T* xi = &input_.data[(b * ch_in_ + ci) * len];
        T* gxi = &gx.data[(b * ch_in_ + ci) * len];
        for (std::size_t co = 0; co < ch_out_; ++co) {
          const T* gyo = &gy.data[(b * ch_out_ + co) * lout];
          const T* w = &weight_.value.data[(ci * ch_out_ + co) * kernel_];
          T* gw = &weight_.grad.data[(ci * ch_out_ + co) * kernel_];
          for (std::size_t i = 0; i < len; ++i) {
            std::ptrdiff_t base = static_cast<std::ptrdiff_t>(i * stride_) -
                                  static_cast<std::ptrdiff_t>(padding_);
            T acc = 0;
            for (std::size_t k = 0; k < kernel_; ++k) {
              std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(k);
              if (t >= 0 && t < static_cast<std::ptrdiff_t>(lout)) {
                acc += gyo[t] * w[k];
                gw[k] += gyo[t] * xi[i];
              }
            }
            gxi[i] += acc;
          }
        }
      }
    }
    return gx;
  }

  std::vector<Parameter<T>*> parameters() override {
    return {&weight_, &bias_};
  }
  std::string kind() const override { return "deconv1d"; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t ch_in_, ch_out_, kernel_, stride_, padding_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

template <typename T>
class Relu : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    output_ = x;
    for (auto& v : output_.data) v = v > T(0) ? v : T(0);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.numel(); ++i)
      if (output_.data[i] <= T(0)) gx.data[i] = T(0);
    return gx;
  }
  std::string kind() const override { return "relu"; }

 private:
  Tensor<T> output_;
};

template <typename T>
class Sigmoid : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    output_ = x;
    for (auto& v : output_.data)
      v = T(1) / (T(1) + std::exp(-static_cast<double>(v)));
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      T s = output_.data[i];
      gx.data[i] *= s * (T(1) - s);
    }
    return gx;
  }
  std::string kind() const override { return "sigmoid"; }

 private:
  Tensor<T> output_;
};

// Row-wise softmax over (batch, classes).
template <typename T>
class Softmax : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 2)
      throw std::invalid_argument("softmax: expected rank-2 input");
    output_ = x;
    std::size_t batch = x.shape[0], n = x.shape[1];
    for (std::size_t b = 0; b < batch; ++b) {
      T* row = &output_.data[b * n];
      T mx = row[0];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      T sum = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)));
        sum += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    }
    return output_;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    std::size_t batch = output_.shape[0], n = output_.shape[1];
    Tensor<T> gx(output_.shape);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* p = &output_.data[b * n];
      const T* g = &gy.data[b * n];
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * p[j];
      for (std::size_t j = 0; j < n; ++j) gx.data[b * n + j] = p[j] * (g[j] - dot);
    }
    return gx;
  }
  std::string kind() const override { return "softmax"; }

 private:
  Tensor<T> output_;
};

// Batch normalization over (batch, features) or per channel over
// (batch, channels, length). Running stats use decay `momentum`.
template <typename T>
class BatchNorm1d : public Layer<T> {
 public:
  BatchNorm1d(std::size_t features, const std::string& name,
              double momentum = 0.9, double eps = 1e-5)
      : features_(features),
        momentum_(momentum),
        eps_(eps),
        gamma_(Tensor<T>({features}), name + ".gamma"),
        beta_(Tensor<T>({features}), name + ".beta"),
        running_mean_({features}),
        running_var_({features}) {
    gamma_.value.fill(T(1));
    running_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext& ctx) override {
    grab_dims(x);
    train_ = ctx.train;
    input_ = x;
    Tensor<T> y(x.shape);
    mean_.assign(features_, 0.0);
    var_.assign(features_, 0.0);
    std::size_t per_feature = batch_ * len_;
    if (ctx.train) {
      if (batch_ < 2)
        throw std::invalid_argument("batch_norm: train mode needs batch >= 2");
      for (std::size_t c = 0; c < features_; ++c) {
        double m = 0;
        for_each_pos(x, c, [&](T v, std::size_t) { m += v; });
        m /= per_feature;
        double v2 = 0;
        for_each_pos(x, c, [&](T v, std::size_t) {
          double d = v - m;
          v2 += d * d;
        });
        v2 /= per_feature;
        mean_[c] = m;
        var_[c] = v2;
        running_mean_.data[c] = static_cast<T>(
            momentum_ * running_mean_.data[c] + (1 - momentum_) * m);
        running_var_.data[c] = static_cast<T>(
            momentum_ * running_var_.data[c] + (1 - momentum_) * v2);
      }
    } else {
      for (std::size_t c = 0; c < features_; ++c) {
        mean_[c] = running_mean_.data[c];
        var_[c] = running_var_.data[c];
      }
    }
    xhat_ = Tensor<T>(x.shape);
    for (std::size_t c = 0; c < features_; ++c) {
      double inv = 1.0 / std::sqrt(var_[c] + eps_);
      T g = gamma_.value.data[c], b = beta_.value.data[c];
      for_each_pos(x, c, [&](T v, std::size_t idx) {
        T xh = static_cast<T>((v - mean_[c]) * inv);
        xhat_.data[idx] = xh;
        y.data[idx] = g * xh + b;
      });
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(input_.shape);
    std::size_t per_feature = batch_ * len_;
    for (std::size_t c = 0; c < features_; ++c) {
      double inv = 1.0 / std::sqrt(var_[c] + eps_);
      double g = gamma_.value.data[c];
      double sum_gy = 0, sum_gy_xhat = 0;
      for_each_pos(gy, c, [&](T v, std::size_t idx) {
        sum_gy += v;
        sum_gy_xhat += static_cast<double>(v) * xhat_.data[idx];
      });
      gamma_.grad.data[c] += static_cast<T>(sum_gy_xhat);
      beta_.grad.data[c] += static_cast<T>(sum_gy);
      if (train_) {
        double n = static_cast<double>(per_feature);
        for_each_pos(gy, c, [&](T v, std::size_t idx) {
          double t = n * v - sum_gy - xhat_.data[idx] * sum_gy_xhat;
          gx.data[idx] = static_cast<T>(g * inv * t / n);
        });
      } else {
        for_each_pos(gy, c, [&](T v, std::size_t idx) {
          gx.data[idx] = static_cast<T>(g * inv * v);
        });
      }
    }
    return gx;
  }

  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::string kind() const override { return "batch_norm"; }

  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }
  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }

 private:
  void grab_dims(const Tensor<T>& x) {
    if (x.rank() == 2) {
      if (x.shape[1] != features_)
        throw std::invalid_argument("batch_norm: feature dim mismatch");
      batch_ = x.shape[0];
      len_ = 1;
    } else if (x.rank() == 3) {
      if (x.shape[1] != features_)
        throw std::invalid_argument("batch_norm: channel dim mismatch");
      batch_ = x.shape[0];
      len_ = x.shape[2];
    } else {
      throw std::invalid_argument("batch_norm: expected rank 2 or 3 input");
    }
  }

  template <typename F>
  void for_each_pos(const Tensor<T>& t, std::size_t c, F&& f) const {
    for (std::size_t b = 0; b < batch_; ++b) {
      std::size_t base = (b * features_ + c) * len_;
      for (std::size_t l = 0; l < len_; ++l) f(t.data[base + l], base + l);
    }
  }

  std::size_t features_;
  double momentum_, eps_;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> input_, xhat_;
  std::vector<double> mean_, var_;
  std::size_t batch_ = 0, len_ = 0;
  bool train_ = false;
};

// Max pooling, window == stride.
template <typename T>
class MaxPool1d : public Layer<T> {
 public:
  explicit MaxPool1d(std::size_t window = 2) : window_(window) {}

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 3)
      throw std::invalid_argument("max_pool1d: expected rank-3 input");
    in_shape_ = x.shape;
    std::size_t batch = x.shape[0], ch = x.shape[1], len = x.shape[2];
    std::size_t lout = len / window_;
    Tensor<T> y({batch, ch, lout});
    argmax_.assign(y.numel(), 0);
    for (std::size_t bc = 0; bc < batch * ch; ++bc) {
      const T* xi = &x.data[bc * len];
      T* yo = &y.data[bc * lout];
      for (std::size_t o = 0; o < lout; ++o) {
        std::size_t best = o * window_;
        for (std::size_t k = 1; k < window_; ++k)
          if (xi[o * window_ + k] > xi[best]) best = o * window_ + k;
        yo[o] = xi[best];
        argmax_[bc * lout + o] = bc * len + best;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(in_shape_);
    for (std::size_t i = 0; i < gy.numel(); ++i)
      gx.data[argmax_[i]] += gy.data[i];
    return gx;
  }
  std::string kind() const override { return "max_pool1d"; }

 private:
  std::size_t window_;
  std::vector<std::size_t> in_shape_;
  std::vector<std::size_t> argmax_;
};

// Inverted dropout; identity in eval mode.
template <typename T>
class Dropout : public Layer<T> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0)
      throw std::invalid_argument("dropout: rate must be in [0,1)");
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext& ctx) override {
    active_ = ctx.train && rate_ > 0.0;
    if (!active_) return x;
    if (ctx.dropout_rng == nullptr)
      throw std::invalid_argument("dropout: train mode requires an rng");
    Tensor<T> y = x;
    mask_.assign(x.numel(), T(0));
    T scale = static_cast<T>(1.0 / (1.0 - rate_));
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (ctx.dropout_rng->uniform() >= rate_) mask_[i] = scale;
      y.data[i] = x.data[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!active_) return gy;
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] *= mask_[i];
    return gx;
  }
  std::string kind() const override { return "dropout"; }

 private:
  double rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

// Reshape keeping the leading batch dimension; target excludes batch.
template <typename T>
class Reshape : public Layer<T> {
 public:
  explicit Reshape(std::vector<std::size_t> inner) : inner_(std::move(inner)) {}

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    in_shape_ = x.shape;
    std::vector<std::size_t> s{x.shape[0]};
    s.insert(s.end(), inner_.begin(), inner_.end());
    return x.reshaped(std::move(s));
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return gy.reshaped(in_shape_);
  }
  std::string kind() const override { return "reshape"; }

 private:
  std::vector<std::size_t> inner_;
  std::vector<std::size_t> in_shape_;
};

// Flatten (batch, ...) -> (batch, rest).
template <typename T>
class Flatten : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    in_shape_ = x.shape;
    return x.reshaped({x.shape[0], x.numel() / x.shape[0]});
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    return gy.reshaped(in_shape_);
  }
  std::string kind() const override { return "flatten"; }

 private:
  std::vector<std::size_t> in_shape_;
};

// Drop trailing positions of (batch, channels, length) down to target_len.
template <typename T>
class TrimRight : public Layer<T> {
 public:
  explicit TrimRight(std::size_t target_len) : target_len_(target_len) {}

  Tensor<T> forward(const Tensor<T>& x, const RunContext&) override {
    if (x.rank() != 3)
      throw std::invalid_argument("trim: expected rank-3 input");
    if (target_len_ > x.shape[2])
      throw std::invalid_argument("trim: target exceeds nominal length " +
                                  std::to_string(x.shape[2]));
    in_shape_ = x.shape;
    std::size_t batch = x.shape[0], ch = x.shape[1], len = x.shape[2];
    Tensor<T> y({batch, ch, target_len_});
    for (std::size_t bc = 0; bc < batch * ch; ++bc)
      std::copy_n(&x.data[bc * len], target_len_, &y.data[bc * target_len_]);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(in_shape_);
    std::size_t len = in_shape_[2];
    for (std::size_t bc = 0; bc < in_shape_[0] * in_shape_[1]; ++bc)
      std::copy_n(&gy.data[bc * target_len_], target_len_, &gx.data[bc * len]);
    return gx;
  }
  std::string kind() const override { return "trim"; }

 private:
  std::size_t target_len_;
  std::vector<std::size_t> in_shape_;
};

// Ordered layer stack with per-layer output capture so internal taps can be
// read and used as backward entry points.
template <typename T>
class Sequential {
 public:
  std::size_t add(std::unique_ptr<Layer<T>> layer) {
    layers_.push_back(std::move(layer));
    return layers_.size() - 1;
  }

  template <typename L, typename... Args>
  std::size_t emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  Tensor<T> forward(const Tensor<T>& x, const RunContext& ctx) {
    outputs_.clear();
    outputs_.reserve(layers_.size());
    Tensor<T> cur = x;
    for (auto& l : layers_) {
      cur = l->forward(cur, ctx);
      outputs_.push_back(cur);
    }
    return cur;
  }

  // Gradient of a scalar loss w.r.t. the network input; parameter grads
  // accumulate along the way.
  Tensor<T> backward(const Tensor<T>& grad_out) {
    return backward_from(layers_.size() - 1, grad_out);
  }

  // Backward starting at the output of layer `index`.
  Tensor<T> backward_from(std::size_t index, const Tensor<T>& grad) {
    Tensor<T> g = grad;
    for (std::size_t i = index + 1; i-- > 0;) g = layers_[i]->backward(g);
    return g;
  }

  const Tensor<T>& output_of(std::size_t index) const {
    return outputs_.at(index);
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& l : layers_)
      for (auto* p : l->parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

  void replace(std::size_t i, std::unique_ptr<Layer<T>> layer) {
    layers_[i] = std::move(layer);
  }

  std::size_t count_kind(const std::string& k) const {
    std::size_t n = 0;
    for (const auto& l : layers_)
      if (l->kind() == k) ++n;
    return n;
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Tensor<T>> outputs_;
};

}  // namespace replaycl

#endif  // REPLAYCL_LAYERS_HPP
