#ifndef REPLAYCL_SCALER_HPP
#define REPLAYCL_SCALER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace replaycl {

enum class ScalerMode { refit, incremental };

// Per-feature standardizer with Welford/Chan updates so incremental fits
// over arbitrary splits match a one-shot fit. Variance uses the population
// convention (divide by count).
class ScalerState {
 public:
  ScalerState() = default;
  explicit ScalerState(std::size_t feature_dim, ScalerMode mode = ScalerMode::incremental)
      : mode_(mode), count_(0), mean_(feature_dim, 0.0), m2_(feature_dim, 0.0) {}

  std::size_t feature_dim() const { return mean_.size(); }
  std::size_t count() const { return count_; }
  ScalerMode mode() const { return mode_; }
  bool fitted() const { return count_ > 0; }

  void reset() {
    count_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }

  // Welford update, one sample at a time over a row-major batch.
  template <typename T>
  void update(const T* batch, std::size_t rows) {
    std::size_t m = feature_dim();
    for (std::size_t i = 0; i < rows; ++i) {
      ++count_;
      for (std::size_t j = 0; j < m; ++j) {
        double x = static_cast<double>(batch[i * m + j]);
        double d = x - mean_[j];
        mean_[j] += d / static_cast<double>(count_);
        m2_[j] += d * (x - mean_[j]);
      }
    }
  }

  template <typename T>
  void update(const std::vector<T>& batch) {
    if (batch.size() % feature_dim() != 0)
      throw std::invalid_argument("scaler: batch size not a multiple of m");
    update(batch.data(), batch.size() / feature_dim());
  }

  // Chan parallel merge; equals fitting the concatenated data.
  void merge(const ScalerState& other) {
    if (other.feature_dim() != feature_dim())
      throw std::invalid_argument("scaler: feature dim mismatch in merge");
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    double na = static_cast<double>(count_);
    double nb = static_cast<double>(other.count_);
    for (std::size_t j = 0; j < feature_dim(); ++j) {
      double delta = other.mean_[j] - mean_[j];
      double total = na + nb;
      mean_[j] += delta * nb / total;
      m2_[j] += other.m2_[j] + delta * delta * na * nb / total;
    }
    count_ += other.count_;
  }

  double mean(std::size_t j) const { return mean_[j]; }
  double variance(std::size_t j) const {
    return count_ > 0 ? m2_[j] / static_cast<double>(count_) : 0.0;
  }
  double stddev(std::size_t j) const { return std::sqrt(variance(j)); }

  template <typename T>
  void apply(const T* in, T* out, std::size_t rows) const {
    if (!fitted()) throw std::logic_error("scaler: apply before any update");
    std::size_t m = feature_dim();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double sd = std::max(stddev(j), 1e-8);
        out[i * m + j] =
            static_cast<T>((static_cast<double>(in[i * m + j]) - mean_[j]) / sd);
      }
    }
  }

  template <typename T>
  std::vector<T> apply(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    apply(in.data(), out.data(), in.size() / feature_dim());
    return out;
  }

 private:
  ScalerMode mode_ = ScalerMode::incremental;
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Running per-feature min-max map sending standardized features into [0,1]
// for the sigmoid-output generator; inverse returns to classifier space.
class GanSpaceTransform {
 public:
  GanSpaceTransform() = default;
  explicit GanSpaceTransform(std::size_t feature_dim)
      : min_(feature_dim, 0.0), max_(feature_dim, 0.0) {}

  bool fitted() const { return fitted_; }
  std::size_t feature_dim() const { return min_.size(); }

  template <typename T>
  void update(const T* batch, std::size_t rows) {
    std::size_t m = feature_dim();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double x = static_cast<double>(batch[i * m + j]);
        if (!fitted_) {
          min_[j] = std::min(i == 0 ? x : min_[j], x);
          max_[j] = std::max(i == 0 ? x : max_[j], x);
        } else {
          min_[j] = std::min(min_[j], x);
          max_[j] = std::max(max_[j], x);
        }
      }
      if (i == 0) fitted_ = true;
    }
  }

  template <typename T>
  void update(const std::vector<T>& batch) {
    update(batch.data(), batch.size() / feature_dim());
  }

  template <typename T>
  void forward(const T* in, T* out, std::size_t rows) const {
    require_fitted();
    std::size_t m = feature_dim();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double range = max_[j] - min_[j];
        out[i * m + j] =
            range == 0.0
                ? T(0.5)
                : static_cast<T>((static_cast<double>(in[i * m + j]) - min_[j]) /
                                 range);
      }
  }

  // Clamps to the observed range before mapping back.
  template <typename T>
  void inverse(const T* in, T* out, std::size_t rows) const {
    require_fitted();
    std::size_t m = feature_dim();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double v = std::clamp(static_cast<double>(in[i * m + j]), 0.0, 1.0);
        out[i * m + j] = static_cast<T>(min_[j] + v * (max_[j] - min_[j]));
      }
  }

  template <typename T>
  std::vector<T> forward(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    forward(in.data(), out.data(), in.size() / feature_dim());
    return out;
  }

  template <typename T>
  std::vector<T> inverse(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    inverse(in.data(), out.data(), in.size() / feature_dim());
    return out;
  }

  double min(std::size_t j) const { return min_[j]; }
  double max(std::size_t j) const { return max_[j]; }

 private:
  void require_fitted() const {
    if (!fitted_)
      throw std::logic_error("gan_space: transform used before fitting");
  }

  bool fitted_ = false;
  std::vector<double> min_;
  std::vector<double> max_;
};

}  // namespace replaycl

#endif  // REPLAYCL_SCALER_HPP
