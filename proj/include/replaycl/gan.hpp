#ifndef REPLAYCL_GAN_HPP
#define REPLAYCL_GAN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/layers.hpp"
#include "replaycl/models.hpp"
#include "replaycl/optim.hpp"
#include "replaycl/rng.hpp"
#include "replaycl/tensor.hpp"

namespace replaycl {

enum class GeneratorLoss { bce, fml };

// Ambiguity in the feature-matching objective: the default compares the
// norm of the difference of batch-mean taps; the alternative averages
// per-sample norms against the real batch mean.
enum class FmlReduction { mean_norm, per_sample };

struct GanTrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  GeneratorLoss generator_loss = GeneratorLoss::fml;
  FmlReduction fml_reduction = FmlReduction::mean_norm;

  void validate() const {
    if (batch_size < 2)
      throw std::invalid_argument("gan: batch_size must be >= 2");
    if (epochs < 1) throw std::invalid_argument("gan: epochs must be >= 1");
  }
};

struct EpochLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

inline constexpr double kProbClamp = 1e-7;

// Tracks how often the log-argument clamp fires; well-scaled runs keep it
// at zero.
struct ClampCounter {
  std::size_t activations = 0;
  double clamp(double p) {
    if (p < kProbClamp || p > 1.0 - kProbClamp) ++activations;
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  }
};

// -(1/m) sum log D(G(z_i)), the flipped-label generator objective.
template <typename T>
double bce_generator_loss(const Tensor<T>& d_on_fake,
                          ClampCounter* counter = nullptr) {
  if (d_on_fake.numel() == 0)
    throw std::invalid_argument("gan: empty batch in generator loss");
  ClampCounter local;
  ClampCounter& cc = counter ? *counter : local;
  double loss = 0;
  for (T v : d_on_fake.data) loss -= std::log(cc.clamp(v));
  return loss / static_cast<double>(d_on_fake.numel());
}

// Discriminator objective, negated for minimization:
// -(1/m) sum [log D(x'_i) + log(1 - D(G(z_i)))].
template <typename T>
double discriminator_loss(const Tensor<T>& d_on_real,
                          const Tensor<T>& d_on_fake,
                          ClampCounter* counter = nullptr) {
  ClampCounter local;
  ClampCounter& cc = counter ? *counter : local;
  double loss = 0;
  for (T v : d_on_real.data) loss -= std::log(cc.clamp(v));
  for (T v : d_on_fake.data) loss -= std::log(1.0 - cc.clamp(v));
  std::size_t m = std::max<std::size_t>(d_on_real.numel(), 1);
  std::size_t mf = std::max<std::size_t>(d_on_fake.numel(), 1);
  return loss / static_cast<double>(std::max(m, mf));
}

// Norm of the difference between batch-mean discriminator taps (or, under
// per_sample reduction, mean per-sample distance to the real mean tap).
template <typename T>
double feature_matching_loss(const Tensor<T>& real_feats,
                             const Tensor<T>& fake_feats,
                             FmlReduction reduction = FmlReduction::mean_norm) {
  if (real_feats.numel() == 0 || fake_feats.numel() == 0)
    throw std::invalid_argument("gan: empty batch in feature matching loss");
  if (real_feats.shape[1] != fake_feats.shape[1])
    throw std::invalid_argument("gan: feature dims differ");
  std::size_t d = real_feats.shape[1];
  std::size_t br = real_feats.shape[0], bf = fake_feats.shape[0];
  std::vector<double> mean_real(d, 0.0);
  for (std::size_t i = 0; i < br; ++i)
    for (std::size_t j = 0; j < d; ++j) mean_real[j] += real_feats.at2(i, j);
  for (auto& v : mean_real) v /= static_cast<double>(br);
  if (reduction == FmlReduction::mean_norm) {
    std::vector<double> mean_fake(d, 0.0);
    for (std::size_t i = 0; i < bf; ++i)
      for (std::size_t j = 0; j < d; ++j) mean_fake[j] += fake_feats.at2(i, j);
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = mean_real[j] - mean_fake[j] / static_cast<double>(bf);
      s += diff * diff;
    }
    return std::sqrt(s);
  }
  double total = 0;
  for (std::size_t i = 0; i < bf; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = mean_real[j] - fake_feats.at2(i, j);
      s += diff * diff;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(bf);
}

// Gradient of feature_matching_loss w.r.t. the fake taps.
template <typename T>
Tensor<T> feature_matching_grad(const Tensor<T>& real_feats,
                                const Tensor<T>& fake_feats,
                                FmlReduction reduction) {
  std::size_t d = real_feats.shape[1];
  std::size_t br = real_feats.shape[0], bf = fake_feats.shape[0];
  std::vector<double> mean_real(d, 0.0);
  for (std::size_t i = 0; i < br; ++i)
    for (std::size_t j = 0; j < d; ++j) mean_real[j] += real_feats.at2(i, j);
  for (auto& v : mean_real) v /= static_cast<double>(br);
  Tensor<T> grad(fake_feats.shape);
  if (reduction == FmlReduction::mean_norm) {
    std::vector<double> diff(d, 0.0);
    for (std::size_t i = 0; i < bf; ++i)
      for (std::size_t j = 0; j < d; ++j) diff[j] += fake_feats.at2(i, j);
    double norm = 0;
    for (std::size_t j = 0; j < d; ++j) {
      diff[j] = mean_real[j] - diff[j] / static_cast<double>(bf);
      norm += diff[j] * diff[j];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return grad;
    for (std::size_t i = 0; i < bf; ++i)
      for (std::size_t j = 0; j < d; ++j)
        grad.at2(i, j) =
            static_cast<T>(-diff[j] / (norm * static_cast<double>(bf)));
    return grad;
  }
  for (std::size_t i = 0; i < bf; ++i) {
    double norm = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double e = mean_real[j] - fake_feats.at2(i, j);
      norm += e * e;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j)
      grad.at2(i, j) = static_cast<T>(-(mean_real[j] - fake_feats.at2(i, j)) /
                                      (norm * static_cast<double>(bf)));
  }
  return grad;
}

struct GanTrainResult {
  std::vector<EpochLosses> history;
  std::size_t d_steps = 0;
  std::size_t g_steps = 0;
  std::size_t clamp_activations = 0;
};

template <typename T>
Tensor<T> sample_noise(std::size_t batch, std::size_t noise_dim,
                       RngEngine& rng) {
  Tensor<T> z({batch, noise_dim});
  for (auto& v : z.data) v = static_cast<T>(rng.gaussian());
  return z;
}

// One D step then one G step per batch. Real data lives in GAN space
// ([0,1]^m rows); generator and discriminator are updated in place.
template <typename T>
GanTrainResult train_gan(const std::vector<T>& data, std::size_t m,
                         Generator<T>& gen, Discriminator<T>& disc,
                         const GanTrainConfig& config, RngStreams& rng) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("gan: empty training data");
  std::size_t count = data.size() / m;
  GanTrainResult result;
  Adam<T> opt_g(config.lr_g, config.beta1, config.beta2);
  Adam<T> opt_d(config.lr_d, config.beta1, config.beta2);
  ClampCounter clamps;
  RunContext train_ctx{true, &rng.dropout()};

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.data_shuffle().shuffle(order.begin(), order.end());
    double d_sum = 0, g_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < count; start += config.batch_size) {
      std::size_t bs = std::min(config.batch_size, count - start);
      if (bs < 2) break;  // batch norm needs >= 2 rows
      Tensor<T> real({bs, m});
      for (std::size_t i = 0; i < bs; ++i)
        std::copy_n(&data[order[start + i] * m], m, &real.data[i * m]);

      // Discriminator step. Real and fake rows go through one combined
      // forward so batch-norm statistics mix both populations; a pure-real
      // or pure-fake batch would be re-centered by its own statistics and
      // the location difference the discriminator needs would vanish.
      Tensor<T> z = sample_noise<T>(bs, gen.config.noise_dim, rng.noise());
      Tensor<T> fake = gen.forward(z, train_ctx);
      Tensor<T> both({2 * bs, m});
      std::copy_n(real.data.data(), bs * m, both.data.data());
      std::copy_n(fake.data.data(), bs * m, both.data.data() + bs * m);
      disc.net.zero_grad();
      Tensor<T> d_out_both = disc.forward(both, train_ctx);
      double d_loss_real = 0, d_loss_fake = 0;
      {
        Tensor<T> g(d_out_both.shape);
        for (std::size_t i = 0; i < bs; ++i) {
          double p = clamps.clamp(d_out_both.data[i]);
          d_loss_real -= std::log(p);
          g.data[i] = static_cast<T>(-1.0 / (p * static_cast<double>(bs)));
        }
        for (std::size_t i = bs; i < 2 * bs; ++i) {
          double p = clamps.clamp(d_out_both.data[i]);
          d_loss_fake -= std::log(1.0 - p);
          g.data[i] = static_cast<T>(1.0 / ((1.0 - p) * static_cast<double>(bs)));
        }
        disc.net.backward(g);
      }
      double d_loss = (d_loss_real + d_loss_fake) / static_cast<double>(bs);
      if (!std::isfinite(d_loss))
        throw std::runtime_error("gan: non-finite discriminator loss at epoch " +
                                 std::to_string(epoch + 1));
      opt_d.step(disc.net.parameters());
      ++result.d_steps;

      // Generator step on fresh noise.
      z = sample_noise<T>(bs, gen.config.noise_dim, rng.noise());
      gen.net.zero_grad();
      disc.net.zero_grad();
      double g_loss = 0;
      Tensor<T> grad_both;
      Tensor<T> fake2 = gen.forward(z, train_ctx);
      std::copy_n(fake2.data.data(), bs * m, both.data.data() + bs * m);
      if (config.generator_loss == GeneratorLoss::bce) {
        Tensor<T> d_out = disc.forward(both, train_ctx);
        Tensor<T> g(d_out.shape);
        for (std::size_t i = bs; i < 2 * bs; ++i) {
          double p = clamps.clamp(d_out.data[i]);
          g_loss -= std::log(p);
          g.data[i] = static_cast<T>(-1.0 / (p * static_cast<double>(bs)));
        }
        g_loss /= static_cast<double>(bs);
        grad_both = disc.net.backward(g);
      } else {
        disc.forward(both, train_ctx);
        Tensor<T> tap = disc.last_features();
        std::size_t td = tap.shape[1];
        Tensor<T> real_tap({bs, td}), fake_tap({bs, td});
        std::copy_n(tap.data.data(), bs * td, real_tap.data.data());
        std::copy_n(tap.data.data() + bs * td, bs * td, fake_tap.data.data());
        g_loss = feature_matching_loss(real_tap, fake_tap, config.fml_reduction);
        Tensor<T> fg = feature_matching_grad(real_tap, fake_tap,
                                             config.fml_reduction);
        // Real taps are constants for the generator objective; their grad
        // rows stay zero and only the fake half flows back.
        Tensor<T> g(tap.shape);
        std::copy_n(fg.data.data(), bs * td, g.data.data() + bs * td);
        grad_both = disc.net.backward_from(disc.tap_index, g);
      }
      if (!std::isfinite(g_loss))
        throw std::runtime_error("gan: non-finite generator loss at epoch " +
                                 std::to_string(epoch + 1));
      Tensor<T> grad_input({bs, m});
      std::copy_n(grad_both.data.data() + bs * m, bs * m,
                  grad_input.data.data());
      gen.net.backward(grad_input);
      opt_g.step(gen.net.parameters());
      ++result.g_steps;

      d_sum += d_loss;
      g_sum += g_loss;
      ++batches;
    }
    if (batches == 0)
      throw std::runtime_error("gan: no usable batch (need >= 2 samples)");
    result.history.push_back({d_sum / batches, g_sum / batches});
  }
  result.clamp_activations = clamps.activations;
  return result;
}

inline void export_loss_history(const std::vector<EpochLosses>& history,
                                const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("gan: cannot write loss history: " + path);
  os << "epoch,d_loss,g_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    os << (i + 1) << "," << history[i].d_loss << "," << history[i].g_loss
       << "\n";
}

}  // namespace replaycl

#endif  // REPLAYCL_GAN_HPP
