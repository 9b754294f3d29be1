#ifndef REPLAYCL_REPLAY_HPP
#define REPLAYCL_REPLAY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/gan.hpp"
#include "replaycl/models.hpp"
#include "replaycl/rng.hpp"
#include "replaycl/scaler.hpp"
#include "replaycl/tensor.hpp"

namespace replaycl {

enum class SelectionScheme { l2_labels, l1_cmean, l1_bmean };

inline std::string scheme_name(SelectionScheme s) {
  switch (s) {
    case SelectionScheme::l2_labels: return "l2_labels";
    case SelectionScheme::l1_cmean: return "l1_cmean";
    default: return "l1_bmean";
  }
}

struct SelectionConfig {
  SelectionScheme scheme = SelectionScheme::l1_cmean;
  std::size_t k = 20;            // per class (or per batch for the global scheme)
  std::size_t batch_count = 1;   // the global scheme's batch multiplier
  std::size_t pool_factor = 10;

  void validate() const {
    if (k < 1) throw std::invalid_argument("selection: k must be >= 1");
    if (pool_factor < 1)
      throw std::invalid_argument("selection: pool_factor must be >= 1");
  }
};

// Generator candidates in both coordinate systems. GAN-space rows are the
// raw sigmoid outputs; classifier-space twins are the inverse-mapped
// standardized vectors the classifier consumes.
template <typename T>
struct SyntheticPool {
  std::size_t feature_dim = 0;
  std::size_t source_task = 0;
  std::vector<T> gan_space;         // pool_size x m
  std::vector<T> classifier_space;  // pool_size x m

  std::size_t size() const {
    return feature_dim == 0 ? 0 : gan_space.size() / feature_dim;
  }
};

// Selected replay samples. Classifier-space rows feed classifier training;
// GAN-space rows re-enter GAN training as real data.
template <typename T>
struct ReplaySet {
  std::size_t feature_dim = 0;
  SelectionScheme scheme = SelectionScheme::l1_cmean;
  std::size_t source_task = 0;
  std::vector<T> classifier_space;
  std::vector<T> gan_space;
  std::vector<std::uint32_t> labels;
  std::vector<double> distances;  // distance of each chosen sample
  std::map<std::uint32_t, std::size_t> per_class_counts;

  std::size_t size() const { return labels.size(); }

  void append(const SyntheticPool<T>& pool, std::size_t candidate,
              std::uint32_t label, double distance) {
    std::size_t m = pool.feature_dim;
    classifier_space.insert(classifier_space.end(),
                            pool.classifier_space.begin() + candidate * m,
                            pool.classifier_space.begin() + (candidate + 1) * m);
    gan_space.insert(gan_space.end(), pool.gan_space.begin() + candidate * m,
                     pool.gan_space.begin() + (candidate + 1) * m);
    labels.push_back(label);
    distances.push_back(distance);
    ++per_class_counts[label];
  }
};

template <typename T>
SyntheticPool<T> generate_pool(Generator<T>& gen,
                               const GanSpaceTransform& gan_space,
                               std::size_t count, std::size_t task_index,
                               RngEngine& noise_rng) {
  SyntheticPool<T> pool;
  pool.feature_dim = gen.output_dim;
  pool.source_task = task_index;
  if (count == 0) return pool;
  RunContext eval_ctx{false, nullptr};
  std::size_t chunk = 256;
  for (std::size_t start = 0; start < count; start += chunk) {
    std::size_t bs = std::min(chunk, count - start);
    Tensor<T> z = sample_noise<T>(bs, gen.config.noise_dim, noise_rng);
    Tensor<T> out = gen.forward(z, eval_ctx);
    pool.gan_space.insert(pool.gan_space.end(), out.data.begin(),
                          out.data.end());
  }
  pool.classifier_space.resize(pool.gan_space.size());
  gan_space.inverse(pool.gan_space.data(), pool.classifier_space.data(), count);
  return pool;
}

namespace detail {

// Indices of the k smallest distances, ties broken by ascending index.
inline std::vector<std::size_t> k_smallest(const std::vector<double>& dist,
                                           std::size_t k) {
  std::vector<std::size_t> idx(dist.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

}  // namespace detail

// Classifier softmax rows for every pool candidate, eval mode.
template <typename T>
Tensor<T> pool_probs(const SyntheticPool<T>& pool, Classifier<T>& clf) {
  RunContext eval_ctx{false, nullptr};
  std::size_t n = pool.size(), m = pool.feature_dim;
  Tensor<T> out({n, clf.class_count});
  std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t bs = std::min(chunk, n - start);
    Tensor<T> x({bs, m});
    std::copy_n(&pool.classifier_space[start * m], bs * m, x.data.data());
    Tensor<T> p = clf.probs(x, eval_ctx);
    std::copy_n(p.data.data(), bs * clf.class_count,
                &out.data[start * clf.class_count]);
  }
  return out;
}

// Logit-tap rows for every pool candidate, eval mode.
template <typename T>
Tensor<T> pool_logits(const SyntheticPool<T>& pool, Classifier<T>& clf) {
  RunContext eval_ctx{false, nullptr};
  std::size_t n = pool.size(), m = pool.feature_dim;
  Tensor<T> out({n, clf.logit_dim});
  std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t bs = std::min(chunk, n - start);
    Tensor<T> x({bs, m});
    std::copy_n(&pool.classifier_space[start * m], bs * m, x.data.data());
    Tensor<T> l = clf.logits(x, eval_ctx);
    std::copy_n(l.data.data(), bs * clf.logit_dim,
                &out.data[start * clf.logit_dim]);
  }
  return out;
}

// Per class, the k candidates whose softmax output is L2-closest to the
// one-hot label. A candidate may serve several classes.
template <typename T>
ReplaySet<T> select_l2_labels(const SyntheticPool<T>& pool, Classifier<T>& clf,
                              const std::vector<std::uint32_t>& seen_classes,
                              std::size_t k) {
  if (pool.size() == 0)
    throw std::invalid_argument("selection: empty candidate pool");
  Tensor<T> probs = pool_probs(pool, clf);
  std::size_t n = pool.size(), nc = clf.class_count;
  ReplaySet<T> out;
  out.feature_dim = pool.feature_dim;
  out.scheme = SelectionScheme::l2_labels;
  out.source_task = pool.source_task;
  for (auto c : seen_classes) {
    if (c >= nc)
      throw std::invalid_argument("selection: class " + std::to_string(c) +
                                  " not covered by classifier head");
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < nc; ++j) {
        double d = static_cast<double>(probs.at2(i, j)) - (j == c ? 1.0 : 0.0);
        s += d * d;
      }
      dist[i] = std::sqrt(s);
    }
    for (std::size_t i : detail::k_smallest(dist, k))
      out.append(pool, i, c, dist[i]);
  }
  return out;
}

// Mean logit-tap vector per class over labeled data (eval mode).
template <typename T>
std::map<std::uint32_t, std::vector<double>> class_mean_logits(
    Classifier<T>& clf, const std::vector<T>& features,
    const std::vector<std::uint32_t>& labels, std::size_t m) {
  RunContext eval_ctx{false, nullptr};
  std::map<std::uint32_t, std::vector<double>> sums;
  std::map<std::uint32_t, std::size_t> counts;
  std::size_t n = labels.size();
  std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t bs = std::min(chunk, n - start);
    Tensor<T> x({bs, m});
    std::copy_n(&features[start * m], bs * m, x.data.data());
    Tensor<T> l = clf.logits(x, eval_ctx);
    for (std::size_t i = 0; i < bs; ++i) {
      auto c = labels[start + i];
      auto& s = sums[c];
      if (s.empty()) s.assign(clf.logit_dim, 0.0);
      for (std::size_t j = 0; j < clf.logit_dim; ++j) s[j] += l.at2(i, j);
      ++counts[c];
    }
  }
  for (auto& [c, s] : sums)
    for (auto& v : s) v /= static_cast<double>(counts[c]);
  return sums;
}

// Per class, the k candidates whose logit tap is L1-closest to the class
// centroid; balanced by construction (k per class when the pool allows).
template <typename T>
ReplaySet<T> select_l1_cmean(
    const SyntheticPool<T>& pool, Classifier<T>& clf,
    const std::map<std::uint32_t, std::vector<double>>& centroids,
    std::size_t k) {
  if (pool.size() == 0)
    throw std::invalid_argument("selection: empty candidate pool");
  if (centroids.empty())
    throw std::invalid_argument("selection: no class centroids");
  Tensor<T> logits = pool_logits(pool, clf);
  std::size_t n = pool.size(), d = clf.logit_dim;
  ReplaySet<T> out;
  out.feature_dim = pool.feature_dim;
  out.scheme = SelectionScheme::l1_cmean;
  out.source_task = pool.source_task;
  for (const auto& [c, centroid] : centroids) {
    if (centroid.size() != d)
      throw std::invalid_argument("selection: centroid dim mismatch");
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j)
        s += std::abs(static_cast<double>(logits.at2(i, j)) - centroid[j]);
      dist[i] = s;
    }
    for (std::size_t i : detail::k_smallest(dist, k))
      out.append(pool, i, c, dist[i]);
  }
  return out;
}

// Mean logit-tap vector per training batch of the just-finished task.
template <typename T>
std::vector<std::vector<double>> batch_mean_logits(
    Classifier<T>& clf, const std::vector<T>& features, std::size_t m,
    std::size_t batch_size) {
  RunContext eval_ctx{false, nullptr};
  std::size_t n = features.size() / m;
  if (n == 0) throw std::invalid_argument("selection: empty batches");
  std::vector<std::vector<double>> centroids;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t bs = std::min(batch_size, n - start);
    Tensor<T> x({bs, m});
    std::copy_n(&features[start * m], bs * m, x.data.data());
    Tensor<T> l = clf.logits(x, eval_ctx);
    std::vector<double> mean(clf.logit_dim, 0.0);
    for (std::size_t i = 0; i < bs; ++i)
      for (std::size_t j = 0; j < clf.logit_dim; ++j) mean[j] += l.at2(i, j);
    for (auto& v : mean) v /= static_cast<double>(bs);
    centroids.push_back(std::move(mean));
  }
  return centroids;
}

// Global scheme: the k * batch_count candidates closest (L1, nearest batch
// centroid) overall, each labeled by the classifier's argmax. Per-class
// counts are unconstrained; zero-coverage classes are possible.
template <typename T>
ReplaySet<T> select_l1_bmean(const SyntheticPool<T>& pool, Classifier<T>& clf,
                             const std::vector<std::vector<double>>& centroids,
                             std::size_t budget) {
  if (pool.size() == 0)
    throw std::invalid_argument("selection: empty candidate pool");
  if (centroids.empty())
    throw std::invalid_argument("selection: no batch centroids");
  Tensor<T> logits = pool_logits(pool, clf);
  Tensor<T> probs = pool_probs(pool, clf);
  std::size_t n = pool.size(), d = clf.logit_dim;
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& centroid : centroids) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j)
        s += std::abs(static_cast<double>(logits.at2(i, j)) - centroid[j]);
      best = std::min(best, s);
    }
    dist[i] = best;
  }
  ReplaySet<T> out;
  out.feature_dim = pool.feature_dim;
  out.scheme = SelectionScheme::l1_bmean;
  out.source_task = pool.source_task;
  for (std::size_t i : detail::k_smallest(dist, budget)) {
    std::uint32_t label = 0;
    T best = probs.at2(i, 0);
    for (std::size_t j = 1; j < clf.class_count; ++j)
      if (probs.at2(i, j) > best) {
        best = probs.at2(i, j);
        label = static_cast<std::uint32_t>(j);
      }
    out.append(pool, i, label, dist[i]);
  }
  return out;
}

// Number of seen classes with at least one replay sample (the mode-collapse
// diagnostic behind the coverage report).
template <typename T>
std::size_t replay_class_coverage(const ReplaySet<T>& set,
                                  const std::vector<std::uint32_t>& seen) {
  std::size_t covered = 0;
  for (auto c : seen)
    if (auto it = set.per_class_counts.find(c);
        it != set.per_class_counts.end() && it->second > 0)
      ++covered;
  return covered;
}

}  // namespace replaycl

#endif  // REPLAYCL_REPLAY_HPP
