#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "replaycl/models.hpp"
#include "replaycl/replay.hpp"
#include "replaycl/rng.hpp"

using namespace replaycl;

namespace {

ClassifierConfig tiny_clf() {
  ClassifierConfig c;
  c.conv_channels = {2, 3, 4};
  return c;
}

// A pool of random classifier-space candidates; gan_space mirrors it since
// these tests exercise selection, not the coordinate map.
SyntheticPool<double> random_pool(std::size_t n, std::size_t m,
                                  std::uint64_t seed) {
  RngEngine rng(seed);
  SyntheticPool<double> pool;
  pool.feature_dim = m;
  pool.source_task = 1;
  pool.classifier_space.resize(n * m);
  for (auto& v : pool.classifier_space) v = rng.gaussian();
  pool.gan_space = pool.classifier_space;
  return pool;
}

// Reference implementation: smallest-k by (distance, index).
std::vector<std::size_t> brute_k_smallest(const std::vector<double>& dist,
                                          std::size_t k) {
  std::vector<std::size_t> idx(dist.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace

TEST_CASE("k_smallest hand values and tie break") {
  std::vector<double> dist{3.0, 1.0, 2.0, 1.0};
  auto idx = detail::k_smallest(dist, 2);
  CHECK(idx == std::vector<std::size_t>{1, 3});
  auto idx3 = detail::k_smallest(dist, 3);
  CHECK(idx3 == std::vector<std::size_t>{1, 3, 2});
  // k beyond the list size is capped.
  CHECK(detail::k_smallest(dist, 99).size() == 4);
}

TEST_CASE("k_smallest equals the reference on randomized instances") {
  RngEngine rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(40);
    std::vector<double> dist(n);
    // Coarse quantization forces frequent ties.
    for (auto& v : dist) v = static_cast<double>(rng.below(6));
    std::size_t k = 1 + rng.below(n + 3);
    CHECK(detail::k_smallest(dist, k) == brute_k_smallest(dist, k));
  }
}

TEST_CASE("l2_labels matches brute force on randomized instances") {
  RngEngine seeds(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t m = 12, nc = 4;
    RngEngine wrng(100 + trial);
    auto clf = build_classifier<double>(m, nc, tiny_clf(), wrng);
    auto pool = random_pool(30 + seeds.below(30), m, 200 + trial);
    std::vector<std::uint32_t> seen{0, 1, 2, 3};
    std::size_t k = 1 + seeds.below(5);
    auto set = select_l2_labels(pool, clf, seen, k);

    auto probs = pool_probs(pool, clf);
    std::size_t n = pool.size();
    std::size_t cursor = 0;
    for (auto c : seen) {
      std::vector<double> dist(n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < nc; ++j) {
          double d = probs.at2(i, j) - (j == c ? 1.0 : 0.0);
          s += d * d;
        }
        dist[i] = std::sqrt(s);
      }
      for (auto i : brute_k_smallest(dist, k)) {
        CHECK(set.labels[cursor] == c);
        CHECK(set.distances[cursor] == doctest::Approx(dist[i]));
        for (std::size_t j = 0; j < m; ++j)
          CHECK(set.classifier_space[cursor * m + j] ==
                pool.classifier_space[i * m + j]);
        ++cursor;
      }
    }
    CHECK(cursor == set.size());
  }
}

TEST_CASE("l2_labels is balanced: exactly k per seen class") {
  RngEngine wrng(3);
  auto clf = build_classifier<double>(12, 5, tiny_clf(), wrng);
  auto pool = random_pool(60, 12, 4);
  auto set = select_l2_labels(pool, clf, {0, 2, 4}, 7);
  CHECK(set.size() == 3 * 7);
  CHECK(set.per_class_counts.at(0) == 7);
  CHECK(set.per_class_counts.at(2) == 7);
  CHECK(set.per_class_counts.at(4) == 7);
  CHECK(set.per_class_counts.count(1) == 0);
}

TEST_CASE("l2_labels rejects classes beyond the head and empty pools") {
  RngEngine wrng(5);
  auto clf = build_classifier<double>(12, 3, tiny_clf(), wrng);
  auto pool = random_pool(10, 12, 6);
  CHECK_THROWS_AS(select_l2_labels(pool, clf, {0, 3}, 2),
                  std::invalid_argument);
  SyntheticPool<double> empty;
  empty.feature_dim = 12;
  CHECK_THROWS_AS(select_l2_labels(empty, clf, {0}, 2), std::invalid_argument);
}

TEST_CASE("class_mean_logits averages logit taps per class") {
  RngEngine wrng(7);
  std::size_t m = 12;
  auto clf = build_classifier<double>(m, 3, tiny_clf(), wrng);
  RngEngine drng(8);
  std::size_t n = 10;
  std::vector<double> feats(n * m);
  for (auto& v : feats) v = drng.gaussian();
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 2;
  auto centroids = class_mean_logits(clf, feats, labels, m);
  REQUIRE(centroids.size() == 2);

  // Independent recomputation, one row at a time.
  for (std::uint32_t c : {0u, 1u}) {
    std::vector<double> sum(clf.logit_dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != c) continue;
      Tensor<double> x({1, m});
      std::copy_n(&feats[i * m], m, x.data.data());
      auto l = clf.logits(x, {});
      for (std::size_t j = 0; j < clf.logit_dim; ++j) sum[j] += l.data[j];
      ++count;
    }
    for (std::size_t j = 0; j < clf.logit_dim; ++j)
      CHECK(centroids.at(c)[j] == doctest::Approx(sum[j] / count));
  }
}

TEST_CASE("l1_cmean matches brute force on randomized instances") {
  RngEngine seeds(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t m = 12, nc = 3;
    RngEngine wrng(300 + trial);
    auto clf = build_classifier<double>(m, nc, tiny_clf(), wrng);
    auto pool = random_pool(25 + seeds.below(25), m, 400 + trial);

    // Centroids from a small labeled sample.
    RngEngine drng(500 + trial);
    std::size_t n_data = 12;
    std::vector<double> feats(n_data * m);
    for (auto& v : feats) v = drng.gaussian();
    std::vector<std::uint32_t> labels(n_data);
    for (std::size_t i = 0; i < n_data; ++i)
      labels[i] = static_cast<std::uint32_t>(i % nc);
    auto centroids = class_mean_logits(clf, feats, labels, m);

    std::size_t k = 1 + seeds.below(4);
    auto set = select_l1_cmean(pool, clf, centroids, k);

    auto logits = pool_logits(pool, clf);
    std::size_t n = pool.size();
    std::size_t cursor = 0;
    for (const auto& [c, centroid] : centroids) {
      std::vector<double> dist(n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < clf.logit_dim; ++j)
          s += std::abs(logits.at2(i, j) - centroid[j]);
        dist[i] = s;
      }
      for (auto i : brute_k_smallest(dist, k)) {
        CHECK(set.labels[cursor] == c);
        CHECK(set.distances[cursor] == doctest::Approx(dist[i]));
        ++cursor;
      }
    }
    CHECK(cursor == set.size());
  }
}

TEST_CASE("l1_cmean validates inputs") {
  RngEngine wrng(11);
  auto clf = build_classifier<double>(12, 3, tiny_clf(), wrng);
  auto pool = random_pool(10, 12, 12);
  std::map<std::uint32_t, std::vector<double>> empty;
  CHECK_THROWS_AS(select_l1_cmean(pool, clf, empty, 2), std::invalid_argument);
  std::map<std::uint32_t, std::vector<double>> bad;
  bad[0] = std::vector<double>(clf.logit_dim + 1, 0.0);
  CHECK_THROWS_AS(select_l1_cmean(pool, clf, bad, 2), std::invalid_argument);
}

TEST_CASE("l1_bmean matches brute force and labels by argmax") {
  RngEngine seeds(13);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t m = 12, nc = 3;
    RngEngine wrng(600 + trial);
    auto clf = build_classifier<double>(m, nc, tiny_clf(), wrng);
    auto pool = random_pool(40, m, 700 + trial);

    RngEngine drng(800 + trial);
    std::vector<double> feats(20 * m);
    for (auto& v : feats) v = drng.gaussian();
    auto centroids = batch_mean_logits(clf, feats, m, 8);
    REQUIRE(centroids.size() == 3);  // 8 + 8 + 4

    std::size_t budget = 5 + seeds.below(10);
    auto set = select_l1_bmean(pool, clf, centroids, budget);
    CHECK(set.size() == budget);

    auto logits = pool_logits(pool, clf);
    auto probs = pool_probs(pool, clf);
    std::vector<double> dist(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double best = 1e300;
      for (const auto& centroid : centroids) {
        double s = 0;
        for (std::size_t j = 0; j < clf.logit_dim; ++j)
          s += std::abs(logits.at2(i, j) - centroid[j]);
        best = std::min(best, s);
      }
      dist[i] = best;
    }
    auto expect = brute_k_smallest(dist, budget);
    for (std::size_t r = 0; r < budget; ++r) {
      std::size_t i = expect[r];
      CHECK(set.distances[r] == doctest::Approx(dist[i]));
      std::uint32_t argmax = 0;
      for (std::size_t j = 1; j < nc; ++j)
        if (probs.at2(i, j) > probs.at2(i, argmax))
          argmax = static_cast<std::uint32_t>(j);
      CHECK(set.labels[r] == argmax);
    }
    // Per-class counts sum to the budget but carry no balance guarantee.
    std::size_t total = 0;
    for (const auto& [c, cnt] : set.per_class_counts) total += cnt;
    CHECK(total == budget);
  }
}

TEST_CASE("selection is deterministic") {
  RngEngine wrng(15);
  auto clf = build_classifier<double>(12, 4, tiny_clf(), wrng);
  auto pool = random_pool(30, 12, 16);
  auto a = select_l2_labels(pool, clf, {0, 1, 2, 3}, 3);
  auto b = select_l2_labels(pool, clf, {0, 1, 2, 3}, 3);
  CHECK(a.labels == b.labels);
  CHECK(a.classifier_space == b.classifier_space);
  CHECK(a.distances == b.distances);
}

TEST_CASE("replay_class_coverage counts classes with any sample") {
  ReplaySet<double> set;
  set.per_class_counts[1] = 3;
  set.per_class_counts[4] = 1;
  CHECK(replay_class_coverage(set, {0, 1, 2, 3, 4}) == 2);
  CHECK(replay_class_coverage(set, {0, 2, 3}) == 0);
  CHECK(replay_class_coverage(set, {}) == 0);
}

TEST_CASE("generate_pool produces both coordinate systems consistently") {
  RngStreams rng(17);
  GeneratorConfig gcfg;
  gcfg.noise_dim = 8;
  gcfg.conv_channels = {4, 4, 4, 4};
  gcfg.fc1 = 16;
  gcfg.deconv_channels = {8, 4, 4};
  std::size_t m = 16;
  auto gen = build_generator<double>(m, gcfg, rng.weight_init());

  GanSpaceTransform gan_space(m);
  std::vector<double> stats(4 * m);
  RngEngine srng(18);
  for (auto& v : stats) v = srng.uniform(-3, 3);
  gan_space.update(stats);

  auto pool = generate_pool(gen, gan_space, 37, 2, rng.noise());
  CHECK(pool.size() == 37);
  CHECK(pool.source_task == 2);
  for (double v : pool.gan_space) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // Classifier-space rows are exactly the inverse map of the raw rows.
  auto expect = gan_space.inverse(pool.gan_space);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(pool.classifier_space[i] == doctest::Approx(expect[i]));

  // Same seed, same pool.
  RngStreams rng2(17);
  auto gen2 = build_generator<double>(m, gcfg, rng2.weight_init());
  auto pool2 = generate_pool(gen2, gan_space, 37, 2, rng2.noise());
  CHECK(pool.gan_space == pool2.gan_space);
}
