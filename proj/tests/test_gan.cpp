#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "replaycl/gan.hpp"

using namespace replaycl;

namespace {

// Small models so the smoke training runs in seconds.
GeneratorConfig tiny_gen() {
  GeneratorConfig c;
  c.noise_dim = 8;
  c.conv_channels = {4, 4, 4, 4};
  c.fc1 = 16;
  c.deconv_channels = {8, 4, 4};
  return c;
}

DiscriminatorConfig tiny_disc() {
  DiscriminatorConfig c;
  c.conv_channels = {4, 8};
  c.fc1 = 16;
  return c;
}

std::vector<float> blob_data(std::size_t count, std::size_t m,
                             std::uint64_t seed) {
  RngEngine rng(seed);
  std::vector<float> data(count * m);
  // Two tight blobs inside [0,1]^m.
  for (std::size_t i = 0; i < count; ++i) {
    double center = i % 2 == 0 ? 0.3 : 0.7;
    for (std::size_t j = 0; j < m; ++j)
      data[i * m + j] = static_cast<float>(
          std::clamp(center + 0.05 * rng.gaussian(), 0.0, 1.0));
  }
  return data;
}

}  // namespace

TEST_CASE("generator bce loss hand values") {
  Tensor<double> ones({2, 1}, {1.0, 1.0});
  CHECK(bce_generator_loss(ones) == doctest::Approx(0.0).epsilon(1e-6));

  Tensor<double> half({1, 1}, {0.5});
  CHECK(bce_generator_loss(half) == doctest::Approx(std::log(2.0)));

  Tensor<double> mixed({2, 1}, {0.5, 1.0});
  CHECK(bce_generator_loss(mixed) == doctest::Approx(std::log(2.0) / 2.0));

  Tensor<double> empty({0, 1}, {});
  CHECK_THROWS_AS(bce_generator_loss(empty), std::invalid_argument);
}

TEST_CASE("discriminator loss hand values and symmetry") {
  Tensor<double> real({2, 1}, {0.5, 0.5});
  Tensor<double> fake({2, 1}, {0.5, 0.5});
  // Undecided discriminator: -(1/2)[2 log .5 + 2 log .5] = 2 ln 2.
  CHECK(discriminator_loss(real, fake) == doctest::Approx(2.0 * std::log(2.0)));

  // Perfect discriminator: loss about 0.
  Tensor<double> good_real({2, 1}, {1.0, 1.0});
  Tensor<double> good_fake({2, 1}, {0.0, 0.0});
  CHECK(discriminator_loss(good_real, good_fake) ==
        doctest::Approx(0.0).epsilon(1e-5));

  // Symmetry: swapping p on real with 1-p on fake leaves the loss unchanged.
  Tensor<double> a({1, 1}, {0.8});
  Tensor<double> b({1, 1}, {0.3});
  Tensor<double> a2({1, 1}, {0.7});
  Tensor<double> b2({1, 1}, {0.2});
  CHECK(discriminator_loss(a, b) == doctest::Approx(discriminator_loss(a2, b2)));
}

TEST_CASE("clamp counter records saturated probabilities") {
  ClampCounter cc;
  cc.clamp(0.5);
  cc.clamp(0.25);
  CHECK(cc.activations == 0);
  cc.clamp(0.0);
  cc.clamp(1.0);
  CHECK(cc.activations == 2);
}

TEST_CASE("feature matching loss hand value") {
  // mean real = (1, 2), mean fake = (2, 0): diff (-1, 2), norm sqrt(5).
  Tensor<double> real({2, 2}, {0, 1, 2, 3});
  Tensor<double> fake({2, 2}, {1, -1, 3, 1});
  CHECK(feature_matching_loss(real, fake) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("feature matching loss is zero on identical batches") {
  Tensor<double> x({3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  CHECK(feature_matching_loss(x, x) == doctest::Approx(0.0));
}

TEST_CASE("feature matching loss is invariant to row permutation") {
  Tensor<double> real({2, 2}, {0, 1, 2, 3});
  Tensor<double> fake({2, 2}, {1, -1, 3, 1});
  Tensor<double> fake_perm({2, 2}, {3, 1, 1, -1});
  CHECK(feature_matching_loss(real, fake) ==
        doctest::Approx(feature_matching_loss(real, fake_perm)));
}

TEST_CASE("feature matching gradient matches finite differences") {
  RngEngine rng(3);
  Tensor<double> real({3, 5}), fake({4, 5});
  for (auto& v : real.data) v = rng.gaussian();
  for (auto& v : fake.data) v = rng.gaussian();
  for (auto reduction : {FmlReduction::mean_norm, FmlReduction::per_sample}) {
    auto grad = feature_matching_grad(real, fake, reduction);
    double h = 1e-6;
    for (std::size_t i = 0; i < fake.numel(); i += 3) {
      Tensor<double> plus = fake, minus = fake;
      plus.data[i] += h;
      minus.data[i] -= h;
      double fd = (feature_matching_loss(real, plus, reduction) -
                   feature_matching_loss(real, minus, reduction)) /
                  (2 * h);
      CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("per-sample reduction upper-bounds the mean-norm reduction") {
  // Jensen: || mean diff || <= mean || diff ||.
  RngEngine rng(4);
  Tensor<double> real({4, 3}), fake({5, 3});
  for (auto& v : real.data) v = rng.gaussian();
  for (auto& v : fake.data) v = rng.gaussian();
  CHECK(feature_matching_loss(real, fake, FmlReduction::mean_norm) <=
        feature_matching_loss(real, fake, FmlReduction::per_sample) + 1e-12);
}

TEST_CASE("gan smoke training improves the discriminator") {
  std::size_t m = 16;
  auto data = blob_data(128, m, 1);
  RngStreams rng(7);
  auto gen = build_generator<float>(m, tiny_gen(), rng.weight_init());
  auto disc = build_discriminator<float>(m, tiny_disc(), rng.weight_init());
  GanTrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  auto result = train_gan(data, m, gen, disc, cfg, rng);
  REQUIRE(result.history.size() == 5);
  CHECK(result.history.back().d_loss < result.history.front().d_loss);
  for (const auto& e : result.history) {
    CHECK(std::isfinite(e.d_loss));
    CHECK(std::isfinite(e.g_loss));
  }
}

TEST_CASE("one discriminator step and one generator step per batch") {
  std::size_t m = 16;
  auto data = blob_data(96, m, 2);
  RngStreams rng(9);
  auto gen = build_generator<float>(m, tiny_gen(), rng.weight_init());
  auto disc = build_discriminator<float>(m, tiny_disc(), rng.weight_init());
  GanTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  auto result = train_gan(data, m, gen, disc, cfg, rng);
  CHECK(result.d_steps == 3 * 3);  // 96/32 batches per epoch
  CHECK(result.g_steps == result.d_steps);
}

TEST_CASE("identical seeds give identical loss histories") {
  std::size_t m = 16;
  auto data = blob_data(64, m, 3);
  GanTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  std::vector<EpochLosses> h1, h2;
  for (auto* h : {&h1, &h2}) {
    RngStreams rng(11);
    auto gen = build_generator<float>(m, tiny_gen(), rng.weight_init());
    auto disc = build_discriminator<float>(m, tiny_disc(), rng.weight_init());
    *h = train_gan(data, m, gen, disc, cfg, rng).history;
  }
  REQUIRE(h1.size() == h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].d_loss == h2[i].d_loss);
    CHECK(h1[i].g_loss == h2[i].g_loss);
  }
}

TEST_CASE("both generator objectives train without clamping") {
  std::size_t m = 16;
  auto data = blob_data(64, m, 4);
  for (auto loss : {GeneratorLoss::bce, GeneratorLoss::fml}) {
    RngStreams rng(13);
    auto gen = build_generator<float>(m, tiny_gen(), rng.weight_init());
    auto disc = build_discriminator<float>(m, tiny_disc(), rng.weight_init());
    GanTrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.generator_loss = loss;
    auto result = train_gan(data, m, gen, disc, cfg, rng);
    CHECK(result.clamp_activations == 0);
  }
}

TEST_CASE("degenerate training inputs are rejected") {
  RngStreams rng(15);
  auto gen = build_generator<float>(16, tiny_gen(), rng.weight_init());
  auto disc = build_discriminator<float>(16, tiny_disc(), rng.weight_init());
  GanTrainConfig cfg;
  CHECK_THROWS_AS(train_gan(std::vector<float>{}, 16, gen, disc, cfg, rng),
                  std::invalid_argument);
  GanTrainConfig bad;
  bad.batch_size = 1;
  auto data = blob_data(8, 16, 5);
  CHECK_THROWS_AS(train_gan(data, 16, gen, disc, bad, rng),
                  std::invalid_argument);
}
