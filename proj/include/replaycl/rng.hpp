#ifndef REPLAYCL_RNG_HPP
#define REPLAYCL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace replaycl {

// Distribution helpers with hand-rolled transforms so draws do not depend
// on standard-library internals.
class RngEngine {
 public:
  RngEngine() : engine_(0) {}
  explicit RngEngine(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one cached spare.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Named substreams derived from one master seed. Draws from one stream
// never perturb another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master_seed)
      : master_seed_(master_seed),
        weight_init_(derive(master_seed, 1)),
        data_shuffle_(derive(master_seed, 2)),
        noise_(derive(master_seed, 3)),
        dropout_(derive(master_seed, 4)),
        class_order_(derive(master_seed, 5)) {}

  std::uint64_t master_seed() const { return master_seed_; }

  RngEngine& weight_init() { return weight_init_; }
  RngEngine& data_shuffle() { return data_shuffle_; }
  RngEngine& noise() { return noise_; }
  RngEngine& dropout() { return dropout_; }
  RngEngine& class_order() { return class_order_; }

 private:
  // splitmix64 over (seed, stream id) decorrelates the substreams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t master_seed_;
  RngEngine weight_init_;
  RngEngine data_shuffle_;
  RngEngine noise_;
  RngEngine dropout_;
  RngEngine class_order_;
};

}  // namespace replaycl

#endif  // REPLAYCL_RNG_HPP
