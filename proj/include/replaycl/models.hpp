#ifndef REPLAYCL_MODELS_HPP
#define REPLAYCL_MODELS_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/layers.hpp"
#include "replaycl/rng.hpp"
#include "replaycl/tensor.hpp"

namespace replaycl {

// Channel/width defaults follow DCGAN/VGG conventions; the reference
// architectures fix layer counts and tap locations only. The desk-scale
// presets shrink widths so multi-seed sweeps stay cheap.
struct GeneratorConfig {
  std::size_t noise_dim = 100;
  std::array<std::size_t, 4> conv_channels{64, 128, 256, 256};
  std::size_t fc1 = 1024;
  std::array<std::size_t, 3> deconv_channels{256, 128, 64};
  std::size_t conv_kernel = 5;
  std::size_t deconv_kernel = 4;

  static GeneratorConfig desk_scale() {
    GeneratorConfig c;
    c.noise_dim = 32;
    c.conv_channels = {8, 16, 16, 16};
    c.fc1 = 64;
    c.deconv_channels = {16, 8, 4};
    return c;
  }
};

struct DiscriminatorConfig {
  std::array<std::size_t, 2> conv_channels{64, 128};
  std::size_t fc1 = 256;
  std::size_t kernel = 5;

  static DiscriminatorConfig desk_scale() {
    DiscriminatorConfig c;
    c.conv_channels = {8, 16};
    c.fc1 = 32;
    return c;
  }
};

struct ClassifierConfig {
  std::array<std::size_t, 3> conv_channels{32, 64, 128};
  std::size_t kernel = 5;
  double conv_dropout = 0.25;
  double head_dropout = 0.5;

  static ClassifierConfig desk_scale() {
    ClassifierConfig c;
    c.conv_channels = {8, 16, 32};
    return c;
  }
};

inline std::size_t ceil_div(std::size_t a, std::size_t b) {
  return (a + b - 1) / b;
}

// Noise -> four conv blocks -> two FC blocks -> three stride-2 deconvs
// (length x8) -> right trim to m -> sigmoid. Output is (batch, m) in (0,1).
template <typename T>
struct Generator {
  Sequential<T> net;
  GeneratorConfig config;
  std::size_t output_dim = 0;

  Tensor<T> forward(const Tensor<T>& noise, const RunContext& ctx) {
    return net.forward(noise, ctx);
  }
};

template <typename T>
Generator<T> build_generator(std::size_t m, const GeneratorConfig& cfg,
                             RngEngine& weight_rng) {
  if (m < 8) throw std::invalid_argument("generator: m must be >= 8");
  Generator<T> g;
  g.config = cfg;
  g.output_dim = m;
  auto& net = g.net;
  std::size_t nd = cfg.noise_dim;
  net.template emplace<Reshape<T>>(std::vector<std::size_t>{1, nd});
  std::size_t cin = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    auto conv = std::make_unique<Conv1d<T>>(cin, cfg.conv_channels[i],
                                            cfg.conv_kernel, 1,
                                            cfg.conv_kernel / 2,
                                            "gen.conv" + std::to_string(i + 1));
    conv->init_he(weight_rng);
    cin = cfg.conv_channels[i];
    net.add(std::move(conv));
    net.template emplace<Relu<T>>();
    net.template emplace<BatchNorm1d<T>>(cin, "gen.bn" + std::to_string(i + 1));
  }
  net.template emplace<Flatten<T>>();
  std::size_t flat = cin * nd;  // stride-1 same padding keeps length
  {
    auto fc = std::make_unique<Dense<T>>(flat, cfg.fc1, "gen.fc1");
    fc->init_he(weight_rng);
    net.add(std::move(fc));
    net.template emplace<Relu<T>>();
    net.template emplace<BatchNorm1d<T>>(cfg.fc1, "gen.bn_fc1");
  }
  std::size_t base_len = ceil_div(m, 8);
  std::size_t c0 = cfg.deconv_channels[0];
  {
    auto fc = std::make_unique<Dense<T>>(cfg.fc1, c0 * base_len, "gen.fc2");
    fc->init_he(weight_rng);
    net.add(std::move(fc));
    net.template emplace<Relu<T>>();
    net.template emplace<BatchNorm1d<T>>(c0 * base_len, "gen.bn_fc2");
  }
  net.template emplace<Reshape<T>>(std::vector<std::size_t>{c0, base_len});
  // Kernel 4, stride 2, padding 1 doubles the length at each stage.
  std::size_t dcin = c0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t dcout = i + 1 < 3 ? cfg.deconv_channels[i + 1] : 1;
    auto dc = std::make_unique<Deconv1d<T>>(dcin, dcout, cfg.deconv_kernel, 2,
                                            1,
                                            "gen.deconv" + std::to_string(i + 1));
    if (i + 1 < 3)
      dc->init_he(weight_rng);
    else
      dc->init_xavier(weight_rng);
    dcin = dcout;
    net.add(std::move(dc));
    if (i + 1 < 3) {
      net.template emplace<Relu<T>>();
      net.template emplace<BatchNorm1d<T>>(dcout,
                                           "gen.bn_deconv" + std::to_string(i + 1));
    }
  }
  net.template emplace<TrimRight<T>>(m);
  net.template emplace<Sigmoid<T>>();
  net.template emplace<Flatten<T>>();
  return g;
}

// Two conv blocks (tap = flatten after the second) then two FC layers,
// sigmoid output in (0,1).
template <typename T>
struct Discriminator {
  Sequential<T> net;
  DiscriminatorConfig config;
  std::size_t tap_index = 0;  // layer whose output is the feature tap
  std::size_t input_dim = 0;

  Tensor<T> forward(const Tensor<T>& x, const RunContext& ctx) {
    return net.forward(x, ctx);
  }
  const Tensor<T>& last_features() const { return net.output_of(tap_index); }
};

template <typename T>
Discriminator<T> build_discriminator(std::size_t m,
                                     const DiscriminatorConfig& cfg,
                                     RngEngine& weight_rng) {
  if (m < 8) throw std::invalid_argument("discriminator: m must be >= 8");
  Discriminator<T> d;
  d.config = cfg;
  d.input_dim = m;
  auto& net = d.net;
  net.template emplace<Reshape<T>>(std::vector<std::size_t>{1, m});
  std::size_t pad = cfg.kernel / 2;
  auto c1 = std::make_unique<Conv1d<T>>(1, cfg.conv_channels[0], cfg.kernel, 2,
                                        pad, "disc.conv1");
  c1->init_he(weight_rng);
  net.add(std::move(c1));
  net.template emplace<Relu<T>>();
  net.template emplace<BatchNorm1d<T>>(cfg.conv_channels[0], "disc.bn1");
  std::size_t l1 = Conv1d<T>::out_len(m, cfg.kernel, 2, pad);
  auto c2 = std::make_unique<Conv1d<T>>(cfg.conv_channels[0],
                                        cfg.conv_channels[1], cfg.kernel, 2,
                                        pad, "disc.conv2");
  c2->init_he(weight_rng);
  net.add(std::move(c2));
  net.template emplace<Relu<T>>();
  net.template emplace<BatchNorm1d<T>>(cfg.conv_channels[1], "disc.bn2");
  std::size_t l2 = Conv1d<T>::out_len(l1, cfg.kernel, 2, pad);
  d.tap_index = net.template emplace<Flatten<T>>();
  std::size_t flat = cfg.conv_channels[1] * l2;
  auto fc1 = std::make_unique<Dense<T>>(flat, cfg.fc1, "disc.fc1");
  fc1->init_he(weight_rng);
  net.add(std::move(fc1));
  net.template emplace<Relu<T>>();
  net.template emplace<BatchNorm1d<T>>(cfg.fc1, "disc.bn_fc1");
  auto fc2 = std::make_unique<Dense<T>>(cfg.fc1, 1, "disc.fc2");
  fc2->init_xavier(weight_rng);
  net.add(std::move(fc2));
  net.template emplace<Sigmoid<T>>();
  return d;
}

// Three conv blocks (max pool + dropout after the first two, dropout after
// the third; tap = flatten after block three) then a dropout-wrapped FC
// head and softmax over the classes seen so far.
template <typename T>
struct Classifier {
  Sequential<T> net;
  ClassifierConfig config;
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  std::size_t tap_index = 0;
  std::size_t head_index = 0;  // final Dense layer position
  std::size_t logit_dim = 0;

  Tensor<T> probs(const Tensor<T>& x, const RunContext& ctx) {
    return net.forward(x, ctx);
  }

  // Logit tap; selection-time use must pass an eval-mode context.
  Tensor<T> logits(const Tensor<T>& x, const RunContext& ctx) {
    net.forward(x, ctx);
    return net.output_of(tap_index);
  }
};

template <typename T>
Classifier<T> build_classifier(std::size_t m, std::size_t class_count,
                               const ClassifierConfig& cfg,
                               RngEngine& weight_rng) {
  if (m < 8) throw std::invalid_argument("classifier: m must be >= 8");
  if (class_count < 2)
    throw std::invalid_argument("classifier: need at least 2 classes");
  Classifier<T> c;
  c.config = cfg;
  c.input_dim = m;
  c.class_count = class_count;
  auto& net = c.net;
  net.template emplace<Reshape<T>>(std::vector<std::size_t>{1, m});
  std::size_t pad = cfg.kernel / 2;
  std::size_t len = m, cin = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    auto conv = std::make_unique<Conv1d<T>>(cin, cfg.conv_channels[i],
                                            cfg.kernel, 1, pad,
                                            "clf.conv" + std::to_string(i + 1));
    conv->init_he(weight_rng);
    cin = cfg.conv_channels[i];
    net.add(std::move(conv));
    net.template emplace<Relu<T>>();
    if (i < 2) {
      net.template emplace<MaxPool1d<T>>(2);
      len /= 2;
    }
    net.template emplace<Dropout<T>>(cfg.conv_dropout);
  }
  c.tap_index = net.template emplace<Flatten<T>>();
  c.logit_dim = cin * len;
  auto head = std::make_unique<Dense<T>>(c.logit_dim, class_count, "clf.head");
  head->init_xavier(weight_rng);
  c.head_index = net.add(std::move(head));
  net.template emplace<Dropout<T>>(cfg.head_dropout);
  net.template emplace<Softmax<T>>();
  return c;
}

// Widen the softmax head; old class rows are copied verbatim so logits of
// existing classes are unchanged on any fixed input.
template <typename T>
void grow_classifier(Classifier<T>& clf, std::size_t new_class_count,
                     RngEngine& weight_rng) {
  if (new_class_count <= clf.class_count)
    throw std::invalid_argument("classifier: grow requires n_new > n");
  auto& old_head = dynamic_cast<Dense<T>&>(clf.net.layer(clf.head_index));
  auto head = std::make_unique<Dense<T>>(clf.logit_dim, new_class_count,
                                         "clf.head");
  head->init_xavier(weight_rng);
  std::size_t d = clf.logit_dim;
  for (std::size_t r = 0; r < clf.class_count; ++r) {
    std::copy_n(&old_head.weight().value.data[r * d], d,
                &head->weight().value.data[r * d]);
    head->bias().value.data[r] = old_head.bias().value.data[r];
  }
  // Fresh rows start with zero bias.
  for (std::size_t r = clf.class_count; r < new_class_count; ++r)
    head->bias().value.data[r] = T(0);
  clf.net.replace(clf.head_index, std::move(head));
  clf.class_count = new_class_count;
}

// --- Checkpoints: "RCKP", u32 config-string length, config echo, u32 param
// count, then per parameter (u32 name len, name, u32 rank, u64 dims,
// little-endian f32 payload). Bit-exact round trip for float models.

template <typename T>
void save_checkpoint(Sequential<T>& net, const std::string& config_echo,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write("RCKP", 4);
  auto params = net.parameters();
  std::uint32_t clen = static_cast<std::uint32_t>(config_echo.size());
  os.write(reinterpret_cast<const char*>(&clen), 4);
  os.write(config_echo.data(), clen);
  std::uint32_t pc = static_cast<std::uint32_t>(params.size());
  os.write(reinterpret_cast<const char*>(&pc), 4);
  for (auto* p : params) {
    std::uint32_t nlen = static_cast<std::uint32_t>(p->name.size());
    os.write(reinterpret_cast<const char*>(&nlen), 4);
    os.write(p->name.data(), nlen);
    std::uint32_t rank = static_cast<std::uint32_t>(p->value.rank());
    os.write(reinterpret_cast<const char*>(&rank), 4);
    for (std::size_t d : p->value.shape) {
      std::uint64_t v = d;
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
    for (T v : p->value.data) {
      float f = static_cast<float>(v);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

template <typename T>
std::string load_checkpoint(Sequential<T>& net, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCKP", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t clen = 0;
  is.read(reinterpret_cast<char*>(&clen), 4);
  std::string config_echo(clen, '\0');
  is.read(config_echo.data(), clen);
  std::uint32_t pc = 0;
  is.read(reinterpret_cast<char*>(&pc), 4);
  auto params = net.parameters();
  if (pc != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (auto* p : params) {
    std::uint32_t nlen = 0;
    is.read(reinterpret_cast<char*>(&nlen), 4);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    if (name != p->name)
      throw std::runtime_error("checkpoint: expected parameter " + p->name +
                               ", found " + name);
    std::uint32_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 4);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      std::uint64_t v = 0;
      is.read(reinterpret_cast<char*>(&v), 8);
      d = static_cast<std::size_t>(v);
    }
    if (shape != p->value.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
    for (auto& v : p->value.data) {
      float f = 0;
      is.read(reinterpret_cast<char*>(&f), 4);
      v = static_cast<T>(f);
    }
    if (!is) throw std::runtime_error("checkpoint: truncated at " + p->name);
  }
  return config_echo;
}

}  // namespace replaycl

#endif  // REPLAYCL_MODELS_HPP
