#ifndef REPLAYCL_CONFIG_HPP
#define REPLAYCL_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "replaycl/dataset.hpp"
#include "replaycl/pipeline.hpp"

namespace replaycl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Key-value config with [section] headers, '#' comments, and flag-style
// overrides (overrides win). Unknown keys are rejected.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
  }

  static ConfigFile parse(const std::string& text) {
    ConfigFile cfg;
    std::string section;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("config: malformed section at line " +
                            std::to_string(lineno));
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config: expected key = value at line " +
                          std::to_string(lineno));
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (!value.empty() && value.front() == '"' && value.back() == '"' &&
          value.size() >= 2)
        value = value.substr(1, value.size() - 2);
      std::string full = section.empty() ? key : section + "." + key;
      cfg.values_[full] = value;
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not a number: " +
                        it->second);
    }
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size() || v < 0)
        throw std::invalid_argument("bad");
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key +
                        "' is not a non-negative integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError("config: key '" + key + "' is not a bool: " + it->second);
  }

  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k))
        throw ConfigError("config: unknown key '" + k + "'");
  }

  // Canonical serialization used for config hashing and report echo.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct ResolvedConfig {
  RunConfig run;
  // Dataset source: either a file or a synthetic spec.
  bool synthetic = true;
  SyntheticSpec spec;
  std::string dataset_path;
  DatasetFormat dataset_format = DatasetFormat::binary;
  std::string out_dir = "out";
  ConfigFile raw;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "dataset.path", "dataset.format", "dataset.synthetic",
      "dataset.classes", "dataset.features", "dataset.samples_per_class",
      "dataset.cluster_std", "dataset.separation", "dataset.data_seed",
      "tasks.initial_classes", "tasks.increment", "tasks.task_count",
      "tasks.strategy", "tasks.test_fraction",
      "classifier.lr", "classifier.momentum", "classifier.weight_decay",
      "classifier.batch_size", "classifier.epochs",
      "gan.epochs", "gan.batch_size", "gan.lr_g", "gan.lr_d", "gan.beta1",
      "gan.beta2", "gan.loss", "gan.fml_reduction",
      "selection.scheme", "selection.k", "selection.pool_factor",
      "selection.batch_count",
      "models.preset", "models.noise_dim",
      "run.scenario", "run.seed", "run.out",
  };
  return keys;
}

inline ResolvedConfig resolve_config(const ConfigFile& cfg) {
  cfg.reject_unknown(known_config_keys());
  ResolvedConfig rc;
  rc.raw = cfg;

  rc.synthetic = cfg.get_bool("dataset.synthetic", !cfg.has("dataset.path"));
  if (rc.synthetic) {
    rc.spec.class_count = cfg.get_uint("dataset.classes", 10);
    rc.spec.feature_dim = cfg.get_uint("dataset.features", 64);
    rc.spec.samples_per_class = {cfg.get_uint("dataset.samples_per_class", 200)};
    rc.spec.cluster_std = cfg.get_double("dataset.cluster_std", 1.0);
    rc.spec.cluster_separation = cfg.get_double("dataset.separation", 8.0);
    rc.spec.seed = cfg.get_uint("dataset.data_seed", 7);
  } else {
    rc.dataset_path = cfg.get_string("dataset.path", "");
    if (rc.dataset_path.empty())
      throw ConfigError("config: dataset.path required when not synthetic");
    std::string fmt = cfg.get_string("dataset.format", "binary");
    if (fmt == "binary")
      rc.dataset_format = DatasetFormat::binary;
    else if (fmt == "csv")
      rc.dataset_format = DatasetFormat::csv;
    else
      throw ConfigError("config: dataset.format must be binary or csv");
  }

  auto& run = rc.run;
  run.layout.initial_classes = cfg.get_uint("tasks.initial_classes", 50);
  run.layout.increment = cfg.get_uint("tasks.increment", 5);
  run.layout.task_count = cfg.get_uint("tasks.task_count", 11);
  std::string strat = cfg.get_string("tasks.strategy", "random");
  if (strat == "random")
    run.strategy = TaskStrategy::random;
  else if (strat == "giant_first")
    run.strategy = TaskStrategy::giant_first;
  else
    throw ConfigError("config: tasks.strategy must be random or giant_first");
  run.test_fraction = cfg.get_double("tasks.test_fraction", 0.2);

  run.classifier.lr = cfg.get_double("classifier.lr", 1e-3);
  run.classifier.momentum = cfg.get_double("classifier.momentum", 0.9);
  run.classifier.weight_decay = cfg.get_double("classifier.weight_decay", 1e-7);
  run.classifier.batch_size = cfg.get_uint("classifier.batch_size", 256);
  run.classifier.epochs = cfg.get_uint("classifier.epochs", 20);

  run.gan.epochs = cfg.get_uint("gan.epochs", 5);
  run.gan.batch_size = cfg.get_uint("gan.batch_size", 256);
  run.gan.lr_g = cfg.get_double("gan.lr_g", 2e-4);
  run.gan.lr_d = cfg.get_double("gan.lr_d", 2e-4);
  run.gan.beta1 = cfg.get_double("gan.beta1", 0.5);
  run.gan.beta2 = cfg.get_double("gan.beta2", 0.999);
  std::string loss = cfg.get_string("gan.loss", "fml");
  if (loss == "fml")
    run.gan.generator_loss = GeneratorLoss::fml;
  else if (loss == "bce")
    run.gan.generator_loss = GeneratorLoss::bce;
  else
    throw ConfigError("config: gan.loss must be fml or bce");
  std::string red = cfg.get_string("gan.fml_reduction", "mean_norm");
  if (red == "mean_norm")
    run.gan.fml_reduction = FmlReduction::mean_norm;
  else if (red == "per_sample")
    run.gan.fml_reduction = FmlReduction::per_sample;
  else
    throw ConfigError("config: gan.fml_reduction must be mean_norm or per_sample");

  std::string scheme = cfg.get_string("selection.scheme", "l1_cmean");
  if (scheme == "l2_labels")
    run.selection.scheme = SelectionScheme::l2_labels;
  else if (scheme == "l1_cmean")
    run.selection.scheme = SelectionScheme::l1_cmean;
  else if (scheme == "l1_bmean")
    run.selection.scheme = SelectionScheme::l1_bmean;
  else
    throw ConfigError(
        "config: selection.scheme must be l2_labels, l1_cmean or l1_bmean");
  run.selection.k = cfg.get_uint("selection.k", 20);
  run.selection.pool_factor = cfg.get_uint("selection.pool_factor", 10);
  run.selection.batch_count = cfg.get_uint("selection.batch_count", 0);
  run.selection.validate();

  std::string preset = cfg.get_string("models.preset", "desk");
  if (preset == "desk") {
    run.generator = GeneratorConfig::desk_scale();
    run.discriminator = DiscriminatorConfig::desk_scale();
    run.classifier_arch = ClassifierConfig::desk_scale();
  } else if (preset == "full") {
    run.generator = GeneratorConfig{};
    run.discriminator = DiscriminatorConfig{};
    run.classifier_arch = ClassifierConfig{};
  } else {
    throw ConfigError("config: models.preset must be desk or full");
  }
  if (cfg.has("models.noise_dim"))
    run.generator.noise_dim = cfg.get_uint("models.noise_dim", 0);

  std::string scen = cfg.get_string("run.scenario", "malcl");
  if (scen == "malcl")
    run.scenario = Scenario::malcl;
  else if (scen == "none")
    run.scenario = Scenario::none;
  else if (scen == "joint")
    run.scenario = Scenario::joint;
  else if (scen == "naive_gr")
    run.scenario = Scenario::naive_gr;
  else
    throw ConfigError(
        "config: run.scenario must be malcl, none, joint or naive_gr");
  run.seed = cfg.get_uint("run.seed", 10);
  rc.out_dir = cfg.get_string("run.out", "out");
  return rc;
}

inline Dataset resolve_dataset(const ResolvedConfig& rc) {
  return rc.synthetic ? make_synthetic(rc.spec)
                      : load_dataset(rc.dataset_path, rc.dataset_format);
}

}  // namespace replaycl

#endif  // REPLAYCL_CONFIG_HPP
