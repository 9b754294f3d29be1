// Command-line entry point: experiment runner and dataset utilities.
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replaycl/replaycl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

replaycl::ConfigFile load_config(const std::string& path,
                                 const std::vector<std::string>& sets,
                                 const std::string& scenario,
                                 const std::string& seed,
                                 const std::string& out) {
  replaycl::ConfigFile cfg = path.empty() ? replaycl::ConfigFile()
                                          : replaycl::ConfigFile::parse_file(path);
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw replaycl::ConfigError("override must be key=value: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!scenario.empty()) cfg.set("run.scenario", scenario);
  if (!seed.empty()) cfg.set("run.seed", seed);
  if (!out.empty()) cfg.set("run.out", out);
  return cfg;
}

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& sets, const std::string& scenario,
            const std::string& seed, const std::string& out) {
  replaycl::ResolvedConfig rc;
  replaycl::Dataset ds;
  try {
    rc = replaycl::resolve_config(
        load_config(config_path, sets, scenario, seed, out));
    ds = replaycl::resolve_dataset(rc);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    auto rep = replaycl::run_and_emit(ds, rc, rc.out_dir);
    std::cout << "scenario " << rep.scenario << " method " << rep.method
              << " mean " << rep.mean << " min " << rep.min << "\n";
    std::cout << "report written to " << rc.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& sets,
              const std::string& scenarios_arg, const std::string& seeds_arg,
              const std::string& out, bool resume) {
  replaycl::ResolvedConfig rc;
  replaycl::Dataset ds;
  std::vector<std::string> scenarios;
  std::vector<std::uint64_t> seeds;
  try {
    rc = replaycl::resolve_config(load_config(config_path, sets, "", "", out));
    ds = replaycl::resolve_dataset(rc);
    scenarios = split_list(scenarios_arg);
    if (scenarios.empty())
      throw replaycl::ConfigError("sweep: no scenarios given");
    for (const auto& s : split_list(seeds_arg)) seeds.push_back(std::stoull(s));
    if (seeds.empty()) throw replaycl::ConfigError("sweep: no seeds given");
    for (const auto& s : scenarios)
      if (s != "malcl" && s != "none" && s != "joint" && s != "naive_gr")
        throw replaycl::ConfigError("sweep: unknown scenario '" + s + "'");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    auto result = replaycl::run_sweep(ds, rc, scenarios, seeds, rc.out_dir,
                                      resume);
    for (const auto& cell : result.cells) {
      std::cout << cell.scenario << " seed " << cell.seed << ": "
                << (cell.ok ? (cell.skipped ? "skipped (resume)" : "ok")
                            : "FAILED: " + cell.error)
                << "\n";
    }
    std::cout << "summary written to " << rc.out_dir << "/summary.csv\n";
    return result.all_ok() ? kExitOk : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "sweep failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_dataset_make(const std::string& out, std::size_t classes,
                     std::size_t features, std::size_t per_class, double std_,
                     double separation, std::uint64_t seed) {
  try {
    replaycl::SyntheticSpec spec;
    spec.class_count = classes;
    spec.feature_dim = features;
    spec.samples_per_class = {per_class};
    spec.cluster_std = std_;
    spec.cluster_separation = separation;
    spec.seed = seed;
    auto ds = replaycl::make_synthetic(spec);
    replaycl::save_dataset(ds, out, replaycl::DatasetFormat::binary);
    std::cout << "wrote " << ds.size() << " samples (m=" << ds.feature_dim
              << ", n=" << ds.class_count << ") to " << out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_dataset_convert(const std::string& in, const std::string& out,
                        bool to_csv) {
  try {
    auto ds = replaycl::load_dataset(in, to_csv
                                             ? replaycl::DatasetFormat::binary
                                             : replaycl::DatasetFormat::csv);
    replaycl::save_dataset(ds, out, to_csv ? replaycl::DatasetFormat::csv
                                           : replaycl::DatasetFormat::binary);
    std::cout << "converted " << ds.size() << " samples to " << out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_dataset_inspect(const std::string& path, const std::string& format) {
  try {
    auto ds = replaycl::load_dataset(path, format == "csv"
                                               ? replaycl::DatasetFormat::csv
                                               : replaycl::DatasetFormat::binary);
    std::cout << "m " << ds.feature_dim << "\n";
    std::cout << "n " << ds.class_count << "\n";
    std::cout << "samples " << ds.size() << "\n";
    auto sizes = ds.class_sizes();
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      std::cout << "class " << c;
      if (!ds.class_names.empty()) std::cout << " (" << ds.class_names[c] << ")";
      std::cout << ": " << sizes[c] << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"replaycl: class-incremental generative-replay experiments"};
  app.require_subcommand(1);

  std::string config_path, scenario, seed, out;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "run one scenario and emit reports");
  run->add_option("--config", config_path, "config file");
  run->add_option("--scenario", scenario, "scenario override");
  run->add_option("--seed", seed, "seed override");
  run->add_option("--out", out, "output directory override");
  run->add_option("--set", sets, "key=value config override");

  std::string scenarios_arg = "malcl";
  std::string seeds_arg = "10,20,30,40,50";
  bool resume = false;
  auto* sweep = app.add_subcommand("sweep", "run a scenario x seed grid");
  sweep->add_option("--config", config_path, "config file");
  sweep->add_option("--scenarios", scenarios_arg, "comma-separated scenarios");
  sweep->add_option("--seeds", seeds_arg, "comma-separated seeds");
  sweep->add_option("--out", out, "output directory override");
  sweep->add_option("--set", sets, "key=value config override");
  sweep->add_flag("--resume", resume, "skip completed runs with matching config");

  auto* dataset = app.add_subcommand("dataset", "dataset utilities");
  dataset->require_subcommand(1);

  std::string ds_out = "synthetic.rcl", ds_in, ds_format = "binary";
  std::size_t classes = 10, features = 64, per_class = 200;
  double cluster_std = 1.0, separation = 8.0;
  std::uint64_t data_seed = 7;
  auto* make = dataset->add_subcommand("make-synthetic",
                                       "generate a Gaussian-mixture dataset");
  make->add_option("--out", ds_out, "output file (binary)");
  make->add_option("--classes", classes, "class count");
  make->add_option("--features", features, "feature dimension");
  make->add_option("--per-class", per_class, "samples per class");
  make->add_option("--std", cluster_std, "cluster standard deviation");
  make->add_option("--separation", separation, "inter-center separation");
  make->add_option("--seed", data_seed, "generation seed");

  bool to_csv = false;
  auto* convert = dataset->add_subcommand("convert-csv",
                                          "convert between csv and binary");
  convert->add_option("--in", ds_in, "input file")->required();
  convert->add_option("--out", ds_out, "output file")->required();
  convert->add_flag("--to-csv", to_csv, "binary input, csv output");

  auto* inspect = dataset->add_subcommand("inspect", "print dataset summary");
  inspect->add_option("path", ds_in, "dataset file")->required();
  inspect->add_option("--format", ds_format, "binary or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) return cmd_run(config_path, sets, scenario, seed, out);
  if (sweep->parsed())
    return cmd_sweep(config_path, sets, scenarios_arg, seeds_arg, out, resume);
  if (make->parsed())
    return cmd_dataset_make(ds_out, classes, features, per_class, cluster_std,
                            separation, data_seed);
  if (convert->parsed()) return cmd_dataset_convert(ds_in, ds_out, to_csv);
  if (inspect->parsed()) return cmd_dataset_inspect(ds_in, ds_format);
  return kExitConfig;
}
