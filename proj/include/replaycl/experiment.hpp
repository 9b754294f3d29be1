#ifndef REPLAYCL_EXPERIMENT_HPP
#define REPLAYCL_EXPERIMENT_HPP

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "replaycl/config.hpp"
#include "replaycl/metrics.hpp"
#include "replaycl/pipeline.hpp"

namespace replaycl {

inline std::size_t helper_thread_cap() {
  if (const char* env = std::getenv("REPLAYCL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  std::size_t hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

inline std::uint64_t dataset_digest(const Dataset& ds) {
  std::string blob;
  blob.reserve(ds.features.size() * 4 + ds.labels.size() * 4);
  blob.append(reinterpret_cast<const char*>(ds.features.data()),
              ds.features.size() * sizeof(float));
  blob.append(reinterpret_cast<const char*>(ds.labels.data()),
              ds.labels.size() * sizeof(std::uint32_t));
  return fnv1a(blob);
}

// One (scenario, seed) cell. Deterministic given the resolved config.
inline SeedRun execute_cell(const Dataset& ds, const ResolvedConfig& rc) {
  TaskStream stream = build_task_stream(ds, rc.run.layout, rc.run.strategy,
                                        rc.run.seed, rc.run.test_fraction);
  auto artifacts = run_scenario<float>(ds, stream, rc.run);
  return run_to_metrics(artifacts, rc.run);
}

inline void write_run_manifest(const ResolvedConfig& rc, const Dataset& ds,
                               const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir + "/manifest.txt");
  os << "config_hash " << fnv1a(rc.raw.canonical()) << "\n";
  os << "seed " << rc.run.seed << "\n";
  os << "dataset_digest " << dataset_digest(ds) << "\n";
  os << "scenario " << scenario_name(rc.run.scenario) << "\n";
}

// Runs one cell end to end and emits its report files under out_dir.
inline ExperimentReport run_and_emit(const Dataset& ds,
                                     const ResolvedConfig& rc,
                                     const std::string& out_dir) {
  SeedRun run = execute_cell(ds, rc);
  ExperimentReport rep = aggregate({run});
  rep.config_echo = rc.raw.to_json();
  emit_report(rep, out_dir);
  write_run_manifest(rc, ds, out_dir);
  return rep;
}

struct SweepCell {
  std::string scenario;
  std::uint64_t seed = 0;
  bool ok = false;
  bool skipped = false;
  std::string error;
  SeedRun run;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<ExperimentReport> reports;  // one per scenario, seed-aggregated
  bool all_ok() const {
    for (const auto& c : cells)
      if (!c.ok) return false;
    return true;
  }
};

// (scenario x seed) grid. Cells are independent and may run on helper
// threads (capped by REPLAYCL_THREADS); the summary is assembled in grid
// order afterwards so output bytes do not depend on scheduling.
inline SweepResult run_sweep(const Dataset& ds, const ResolvedConfig& base,
                             const std::vector<std::string>& scenarios,
                             const std::vector<std::uint64_t>& seeds,
                             const std::string& out_dir, bool resume = false) {
  SweepResult result;
  std::vector<ResolvedConfig> configs;
  for (const auto& scen : scenarios)
    for (auto seed : seeds) {
      ConfigFile cfg = base.raw;
      cfg.set("run.scenario", scen);
      cfg.set("run.seed", std::to_string(seed));
      configs.push_back(resolve_config(cfg));
      SweepCell cell;
      cell.scenario = scen;
      cell.seed = seed;
      result.cells.push_back(cell);
    }

  std::size_t threads = std::min(helper_thread_cap(), configs.size());
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= configs.size()) return;
        i = next++;
      }
      auto& cell = result.cells[i];
      const auto& rc = configs[i];
      std::string cell_dir = out_dir + "/" + cell.scenario + "_seed" +
                             std::to_string(cell.seed);
      try {
        std::string marker = cell_dir + "/manifest.txt";
        if (resume && std::filesystem::exists(marker) &&
            std::filesystem::exists(cell_dir + "/report.json")) {
          std::ifstream is(marker);
          std::string key, value;
          std::uint64_t found = 0;
          while (is >> key >> value)
            if (key == "config_hash") found = std::stoull(value);
          if (found == fnv1a(rc.raw.canonical())) {
            auto rep = report_from_json([&] {
              std::ifstream rj(cell_dir + "/report.json");
              nlohmann::json j;
              rj >> j;
              return j;
            }());
            cell.run = rep.runs.at(0);
            cell.ok = true;
            cell.skipped = true;
            continue;
          }
        }
        SeedRun run = execute_cell(ds, rc);
        ExperimentReport rep = aggregate({run});
        rep.config_echo = rc.raw.to_json();
        emit_report(rep, cell_dir);
        write_run_manifest(rc, ds, cell_dir);
        cell.run = run;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Aggregate per scenario in declaration order.
  std::filesystem::create_directories(out_dir);
  std::ofstream os(out_dir + "/summary.csv");
  os << "scenario,method,mean,min\n";
  for (const auto& scen : scenarios) {
    std::vector<SeedRun> runs;
    for (const auto& c : result.cells)
      if (c.scenario == scen && c.ok) runs.push_back(c.run);
    if (runs.empty()) continue;
    ExperimentReport rep = aggregate(runs);
    rep.config_echo = base.raw.to_json();
    os << rep.scenario << "," << rep.method << "," << rep.mean << ","
       << rep.min << "\n";
    result.reports.push_back(std::move(rep));
  }
  return result;
}

}  // namespace replaycl

#endif  // REPLAYCL_EXPERIMENT_HPP
