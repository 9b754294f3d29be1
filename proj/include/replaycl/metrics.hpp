#ifndef REPLAYCL_METRICS_HPP
#define REPLAYCL_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace replaycl {

inline double accuracy(const std::vector<std::uint32_t>& predictions,
                       const std::vector<std::uint32_t>& labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("metrics: prediction/label size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Accuracy per class id present in `labels`; classes without test samples
// get -1 so callers can skip them.
inline std::vector<double> per_class_accuracy(
    const std::vector<std::uint32_t>& predictions,
    const std::vector<std::uint32_t>& labels, std::size_t class_count) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("metrics: prediction/label size mismatch");
  std::vector<std::size_t> total(class_count, 0), correct(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++total[labels[i]];
    if (predictions[i] == labels[i]) ++correct[labels[i]];
  }
  std::vector<double> out(class_count, -1.0);
  for (std::size_t c = 0; c < class_count; ++c)
    if (total[c] > 0)
      out[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  return out;
}

struct TaskMetrics {
  std::size_t task_index = 0;  // 1-based
  double accuracy = 0.0;
  std::vector<double> per_class;     // indexed by class id, -1 if absent
  std::size_t replay_coverage = 0;   // classes with >= 1 replay sample
  std::size_t replay_size = 0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::string scenario;
  std::string method;  // generator loss + selection scheme, or "-"
  std::vector<TaskMetrics> tasks;
};

struct CurvePoint {
  std::size_t task_index = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ExperimentReport {
  std::string scenario;
  std::string method;
  std::vector<SeedRun> runs;
  double mean = 0.0;  // over all (seed, task) accuracies
  double min = 1.0;   // global minimum per-task accuracy
  std::vector<double> per_seed_min;
  std::vector<CurvePoint> curves;
  nlohmann::json config_echo;
};

// Mean over all (seed, task) accuracies; Min is the global minimum. Also
// produces the per-task mean/min/max series behind the shaded curves.
inline ExperimentReport aggregate(const std::vector<SeedRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("metrics: no runs");
  std::size_t task_count = runs[0].tasks.size();
  for (const auto& r : runs)
    if (r.tasks.size() != task_count)
      throw std::invalid_argument("metrics: task layout mismatch across runs");
  ExperimentReport rep;
  rep.scenario = runs[0].scenario;
  rep.method = runs[0].method;
  rep.runs = runs;
  double sum = 0;
  for (const auto& r : runs) {
    double seed_min = std::numeric_limits<double>::infinity();
    for (const auto& t : r.tasks) {
      sum += t.accuracy;
      rep.min = std::min(rep.min, t.accuracy);
      seed_min = std::min(seed_min, t.accuracy);
    }
    rep.per_seed_min.push_back(seed_min);
  }
  rep.mean = sum / static_cast<double>(task_count * runs.size());
  for (std::size_t t = 0; t < task_count; ++t) {
    CurvePoint p;
    p.task_index = t + 1;
    p.min = std::numeric_limits<double>::infinity();
    p.max = -std::numeric_limits<double>::infinity();
    for (const auto& r : runs) {
      p.mean += r.tasks[t].accuracy;
      p.min = std::min(p.min, r.tasks[t].accuracy);
      p.max = std::max(p.max, r.tasks[t].accuracy);
    }
    p.mean /= static_cast<double>(runs.size());
    rep.curves.push_back(p);
  }
  return rep;
}

inline nlohmann::json report_to_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["scenario"] = rep.scenario;
  j["method"] = rep.method;
  j["mean"] = rep.mean;
  j["min"] = rep.min;
  j["per_seed_min"] = rep.per_seed_min;
  j["config"] = rep.config_echo;
  j["curves"] = nlohmann::json::array();
  for (const auto& p : rep.curves)
    j["curves"].push_back({{"task", p.task_index},
                           {"mean", p.mean},
                           {"min", p.min},
                           {"max", p.max}});
  j["runs"] = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    nlohmann::json jr;
    jr["seed"] = r.seed;
    jr["scenario"] = r.scenario;
    jr["method"] = r.method;
    jr["tasks"] = nlohmann::json::array();
    for (const auto& t : r.tasks)
      jr["tasks"].push_back({{"task", t.task_index},
                             {"accuracy", t.accuracy},
                             {"per_class", t.per_class},
                             {"replay_coverage", t.replay_coverage},
                             {"replay_size", t.replay_size}});
    j["runs"].push_back(jr);
  }
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport rep;
  rep.scenario = j.at("scenario");
  rep.method = j.at("method");
  rep.mean = j.at("mean");
  rep.min = j.at("min");
  rep.per_seed_min = j.at("per_seed_min").get<std::vector<double>>();
  rep.config_echo = j.value("config", nlohmann::json());
  for (const auto& p : j.at("curves"))
    rep.curves.push_back(
        {p.at("task"), p.at("mean"), p.at("min"), p.at("max")});
  for (const auto& jr : j.at("runs")) {
    SeedRun r;
    r.seed = jr.at("seed");
    r.scenario = jr.at("scenario");
    r.method = jr.at("method");
    for (const auto& jt : jr.at("tasks")) {
      TaskMetrics t;
      t.task_index = jt.at("task");
      t.accuracy = jt.at("accuracy");
      t.per_class = jt.at("per_class").get<std::vector<double>>();
      t.replay_coverage = jt.at("replay_coverage");
      t.replay_size = jt.at("replay_size");
      r.tasks.push_back(std::move(t));
    }
    rep.runs.push_back(std::move(r));
  }
  return rep;
}

// Writes report.json, summary.csv, curves.csv and coverage.csv. The
// coverage file leaves out task 1, which trains with no replay samples.
inline void emit_report(const ExperimentReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir + "/report.json");
    if (!os) throw std::runtime_error("metrics: cannot write report.json");
    os << report_to_json(rep).dump(2) << "\n";
  }
  {
    std::ofstream os(dir + "/summary.csv");
    os << "scenario,method,mean,min\n";
    os << rep.scenario << "," << rep.method << "," << rep.mean << ","
       << rep.min << "\n";
  }
  {
    std::ofstream os(dir + "/curves.csv");
    os << "task,mean,min,max\n";
    for (const auto& p : rep.curves)
      os << p.task_index << "," << p.mean << "," << p.min << "," << p.max
         << "\n";
  }
  {
    std::ofstream os(dir + "/coverage.csv");
    os << "task,seed,replay_class_count\n";
    for (const auto& r : rep.runs)
      for (const auto& t : r.tasks)
        if (t.task_index > 1)
          os << t.task_index << "," << r.seed << "," << t.replay_coverage
             << "\n";
  }
}

}  // namespace replaycl

#endif  // REPLAYCL_METRICS_HPP
