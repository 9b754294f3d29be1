#ifndef REPLAYCL_TASKS_HPP
#define REPLAYCL_TASKS_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/dataset.hpp"
#include "replaycl/rng.hpp"

namespace replaycl {

struct TaskLayout {
  std::size_t initial_classes = 50;
  std::size_t increment = 5;
  std::size_t task_count = 11;
};

enum class TaskStrategy { random, giant_first };

// One class-incremental task: train rows cover only this task's new
// classes; the test view accumulates everything seen so far.
struct Task {
  std::vector<std::uint32_t> new_class_ids;
  std::vector<std::size_t> train_indices;  // rows of the source dataset
  std::vector<std::size_t> test_indices;   // all classes seen through here
};

struct TaskStream {
  TaskLayout layout;
  TaskStrategy strategy = TaskStrategy::random;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::vector<Task> tasks;

  std::vector<std::uint32_t> seen_classes(std::size_t task_index) const {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i <= task_index; ++i)
      out.insert(out.end(), tasks[i].new_class_ids.begin(),
                 tasks[i].new_class_ids.end());
    return out;
  }
};

// Stratified per-class split with class order decided by the class_order
// substream (random) or by descending class size (giant_first, top block
// pinned to task 1, ties broken by ascending class id).
inline TaskStream build_task_stream(const Dataset& ds, const TaskLayout& layout,
                                    TaskStrategy strategy, std::uint64_t seed,
                                    double test_fraction = 0.2) {
  std::size_t needed =
      layout.initial_classes + layout.increment * (layout.task_count - 1);
  if (needed > ds.class_count)
    throw std::invalid_argument(
        "tasks: layout needs " + std::to_string(needed) + " classes, dataset has " +
        std::to_string(ds.class_count));
  auto sizes = ds.class_sizes();
  for (std::size_t c = 0; c < ds.class_count; ++c)
    if (sizes[c] < 2)
      throw std::invalid_argument("tasks: class " + std::to_string(c) +
                                  " has fewer than 2 samples");

  RngStreams streams(seed);
  std::vector<std::uint32_t> order(ds.class_count);
  std::iota(order.begin(), order.end(), 0u);
  if (strategy == TaskStrategy::random) {
    streams.class_order().shuffle(order.begin(), order.end());
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
                       return a < b;
                     });
    streams.class_order().shuffle(order.begin() + layout.initial_classes,
                                  order.end());
  }

  // Per-class index lists in dataset order, then a seeded shuffle keyed on
  // the class id so the split does not depend on other classes.
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> train_of(ds.class_count),
      test_of(ds.class_count);
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    RngEngine class_rng(seed * 0x9e3779b97f4a7c15ULL + 0xda3e39cb94b95bdbULL + c);
    auto idx = by_class[c];
    class_rng.shuffle(idx.begin(), idx.end());
    std::size_t n_test = static_cast<std::size_t>(
        static_cast<double>(idx.size()) * test_fraction);
    n_test = std::min(n_test, idx.size() - 1);  // keep >= 1 train sample
    test_of[c].assign(idx.begin(), idx.begin() + n_test);
    train_of[c].assign(idx.begin() + n_test, idx.end());
  }

  TaskStream stream;
  stream.layout = layout;
  stream.strategy = strategy;
  stream.seed = seed;
  stream.test_fraction = test_fraction;
  std::size_t cursor = 0;
  for (std::size_t t = 0; t < layout.task_count; ++t) {
    Task task;
    std::size_t take = t == 0 ? layout.initial_classes : layout.increment;
    task.new_class_ids.assign(order.begin() + cursor,
                              order.begin() + cursor + take);
    cursor += take;
    for (auto c : task.new_class_ids)
      task.train_indices.insert(task.train_indices.end(), train_of[c].begin(),
                                train_of[c].end());
    if (t > 0)
      task.test_indices = stream.tasks.back().test_indices;
    for (auto c : task.new_class_ids)
      task.test_indices.insert(task.test_indices.end(), test_of[c].begin(),
                               test_of[c].end());
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

// Train rows of tasks 1..i concatenated, for the Joint baseline.
inline std::vector<std::size_t> joint_view(const TaskStream& stream,
                                           std::size_t task_index) {
  if (task_index >= stream.tasks.size())
    throw std::invalid_argument("tasks: joint_view index out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= task_index; ++i)
    out.insert(out.end(), stream.tasks[i].train_indices.begin(),
               stream.tasks[i].train_indices.end());
  return out;
}

inline void export_task_manifest(const TaskStream& stream,
                                 const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("tasks: cannot write manifest: " + path);
  os << "task_count " << stream.tasks.size() << "\n";
  os << "strategy "
     << (stream.strategy == TaskStrategy::random ? "random" : "giant_first")
     << "\n";
  os << "seed " << stream.seed << "\n";
  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const auto& task = stream.tasks[t];
    os << "task " << (t + 1) << "\n";
    os << "  classes";
    for (auto c : task.new_class_ids) os << " " << c;
    os << "\n  train_count " << task.train_indices.size();
    os << "\n  test_count " << task.test_indices.size() << "\n";
  }
}

}  // namespace replaycl

#endif  // REPLAYCL_TASKS_HPP
