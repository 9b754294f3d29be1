#ifndef REPLAYCL_PIPELINE_HPP
#define REPLAYCL_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "replaycl/dataset.hpp"
#include "replaycl/gan.hpp"
#include "replaycl/metrics.hpp"
#include "replaycl/models.hpp"
#include "replaycl/optim.hpp"
#include "replaycl/replay.hpp"
#include "replaycl/scaler.hpp"
#include "replaycl/tasks.hpp"

namespace replaycl {

enum class Scenario { malcl, none, joint, naive_gr };

inline std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::malcl: return "malcl";
    case Scenario::none: return "none";
    case Scenario::joint: return "joint";
    default: return "naive_gr";
  }
}

struct ClassifierTrainConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-7;
  std::size_t batch_size = 256;
  std::size_t epochs = 20;
};

struct RunConfig {
  Scenario scenario = Scenario::malcl;
  ClassifierTrainConfig classifier;
  GanTrainConfig gan;
  SelectionConfig selection;
  TaskLayout layout;
  TaskStrategy strategy = TaskStrategy::random;
  double test_fraction = 0.2;
  std::uint64_t seed = 10;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  ClassifierConfig classifier_arch;
};

template <typename T>
struct TaskArtifacts {
  std::size_t task_index = 0;  // 1-based
  TaskMetrics metrics;
  ReplaySet<T> replay_produced;      // selected at the end of this task
  std::size_t replay_consumed = 0;   // size of the set fed into training
  std::size_t replay_source_task = 0;
  ScalerState scaler_snapshot;
  std::vector<EpochLosses> gan_history;
};

namespace detail {

// Rows of the dataset gathered into a flat row-major buffer.
template <typename T>
std::vector<T> gather_rows(const Dataset& ds,
                           const std::vector<std::size_t>& indices) {
  std::vector<T> out(indices.size() * ds.feature_dim);
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t j = 0; j < ds.feature_dim; ++j)
      out[i * ds.feature_dim + j] =
          static_cast<T>(ds.features[indices[i] * ds.feature_dim + j]);
  return out;
}

// Cross-entropy SGD training over (features, head-space labels).
template <typename T>
void train_classifier(Classifier<T>& clf, const std::vector<T>& features,
                      const std::vector<std::uint32_t>& labels, std::size_t m,
                      const ClassifierTrainConfig& cfg, Sgd<T>& opt,
                      RngStreams& rng) {
  std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RunContext train_ctx{true, &rng.dropout()};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.data_shuffle().shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::size_t bs = std::min(cfg.batch_size, n - start);
      if (bs < 2) break;  // batch norm-free but keeps batches meaningful
      Tensor<T> x({bs, m});
      for (std::size_t i = 0; i < bs; ++i)
        std::copy_n(&features[order[start + i] * m], m, &x.data[i * m]);
      clf.net.zero_grad();
      Tensor<T> p = clf.probs(x, train_ctx);
      Tensor<T> g(p.shape);
      for (std::size_t i = 0; i < bs; ++i) {
        std::uint32_t y = labels[order[start + i]];
        double py = std::max(static_cast<double>(p.at2(i, y)), 1e-12);
        g.at2(i, y) = static_cast<T>(-1.0 / (py * static_cast<double>(bs)));
      }
      clf.net.backward(g);
      opt.step(clf.net.parameters());
    }
  }
}

template <typename T>
std::vector<std::uint32_t> predict(Classifier<T>& clf,
                                   const std::vector<T>& features,
                                   std::size_t m) {
  RunContext eval_ctx{false, nullptr};
  std::size_t n = features.size() / m;
  std::vector<std::uint32_t> out(n);
  std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    std::size_t bs = std::min(chunk, n - start);
    Tensor<T> x({bs, m});
    std::copy_n(&features[start * m], bs * m, x.data.data());
    Tensor<T> p = clf.probs(x, eval_ctx);
    for (std::size_t i = 0; i < bs; ++i) {
      std::uint32_t best = 0;
      for (std::size_t j = 1; j < clf.class_count; ++j)
        if (p.at2(i, j) > p.at2(i, best))
          best = static_cast<std::uint32_t>(j);
      out[start + i] = best;
    }
  }
  return out;
}

}  // namespace detail

// Full class-incremental run of one scenario over one task stream.
// Head-space class indices follow order of first appearance in the stream.
template <typename T>
std::vector<TaskArtifacts<T>> run_scenario(const Dataset& ds,
                                           const TaskStream& stream,
                                           const RunConfig& config) {
  const std::size_t m = ds.feature_dim;
  const bool generative = config.scenario == Scenario::malcl ||
                          config.scenario == Scenario::naive_gr;
  RngStreams rng(config.seed);
  ScalerState scaler(m, generative ? ScalerMode::incremental
                                   : ScalerMode::refit);
  GanSpaceTransform gan_space(m);

  std::map<std::uint32_t, std::uint32_t> head_of;  // dataset class -> head slot
  auto head_label = [&](std::uint32_t cls) {
    auto it = head_of.find(cls);
    if (it == head_of.end())
      throw std::logic_error("pipeline: unseen class in evaluation");
    return it->second;
  };

  Classifier<T> clf;
  bool clf_built = false;
  Sgd<T> clf_opt(config.classifier.lr, config.classifier.momentum,
                 config.classifier.weight_decay);
  ReplaySet<T> replay;  // produced by the previous task's G/C pair
  std::vector<TaskArtifacts<T>> artifacts;

  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const Task& task = stream.tasks[t];
    TaskArtifacts<T> art;
    art.task_index = t + 1;
    try {
      for (auto c : task.new_class_ids)
        head_of.emplace(c, static_cast<std::uint32_t>(head_of.size()));
      std::size_t seen = head_of.size();

      // Scaler protocol: incremental for generative scenarios, refit per
      // task for the None and Joint baselines.
      std::vector<std::size_t> fit_rows =
          config.scenario == Scenario::joint ? joint_view(stream, t)
                                             : task.train_indices;
      std::vector<T> fit_raw = detail::gather_rows<T>(ds, fit_rows);
      if (!generative) scaler.reset();
      scaler.update(fit_raw.data(), fit_rows.size());

      // Classifier-space training pool. Only synthetic replay may carry
      // information from earlier tasks in the generative scenarios.
      std::vector<std::size_t> train_rows =
          config.scenario == Scenario::joint ? joint_view(stream, t)
                                             : task.train_indices;
      std::vector<T> train_x = scaler.apply(detail::gather_rows<T>(ds, train_rows));
      std::vector<std::uint32_t> train_y;
      train_y.reserve(train_rows.size());
      for (auto idx : train_rows) train_y.push_back(head_label(ds.labels[idx]));
      if (config.scenario != Scenario::joint) {
        // Data isolation: every real row must belong to this task's classes.
        for (auto idx : train_rows)
          if (std::find(task.new_class_ids.begin(), task.new_class_ids.end(),
                        ds.labels[idx]) == task.new_class_ids.end())
            throw std::logic_error("pipeline: real sample leaked across tasks");
      }
      std::size_t real_rows = train_rows.size();
      art.replay_consumed = generative ? replay.size() : 0;
      art.replay_source_task = replay.source_task;
      if (generative && replay.size() > 0) {
        train_x.insert(train_x.end(), replay.classifier_space.begin(),
                       replay.classifier_space.end());
        train_y.insert(train_y.end(), replay.labels.begin(),
                       replay.labels.end());
      }

      // GAN stage.
      Generator<T> gen;
      Discriminator<T> disc;
      if (generative) {
        std::vector<T> task_std(fit_raw.size());
        scaler.apply(fit_raw.data(), task_std.data(), real_rows);
        gan_space.update(task_std.data(), real_rows);
        std::vector<T> gan_data = gan_space.forward(task_std);
        if (replay.size() > 0)
          gan_data.insert(gan_data.end(), replay.gan_space.begin(),
                          replay.gan_space.end());
        gen = build_generator<T>(m, config.generator, rng.weight_init());
        disc = build_discriminator<T>(m, config.discriminator,
                                      rng.weight_init());
        GanTrainConfig gan_cfg = config.gan;
        if (config.scenario == Scenario::naive_gr)
          gan_cfg.generator_loss = GeneratorLoss::bce;
        auto res = train_gan(gan_data, m, gen, disc, gan_cfg, rng);
        art.gan_history = res.history;
      }

      // Classifier stage: grow the head to the classes seen so far, then
      // train on the pool.
      if (!clf_built) {
        clf = build_classifier<T>(m, std::max<std::size_t>(seen, 2),
                                  config.classifier_arch, rng.weight_init());
        clf_built = true;
      } else if (seen > clf.class_count) {
        grow_classifier(clf, seen, rng.weight_init());
      }
      detail::train_classifier(clf, train_x, train_y, m, config.classifier,
                               clf_opt, rng);

      // Replay production for the next task.
      if (generative && t + 1 < stream.tasks.size()) {
        const auto& sel = config.selection;
        std::size_t batch_count =
            sel.batch_count > 0
                ? sel.batch_count
                : (train_y.size() + config.classifier.batch_size - 1) /
                      config.classifier.batch_size;
        std::size_t budget = sel.scheme == SelectionScheme::l1_bmean
                                 ? sel.k * batch_count
                                 : sel.k * seen;
        std::size_t pool_size = sel.pool_factor * budget;
        SyntheticPool<T> pool =
            generate_pool(gen, gan_space, pool_size, t + 1, rng.noise());
        if (config.scenario == Scenario::naive_gr) {
          // Unselected generator output: a budget-matched random draw,
          // labeled by the classifier's own decisions.
          std::vector<std::size_t> idx(pool.size());
          std::iota(idx.begin(), idx.end(), 0);
          rng.data_shuffle().shuffle(idx.begin(), idx.end());
          idx.resize(std::min<std::size_t>(sel.k * seen, idx.size()));
          std::sort(idx.begin(), idx.end());
          Tensor<T> probs = pool_probs(pool, clf);
          ReplaySet<T> next;
          next.feature_dim = m;
          next.scheme = sel.scheme;
          next.source_task = t + 1;
          for (auto i : idx) {
            std::uint32_t label = 0;
            for (std::size_t j = 1; j < clf.class_count; ++j)
              if (probs.at2(i, j) > probs.at2(i, label))
                label = static_cast<std::uint32_t>(j);
            next.append(pool, i, label, 0.0);
          }
          replay = std::move(next);
        } else if (sel.scheme == SelectionScheme::l2_labels) {
          std::vector<std::uint32_t> heads(seen);
          std::iota(heads.begin(), heads.end(), 0u);
          replay = select_l2_labels(pool, clf, heads, sel.k);
        } else if (sel.scheme == SelectionScheme::l1_cmean) {
          // Old-class centroids come from the replay rows standing in for
          // those classes; new classes contribute their real task data.
          auto centroids =
              class_mean_logits(clf, train_x, train_y, m);
          replay = select_l1_cmean(pool, clf, centroids, sel.k);
        } else {
          auto centroids = batch_mean_logits(clf, train_x, m,
                                             config.classifier.batch_size);
          replay = select_l1_bmean(pool, clf, centroids, sel.k * batch_count);
        }
        art.replay_produced = replay;
      }

      // Evaluation over the test split of every class seen so far.
      std::vector<T> test_x =
          scaler.apply(detail::gather_rows<T>(ds, task.test_indices));
      std::vector<std::uint32_t> test_y;
      for (auto idx : task.test_indices)
        test_y.push_back(head_label(ds.labels[idx]));
      auto preds = detail::predict(clf, test_x, m);
      art.metrics.task_index = t + 1;
      art.metrics.accuracy = accuracy(preds, test_y);
      art.metrics.per_class = per_class_accuracy(preds, test_y, seen);
      art.metrics.replay_size = art.replay_consumed;
      if (generative && t > 0) {
        std::vector<std::uint32_t> prev_seen(
            seen - task.new_class_ids.size());
        std::iota(prev_seen.begin(), prev_seen.end(), 0u);
        // Coverage of the set consumed here, over classes it stood in for.
        std::size_t covered = 0;
        for (auto c : prev_seen)
          if (auto it = artifacts.back().replay_produced.per_class_counts.find(c);
              it != artifacts.back().replay_produced.per_class_counts.end() &&
              it->second > 0)
            ++covered;
        art.metrics.replay_coverage = covered;
      }
      art.scaler_snapshot = scaler;
    } catch (const std::exception& e) {
      throw std::runtime_error("pipeline: task " + std::to_string(t + 1) +
                               " failed: " + e.what());
    }
    artifacts.push_back(std::move(art));
  }
  return artifacts;
}

inline std::string method_name(const RunConfig& config) {
  switch (config.scenario) {
    case Scenario::none:
    case Scenario::joint:
      return "-";
    case Scenario::naive_gr:
      return "bce/random";
    default:
      return std::string(config.gan.generator_loss == GeneratorLoss::fml
                             ? "fml"
                             : "bce") +
             "/" + scheme_name(config.selection.scheme);
  }
}

// One scenario run rendered as a SeedRun for aggregation.
template <typename T>
SeedRun run_to_metrics(const std::vector<TaskArtifacts<T>>& artifacts,
                       const RunConfig& config) {
  SeedRun run;
  run.seed = config.seed;
  run.scenario = scenario_name(config.scenario);
  run.method = method_name(config);
  for (const auto& a : artifacts) run.tasks.push_back(a.metrics);
  return run;
}

}  // namespace replaycl

#endif  // REPLAYCL_PIPELINE_HPP
