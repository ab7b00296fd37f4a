#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dualabsa/log.hpp"
#include "dualabsa/metrics.hpp"
#include "dualabsa/model.hpp"

namespace dualabsa {

/// Inverse time: lr0 / (1 + rate * step / decay_steps).
/// Exponential: lr0 * rate^(step / decay_steps).
inline double learning_rate(const ModelConfig& c, long step) {
  const double t = static_cast<double>(step) / static_cast<double>(c.decay_steps);
  if (c.decay == DecaySchedule::Exponential) return c.lr * std::pow(c.decay_rate, t);
  return c.lr / (1.0 + c.decay_rate * t);
}

template <typename Scalar>
struct AdamState {
  long step = 0;
  std::vector<MatrixX<Scalar>> m;
  std::vector<MatrixX<Scalar>> v;
};

struct StepStats {
  double lr = 0.0;
  double grad_norm = 0.0;
  double clip_scale = 1.0;
};

/// Global L2 norm over trainable gradients; throws NumericError naming the
/// first parameter with a non-finite gradient.
template <typename Scalar>
double gradient_norm(const ParamStore<Scalar>& store) {
  double total = 0.0;
  for (const auto& e : store.entries()) {
    if (!e.trainable) continue;
    if (!e.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + e.name + "'");
    total += static_cast<double>(e.grad.matrix().squaredNorm());
  }
  return std::sqrt(total);
}

/// Scales all trainable gradients so their global norm is at most max_norm.
template <typename Scalar>
StepStats clip_gradients(ParamStore<Scalar>& store, double max_norm) {
  StepStats stats;
  stats.grad_norm = gradient_norm(store);
  if (stats.grad_norm > max_norm) {
    stats.clip_scale = max_norm / stats.grad_norm;
    for (auto& e : store.entries())
      if (e.trainable) e.grad.matrix() *= static_cast<Scalar>(stats.clip_scale);
  }
  return stats;
}

/// Clip, then one bias-corrected Adam update at the scheduled learning rate.
template <typename Scalar>
StepStats optimizer_step(ParamStore<Scalar>& store, AdamState<Scalar>& state, const ModelConfig& c) {
  StepStats stats = clip_gradients(store, c.clip);
  stats.lr = learning_rate(c, state.step);
  auto& entries = store.entries();
  if (state.m.empty())
    for (const auto& e : entries) {
      state.m.push_back(MatrixX<Scalar>::Zero(e.value.rows(), e.value.cols()));
      state.v.push_back(MatrixX<Scalar>::Zero(e.value.rows(), e.value.cols()));
    }
  ++state.step;
  const double correct1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correct2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(c.beta1), b2 = static_cast<Scalar>(c.beta2);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    if (!e.trainable) continue;
    const auto& grad = e.grad.matrix();
    state.m[k] = b1 * state.m[k] + (Scalar(1) - b1) * grad;
    state.v[k] = b2 * state.v[k] + (Scalar(1) - b2) * grad.cwiseAbs2();
    const auto m_hat = state.m[k].array() / static_cast<Scalar>(correct1);
    const auto v_hat = state.v[k].array() / static_cast<Scalar>(correct2);
    e.value.matrix().array() -= static_cast<Scalar>(stats.lr) * m_hat / (v_hat.sqrt() + static_cast<Scalar>(c.adam_eps));
  }
  return stats;
}

/// One row per optimizer step; dev metrics appear on the last step of each epoch.
struct TrainLogRow {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss_term = 0.0;
  double loss_pola = 0.0;
  std::optional<MetricReport> dev;
};

std::string train_log_csv(const std::vector<TrainLogRow>& rows);

struct TrainOptions {
  /// Called after each epoch with the epoch number, dev report (if any) and
  /// whether it is the best so far.
  std::function<void(int, const std::optional<MetricReport>&, bool)> on_epoch;
  /// Called whenever the retained best parameters change.
  std::function<void()> on_best;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  int best_epoch = 0;
  double best_dev_f1 = -1.0;
  std::size_t skipped = 0;  // examples dropped for encoding conflicts
};

template <typename Scalar>
std::vector<Decoded> predict_all(Model<Scalar>& model, const std::vector<Example>& examples) {
  std::vector<Decoded> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(model.predict(ex));
  return out;
}

template <typename Scalar>
EvaluationReport evaluate_model(Model<Scalar>& model, const std::vector<Example>& examples) {
  const Task task = model.config().task;
  std::vector<Decoded> gold;
  for (const auto& ex : examples) gold.push_back(gold_view(ex, task));
  return evaluate(predict_all(model, examples), gold, task);
}

/// Shuffled mini-batches, one Adam step per batch, batch loss averaged over
/// its examples. After each epoch the dev set is scored; the best dev
/// parameters are retained and restored into the model when training ends.
template <typename Scalar>
TrainResult train(Model<Scalar>& model, const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
                  const TrainOptions& options = {}) {
  const ModelConfig& c = model.config();
  TrainResult result;
  if (c.max_steps == 0 || c.epochs == 0) return result;

  std::vector<const Example*> usable;
  std::vector<TagGrid> grids;
  for (const auto& ex : train_set) {
    try {
      grids.push_back(encode_example(ex, c.task));
      usable.push_back(&ex);
    } catch (const EncodingConflict& e) {
      ++result.skipped;
      log::warn("skipping training example " + ex.id + ": " + e.what());
    }
  }

  auto& store = model.params();
  AdamState<Scalar> adam;
  Rng shuffle_rng = Rng(c.seed).split("shuffle");
  const Rng dropout_root = Rng(c.seed).split("dropout");
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Tensor<Scalar>> best;
  long step = 0;

  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    bool stop = false;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(c.batch)) {
      if (c.max_steps >= 0 && step >= c.max_steps) {
        stop = true;
        break;
      }
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(c.batch));
      const auto inv = static_cast<Scalar>(1.0 / static_cast<double>(end - begin));
      store.zero_grad();
      double term = 0.0, pola = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        Graph<Scalar> g(true, dropout_root.split(std::to_string(step) + "/" + std::to_string(k - begin)));
        const auto out = model.forward(g, *usable[idx]);
        const auto parts = model.loss(out, grids[idx]);
        if (!std::isfinite(static_cast<double>(parts.total.value().item())))
          throw NumericError("non-finite loss on example " + usable[idx]->id + " at step " + std::to_string(step));
        term += static_cast<double>(parts.term.value().item());
        pola += static_cast<double>(parts.pola.value().item());
        g.backward(parts.total, inv);
      }
      const StepStats stats = optimizer_step(store, adam, c);
      const double scale = static_cast<double>(inv);
      result.log.push_back(TrainLogRow{step, epoch, stats.lr, term * scale, pola * scale, std::nullopt});
      ++step;
    }
    if (result.log.empty() || result.log.back().epoch != epoch) break;

    std::optional<MetricReport> dev;
    if (!dev_set.empty()) dev = evaluate_model(model, dev_set).main();
    result.log.back().dev = dev;
    const double f1 = dev ? dev->f1 : 0.0;
    const bool improved = !dev || f1 > result.best_dev_f1;
    if (improved) {
      result.best_dev_f1 = dev ? f1 : result.best_dev_f1;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& e : store.entries()) best.push_back(e.value);
      if (options.on_best) options.on_best();
    }
    if (options.on_epoch) options.on_epoch(epoch, dev, improved);
    if (stop) break;
  }
  if (!best.empty()) {
    auto& entries = store.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) entries[k].value = best[k];
  }
  return result;
}

}  // namespace dualabsa
