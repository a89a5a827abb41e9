#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "oracle.hpp"

namespace layoutforge {

struct TrainConfig {
  double learning_rate = 3e-4;
  double clip_norm = 1.0;
  int epochs = 300;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double validation_fraction = 1.0 / 6.0;
  std::uint64_t seed = 1;
  // Called after each epoch with (epoch, mean train loss, validation loss).
  std::function<void(int, double, double)> on_epoch;
};

// Scales `grads` in place so their joint L2 norm is at most `max_norm`.
// Returns the factor applied (1 when already within bounds).
inline double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return 1.0;
  const double factor = max_norm / norm;
  for (auto& g : grads) g *= factor;
  return factor;
}

class Adam {
 public:
  Adam(const ModelParams& shape_of, const TrainConfig& cfg) : cfg_(cfg) {
    for (const Matrix* m : shape_of.tensors()) {
      m1_.push_back(Matrix::Zero(m->rows(), m->cols()));
      m2_.push_back(Matrix::Zero(m->rows(), m->cols()));
    }
  }

  void step(ModelParams& p, std::span<const Matrix> grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    auto ts = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      m1_[i] = cfg_.beta1 * m1_[i] + (1.0 - cfg_.beta1) * grads[i];
      m2_[i] = cfg_.beta2 * m2_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseAbs2();
      *ts[i] -= (cfg_.learning_rate * (m1_[i] / c1).array() / ((m2_[i] / c2).array().sqrt() + cfg_.adam_eps)).matrix();
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m1_, m2_;
  int t_ = 0;
};

// Loss and gradients of one layout sequence.
struct LossAndGrads {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

inline LossAndGrads sequence_loss_and_grads(const ModelParams& params, const LayoutRecord& rec,
                                            const EmbeddingTable& table, bool train, std::uint64_t seed) {
  ad::Tape tape;
  const ModelVars vars = ModelVars::bind(tape, params, true);
  const SequenceGraph g = build_sequence_graph(tape, vars, params, rec.layout, rec.sequence, table, {train, seed, false});
  const std::vector<double> obs = rec.observed();
  const Var loss = loss_ls(tape, g.task_outputs, obs);
  tape.backward(loss);
  LossAndGrads out;
  out.loss = loss.scalar();
  for (const Var& v : vars.t) out.grads.push_back(v.grad());
  return out;
}

inline double sequence_loss(const ModelParams& params, const LayoutRecord& rec, const EmbeddingTable& table) {
  const auto pred = predict_sequence(rec.layout, rec.sequence, params, table);
  const auto obs = rec.observed();
  return loss_ls(pred.per_task, obs);
}

// Sets the output affine map from per-step averages of the observed metric.
inline void fit_output_scale(ModelParams& p, const Dataset& d) {
  std::vector<double> per_step;
  for (const auto& r : d.records)
    for (std::size_t i = 0; i < r.tasks.size(); ++i)
      per_step.push_back(r.tasks[i].metric / static_cast<double>(r.sequence.tasks[i].steps.size()));
  if (per_step.empty()) return;
  const double mean = std::accumulate(per_step.begin(), per_step.end(), 0.0) / per_step.size();
  double var = 0.0;
  for (double v : per_step) var += (v - mean) * (v - mean);
  var /= static_cast<double>(per_step.size());
  p.output_offset = mean;
  p.output_scale = var > 0.0 ? std::sqrt(var) : 1.0;
}

struct TrainResult {
  ModelParams params;  // best on validation (or final without a validation split)
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = 0;  // 0 = initial parameters
  std::vector<std::size_t> validation_records;
};

// Splits records into (train, validation) index sets. Validation takes
// round(n * fraction) records (at least one when n >= 2) after a seeded
// shuffle of the id-sorted order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_records(const Dataset& d, double fraction,
                                                                                   std::uint64_t seed) {
  std::vector<std::size_t> idx(d.records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d.records[a].layout_id < d.records[b].layout_id; });
  Rng rng(mix_seed(seed, 0xdada));
  rng.shuffle(idx);
  std::size_t n_val = 0;
  if (idx.size() >= 2 && fraction > 0.0)
    n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(idx.size() * fraction)), 1, idx.size() - 1);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

// One Adam update per layout sequence: L_s, backward, global-norm clip.
inline TrainResult train(const Dataset& data, const ModelParams& initial, const TrainConfig& cfg,
                         const EmbeddingTable& table) {
  if (data.records.empty()) throw PreconditionViolation("training needs at least one layout");
  auto [train_idx, val_idx] = split_records(data, cfg.validation_fraction, cfg.seed);

  auto validation_loss = [&](const ModelParams& p) {
    if (val_idx.empty()) return 0.0;
    double s = 0.0;
    for (auto i : val_idx) s += sequence_loss(p, data.records[i], table);
    return s / static_cast<double>(val_idx.size());
  };

  TrainResult result;
  result.params = initial;
  result.validation_records = val_idx;
  ModelParams current = initial;
  double best = validation_loss(current);
  Adam adam(current, cfg);
  Rng order_rng(mix_seed(cfg.seed, 0x0de7));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& rec = data.records[order[k]];
      LossAndGrads lg = sequence_loss_and_grads(current, rec, table, true,
                                                mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * 100003 + order[k]));
      if (!std::isfinite(lg.loss))
        throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + " on " + rec.layout_id);
      clip_global_norm(lg.grads, cfg.clip_norm);
      adam.step(current, lg.grads);
      total += lg.loss;
    }
    const double train_loss = order.empty() ? 0.0 : total / static_cast<double>(order.size());
    const double val = validation_loss(current);
    if (!std::isfinite(val)) throw NonFiniteLoss("non-finite validation loss at epoch " + std::to_string(epoch));
    result.train_loss.push_back(train_loss);
    result.validation_loss.push_back(val);
    if (val_idx.empty() || val < best) {
      best = val;
      result.params = current;
      result.best_epoch = epoch;
    }
    if (cfg.on_epoch) cfg.on_epoch(epoch, train_loss, val);
  }
  return result;
}

struct EvalReport {
  double mean_loss = 0.0;
  double target_level_r2 = 0.0;
  double pooled_r2 = 0.0;
};

// Loss averaged over records; target-level R^2 pooled over all records'
// tasks grouped by (target, trial).
inline EvalReport evaluate_model(const ModelParams& p, const Dataset& d, const EmbeddingTable& table,
                                 std::span<const std::size_t> which = {}) {
  std::vector<std::size_t> idx(which.begin(), which.end());
  if (idx.empty()) {
    idx.resize(d.records.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  EvalReport r;
  std::vector<double> pred, obs;
  std::vector<TrialKey> keys;
  for (auto i : idx) {
    const auto& rec = d.records[i];
    const auto pr = predict_sequence(rec.layout, rec.sequence, p, table);
    const auto o = rec.observed();
    r.mean_loss += loss_ls(pr.per_task, o);
    pred.insert(pred.end(), pr.per_task.begin(), pr.per_task.end());
    obs.insert(obs.end(), o.begin(), o.end());
    const auto k = trial_keys(rec.sequence);
    keys.insert(keys.end(), k.begin(), k.end());
  }
  r.mean_loss /= static_cast<double>(idx.size());
  r.target_level_r2 = target_level_r2(pred, obs, keys);
  r.pooled_r2 = 1.0 - loss_ls(pred, obs);
  return r;
}

}  // namespace layoutforge
