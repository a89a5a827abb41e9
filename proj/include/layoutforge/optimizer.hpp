#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "features.hpp"
#include "io.hpp"
#include "layout.hpp"
#include "model.hpp"
#include "penalties.hpp"
#include "tasks.hpp"

namespace layoutforge {

inline constexpr double kMinExtent = 1e-3;

struct OptimizerConfig {
  double learning_rate = 0.05;
  double clip_norm = 0.5;
  int steps = 500;
  Demographics demographics{0.1, 37.7};
  std::uint64_t seed = 1;
  bool swaps = true;
  bool swap_guard = true;
};

using BlockGrad = Eigen::Vector4d;  // d/d[cx, cy, w, h]

struct LayoutGradients {
  std::vector<BlockRef> blocks;
  std::vector<BlockGrad> model;       // averaged over step occurrences
  std::vector<BlockGrad> overlap;     // already weighted by its constant
  std::vector<BlockGrad> other;       // boundary + constraints, weighted
  std::vector<BlockGrad> clipped;     // model + overlap + other, clipped per block
  double predicted_total = 0.0;
  std::vector<double> per_task;
  PenaltyValues penalties;
  double objective = 0.0;

  // Gradient used for the swap test: everything except the overlap term.
  BlockGrad without_overlap(std::size_t i) const { return model[i] + other[i]; }
};

// Scales `g` so its norm is at most `max_norm`.
inline BlockGrad clip_norm(const BlockGrad& g, double max_norm) {
  const double n = g.norm();
  return n > max_norm ? BlockGrad(g * (max_norm / n)) : g;
}

namespace detail {

// Index of the block whose parameters drive `e`: itself, its container, or
// its anchor.
inline std::optional<std::size_t> owning_block(const Layout& l, const UiElement& e,
                                               const std::map<std::string, std::size_t>& by_id) {
  std::string key = e.id;
  if (e.container_id) key = *e.container_id;
  else if (e.anchor_id) key = *e.anchor_id;
  auto it = by_id.find(key);
  if (it == by_id.end()) return std::nullopt;
  return it->second;
}

inline std::vector<BlockGrad> penalty_grads(const Layout& l, const std::function<ad::Var(ad::Tape&, const BlockVars&)>& f,
                                            double* value) {
  ad::Tape tape;
  const BlockVars b = BlockVars::bind(tape, l, true);
  const ad::Var p = f(tape, b);
  *value = p.scalar();
  tape.backward(p);
  std::vector<BlockGrad> out;
  for (const auto& v : b.vars) out.emplace_back(v.grad().col(0));
  return out;
}

}  // namespace detail

inline LayoutGradients layout_gradients(const Layout& layout, const TaskSequence& seq, const ModelParams& params,
                                        const EmbeddingTable& table, const PenaltyConfig& pen, double clip = 0.5) {
  LayoutGradients out;
  out.blocks = top_level_blocks(layout);
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < out.blocks.size(); ++i) by_id[block_id(layout, out.blocks[i])] = i;
  out.model.assign(out.blocks.size(), BlockGrad::Zero());

  if (!seq.tasks.empty()) {
    ad::Tape tape;
    const ModelVars vars = ModelVars::bind(tape, params, false);
    const SequenceGraph g = build_sequence_graph(tape, vars, params, layout, seq, table, {false, 0, true});
    out.predicted_total = g.total.scalar();
    for (const auto& t : g.task_outputs) out.per_task.push_back(t.scalar());
    tape.backward(g.total);
    const double n_steps = static_cast<double>(g.row_leaves.size());
    for (const auto& rows : g.row_leaves) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const UiElement& e = *g.order[r];
        const auto owner = detail::owning_block(layout, e, by_id);
        if (!owner) continue;
        const ad::Matrix& grad = rows[r].grad();
        out.model[*owner] += grad.block<4, 1>(feature::kSpatial, 0);
        if (e.container_id) out.model[*owner] += grad.block<4, 1>(feature::kContainer, 0);
      }
    }
    for (auto& m : out.model) m /= n_steps;
  }

  double overlap = 0.0, boundary = 0.0, cons = 0.0;
  out.overlap = detail::penalty_grads(
      layout, [&](ad::Tape& t, const BlockVars& b) { return ad::scale(penalty_overlap(t, b), pen.overlap_constant); },
      &overlap);
  double other = 0.0;
  out.other = detail::penalty_grads(
      layout,
      [&](ad::Tape& t, const BlockVars& b) {
        const ad::Var bd = penalty_boundary(t, b);
        const ad::Var c = penalty_constraints(t, b, pen);
        boundary = bd.scalar();
        cons = c.scalar();
        return ad::add(ad::scale(bd, pen.boundary_constant), c);
      },
      &other);
  out.penalties = {pen.overlap_constant > 0.0 ? overlap / pen.overlap_constant : penalty_overlap(layout), boundary,
                   cons};
  out.objective = out.predicted_total + overlap + other;

  for (std::size_t i = 0; i < out.blocks.size(); ++i)
    out.clipped.push_back(clip_norm(out.model[i] + out.overlap[i] + out.other[i], clip));
  return out;
}

inline double objective(const Layout& layout, const TaskSequence& seq, const ModelParams& params,
                        const EmbeddingTable& table, const PenaltyConfig& pen) {
  const double total = seq.tasks.empty() ? 0.0 : predict_sequence(layout, seq, params, table).total;
  return total + penalty_values(layout, pen).weighted(pen);
}

struct SwapEvent {
  std::string a;
  std::string b;
  double score = 0.0;  // (g_a - g_b) . (p_b - p_a)
};

// Exchanging centers moves A by d = p_b - p_a and B by -d, so to first order
// F changes by (g_a - g_b) . d.
inline double swap_score(const Eigen::Vector2d& g_a, const Eigen::Vector2d& p_a, const Eigen::Vector2d& g_b,
                         const Eigen::Vector2d& p_b) {
  return (g_a - g_b).dot(p_b - p_a);
}

// Swaps centers of overlapping block pairs whose first-order estimate says
// the exchange lowers the objective. `grads` are indexed like
// top_level_blocks(layout). Each block takes part in at most one swap.
inline std::vector<SwapEvent> swap_if_beneficial(Layout& layout, const std::vector<BlockGrad>& grads, bool guard = true) {
  const auto blocks = top_level_blocks(layout);
  if (grads.size() != blocks.size()) throw ShapeMismatch("swap: gradient count does not match blocks");
  std::vector<bool> used(blocks.size(), false);
  std::vector<SwapEvent> events;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < blocks.size(); ++j) {
      if (used[i] || used[j]) continue;
      const Rect ra = block_rect(layout, blocks[i]);
      const Rect rb = block_rect(layout, blocks[j]);
      if (!(overlap_area(ra, rb) > 0.0)) continue;
      const double s = swap_score(grads[i].head<2>(), {ra.cx, ra.cy}, grads[j].head<2>(), {rb.cx, rb.cy});
      if (!(s < 0.0)) continue;
      Layout trial = layout;
      set_block_rect(trial, blocks[i], Rect{rb.cx, rb.cy, ra.w, ra.h});
      set_block_rect(trial, blocks[j], Rect{ra.cx, ra.cy, rb.w, rb.h});
      if (guard) {
        const PenaltyValues before = penalty_values(layout, {});
        const PenaltyValues after = penalty_values(trial, {});
        if (after.overlap + after.boundary > before.overlap + before.boundary) continue;
      }
      layout = std::move(trial);
      used[i] = used[j] = true;
      events.push_back({block_id(layout, blocks[i]), block_id(layout, blocks[j]), s});
    }
  }
  return events;
}

// x <- x - lr * g for every block, with extents clamped to kMinExtent.
inline void apply_update(Layout& layout, const std::vector<BlockGrad>& grads, double lr) {
  const auto blocks = top_level_blocks(layout);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Rect r = block_rect(layout, blocks[i]);
    Rect n{r.cx - lr * grads[i](0), r.cy - lr * grads[i](1), std::max(kMinExtent, r.w - lr * grads[i](2)),
           std::max(kMinExtent, r.h - lr * grads[i](3))};
    set_block_rect(layout, blocks[i], n);
  }
}

struct StepRecord {
  int step = 0;
  Layout layout;
  double predicted_total = 0.0;
  std::vector<double> per_task;
  PenaltyValues penalties;
  double objective = 0.0;
  bool feasible = false;
  std::vector<SwapEvent> swaps;  // swaps that produced this snapshot
  std::string css;
};

struct OptimizationTrace {
  std::vector<StepRecord> steps;
  std::optional<int> best_step;
  std::optional<std::string> error;

  const StepRecord* best() const { return best_step ? &steps[static_cast<std::size_t>(*best_step)] : nullptr; }
};

inline bool is_feasible(const Layout& l) { return validate_layout(l).empty(); }

inline std::optional<int> select_best_step(const std::vector<StepRecord>& steps) {
  std::optional<int> best;
  for (const auto& s : steps) {
    if (!s.feasible) continue;
    if (!best || s.predicted_total < steps[static_cast<std::size_t>(*best)].predicted_total) best = s.step;
  }
  return best;
}

// Gradient descent on the top-level blocks. The trace holds the initial
// layout plus one snapshot per step. A non-finite objective stops the run and
// is reported in trace.error.
inline OptimizationTrace optimize(const Layout& initial, TaskSequence seq, const ModelParams& params,
                                  const EmbeddingTable& table, const OptimizerConfig& cfg, const PenaltyConfig& pen,
                                  const std::function<void(const StepRecord&)>& on_step = {}) {
  if (!is_feasible(initial)) throw PreconditionViolation("initial layout is not feasible");
  seq.demographics = cfg.demographics;
  OptimizationTrace trace;
  Layout current = initial;
  std::vector<SwapEvent> pending_swaps;
  for (int step = 0; step <= cfg.steps; ++step) {
    const LayoutGradients g = layout_gradients(current, seq, params, table, pen, cfg.clip_norm);
    StepRecord rec;
    rec.step = step;
    rec.layout = current;
    rec.predicted_total = g.predicted_total;
    rec.per_task = g.per_task;
    rec.penalties = g.penalties;
    rec.objective = g.objective;
    rec.feasible = is_feasible(current);
    rec.swaps = std::move(pending_swaps);
    rec.css = export_css(current);
    pending_swaps.clear();
    bool finite = std::isfinite(g.objective);
    for (const auto& c : g.clipped) finite = finite && c.allFinite();
    if (!finite) {
      trace.error = "non-finite objective at step " + std::to_string(step);
      break;
    }
    trace.steps.push_back(std::move(rec));
    if (on_step) on_step(trace.steps.back());
    if (step == cfg.steps) break;

    apply_update(current, g.clipped, cfg.learning_rate);
    std::vector<BlockGrad> swap_grads;
    for (std::size_t i = 0; i < g.blocks.size(); ++i) swap_grads.push_back(g.without_overlap(i));
    if (cfg.swaps) pending_swaps = swap_if_beneficial(current, swap_grads, cfg.swap_guard);
  }
  trace.best_step = select_best_step(trace.steps);
  return trace;
}

// ---------------------------------------------------------------------------
// Trace directory: step_<n>.css, step_<n>.layout.json, summary.json

inline nlohmann::json trace_summary(const OptimizationTrace& t) {
  using nlohmann::json;
  json steps = json::array();
  json swaps = json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"step", s.step},
                     {"predicted_total", s.predicted_total},
                     {"objective", s.objective},
                     {"overlap", s.penalties.overlap},
                     {"boundary", s.penalties.boundary},
                     {"constraints", s.penalties.constraints},
                     {"feasible", s.feasible}});
    for (const auto& e : s.swaps) swaps.push_back({{"step", s.step}, {"a", e.a}, {"b", e.b}, {"score", e.score}});
  }
  json j = {{"steps", steps}, {"swaps", swaps}, {"recorded_steps", t.steps.size()}};
  j["best_step"] = t.best_step ? json(*t.best_step) : json(nullptr);
  if (const StepRecord* b = t.best()) j["best_predicted_total"] = b->predicted_total;
  if (!t.steps.empty()) j["initial_predicted_total"] = t.steps.front().predicted_total;
  j["error"] = t.error ? json(*t.error) : json(nullptr);
  return j;
}

inline void write_step(const std::filesystem::path& dir, const StepRecord& s) {
  std::filesystem::create_directories(dir);
  write_text(dir / ("step_" + std::to_string(s.step) + ".css"), s.css);
  write_json(dir / ("step_" + std::to_string(s.step) + ".layout.json"), to_json(s.layout));
}

inline void write_trace(const std::filesystem::path& dir, const OptimizationTrace& t) {
  std::filesystem::create_directories(dir);
  for (const auto& s : t.steps) write_step(dir, s);
  write_json(dir / "summary.json", trace_summary(t));
}

}  // namespace layoutforge
