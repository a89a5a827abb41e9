#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "autodiff.hpp"
#include "features.hpp"
#include "layout.hpp"
#include "random.hpp"
#include "tasks.hpp"

namespace layoutforge {

using ad::Matrix;
using ad::Var;

struct ModelConfig {
  int input_width = feature::kWidth;  // 27
  int encoder_hidden = 23;
  int tail_width = kTaskTailWidth;  // 8
  int predictor_hidden = 30;
  int feedforward = 28;
  double embedding_dropout = 0.1;
  double feedforward_dropout = 0.4;

  int predictor_input() const { return encoder_hidden + tail_width; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LstmWeights {
  Matrix w_in;   // 4H x I
  Matrix w_rec;  // 4H x H
  Matrix bias;   // 4H x 1
};

// Encoder: two stacked LSTMs over the element rows of one step; the last
// hidden state of the second layer is the step's embedding. Predictor: two
// stacked LSTMs over [embedding; task tail] whose state runs through the
// whole sequence, then ReLU feed-forward and a linear head.
struct ModelParams {
  ModelConfig config;
  LstmWeights enc1, enc2, pred1, pred2;
  Matrix ff_w, ff_b;      // F x P, F x 1
  Matrix head_w, head_b;  // 1 x F, 1 x 1
  // step time = output_offset + output_scale * head(...). Fixed from data
  // statistics before training so the network works in standardized units.
  double output_offset = 0.0;
  double output_scale = 1.0;

  static constexpr std::array<const char*, 16> kTensorNames = {
      "enc1.w_in",  "enc1.w_rec",  "enc1.bias",  "enc2.w_in",  "enc2.w_rec",  "enc2.bias", "pred1.w_in", "pred1.w_rec",
      "pred1.bias", "pred2.w_in", "pred2.w_rec", "pred2.bias", "ff.w",        "ff.b",      "head.w",     "head.b"};

  std::array<Matrix*, 16> tensors() {
    return {&enc1.w_in, &enc1.w_rec, &enc1.bias, &enc2.w_in, &enc2.w_rec, &enc2.bias, &pred1.w_in, &pred1.w_rec,
            &pred1.bias, &pred2.w_in, &pred2.w_rec, &pred2.bias, &ff_w, &ff_b, &head_w, &head_b};
  }
  std::array<const Matrix*, 16> tensors() const {
    return {&enc1.w_in, &enc1.w_rec, &enc1.bias, &enc2.w_in, &enc2.w_rec, &enc2.bias, &pred1.w_in, &pred1.w_rec,
            &pred1.bias, &pred2.w_in, &pred2.w_rec, &pred2.bias, &ff_w, &ff_b, &head_w, &head_b};
  }

  // Expected (rows, cols) per tensor for `config`.
  static std::array<std::pair<Eigen::Index, Eigen::Index>, 16> shapes(const ModelConfig& c) {
    const int he = c.encoder_hidden, hp = c.predictor_hidden, f = c.feedforward;
    return {{{4 * he, c.input_width}, {4 * he, he}, {4 * he, 1},
             {4 * he, he}, {4 * he, he}, {4 * he, 1},
             {4 * hp, c.predictor_input()}, {4 * hp, hp}, {4 * hp, 1},
             {4 * hp, hp}, {4 * hp, hp}, {4 * hp, 1},
             {f, hp}, {f, 1}, {1, f}, {1, 1}}};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* m : tensors()) n += static_cast<std::size_t>(m->size());
    return n;
  }

  // Uniform in [-k, k] with k = 1/sqrt(fan-in) of the layer's input weights.
  static ModelParams initialize(std::uint64_t seed, const ModelConfig& config = {}) {
    ModelParams p;
    p.config = config;
    Rng rng(seed);
    const auto sh = shapes(config);
    auto fill = [&](Matrix& m, std::pair<Eigen::Index, Eigen::Index> shape, double fan_in) {
      const double k = 1.0 / std::sqrt(fan_in);
      m.resize(shape.first, shape.second);
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-k, k);
    };
    auto ts = p.tensors();
    const std::array<double, 16> fan_in = {
        double(config.input_width),      double(config.encoder_hidden),   double(config.input_width),
        double(config.encoder_hidden),   double(config.encoder_hidden),   double(config.encoder_hidden),
        double(config.predictor_input()), double(config.predictor_hidden), double(config.predictor_input()),
        double(config.predictor_hidden), double(config.predictor_hidden), double(config.predictor_hidden),
        double(config.predictor_hidden), double(config.predictor_hidden), double(config.feedforward),
        double(config.feedforward)};
    for (std::size_t i = 0; i < ts.size(); ++i) fill(*ts[i], sh[i], fan_in[i]);
    return p;
  }
};

// Tape leaves mirroring ModelParams.
struct ModelVars {
  std::array<Var, 16> t;

  static ModelVars bind(ad::Tape& tape, const ModelParams& p, bool requires_grad) {
    ModelVars v;
    const auto ts = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) v.t[i] = tape.leaf(*ts[i], requires_grad);
    return v;
  }
  const Var& operator[](std::size_t i) const { return t[i]; }
};

namespace detail {
enum TensorIndex : std::size_t {
  kEnc1In, kEnc1Rec, kEnc1Bias, kEnc2In, kEnc2Rec, kEnc2Bias,
  kPred1In, kPred1Rec, kPred1Bias, kPred2In, kPred2Rec, kPred2Bias,
  kFfW, kFfB, kHeadW, kHeadB
};

inline Matrix to_column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}
}  // namespace detail

struct ForwardOptions {
  bool train = false;
  std::uint64_t seed = 0;
  // Make every feature row a differentiable leaf.
  bool input_grads = false;
};

// Everything recorded for one sequence on one layout.
struct SequenceGraph {
  std::vector<Var> step_outputs;
  std::vector<Var> task_outputs;
  Var total;
  // [step][row] leaves and the element each row encodes (reading order).
  std::vector<std::vector<Var>> row_leaves;
  std::vector<const UiElement*> order;
};

// Embedding of one step from its element rows.
inline Var encode_task(ad::Tape& tape, const ModelVars& m, const ModelConfig& cfg, std::span<const Var> rows,
                       bool train, std::uint64_t seed) {
  using namespace detail;
  if (rows.empty()) throw EmptyLayout("cannot encode a layout with no elements");
  Var hc1 = tape.constant(Matrix::Zero(2 * cfg.encoder_hidden, 1));
  Var hc2 = hc1;
  for (const Var& row : rows) {
    if (row.rows() != cfg.input_width) throw ShapeMismatch("feature row width");
    hc1 = ad::lstm_cell_packed(row, hc1, m[kEnc1In], m[kEnc1Rec], m[kEnc1Bias]);
    hc2 = ad::lstm_cell_packed(ad::slice(hc1, 0, cfg.encoder_hidden), hc2, m[kEnc2In], m[kEnc2Rec], m[kEnc2Bias]);
  }
  return ad::dropout(ad::slice(hc2, 0, cfg.encoder_hidden), cfg.embedding_dropout, train, seed);
}

inline SequenceGraph build_sequence_graph(ad::Tape& tape, const ModelVars& m, const ModelParams& params,
                                          const Layout& layout, const TaskSequence& seq, const EmbeddingTable& table,
                                          const ForwardOptions& opt) {
  using namespace detail;
  const ModelConfig& cfg = params.config;
  SequenceGraph g;
  g.order = order_elements(layout);
  if (g.order.empty()) throw EmptyLayout("layout has no encodable elements");

  Var hc1 = tape.constant(Matrix::Zero(2 * cfg.predictor_hidden, 1));
  Var hc2 = hc1;
  std::uint64_t dropout_stream = 0;
  for (const Task& task : seq.tasks) {
    Var task_sum;
    for (const TaskStep& step : task.steps) {
      const StepEncoding enc = encode_step(layout, g.order, step, seq.demographics, table);
      std::vector<Var> rows;
      rows.reserve(enc.rows.size());
      for (const auto& r : enc.rows) rows.push_back(tape.leaf(to_column(r), opt.input_grads));
      const Var emb = encode_task(tape, m, cfg, rows, opt.train, mix_seed(opt.seed, dropout_stream++));
      const Var input = ad::concat({emb, tape.constant(to_column(enc.tail))});
      hc1 = ad::lstm_cell_packed(input, hc1, m[kPred1In], m[kPred1Rec], m[kPred1Bias]);
      hc2 = ad::lstm_cell_packed(ad::slice(hc1, 0, cfg.predictor_hidden), hc2, m[kPred2In], m[kPred2Rec],
                                 m[kPred2Bias]);
      Var hidden = ad::relu(ad::add(ad::matvec(m[kFfW], ad::slice(hc2, 0, cfg.predictor_hidden)), m[kFfB]));
      hidden = ad::dropout(hidden, cfg.feedforward_dropout, opt.train, mix_seed(opt.seed, dropout_stream++));
      const Var raw = ad::add(ad::matvec(m[kHeadW], hidden), m[kHeadB]);
      const Var out = ad::add_scalar(ad::scale(raw, params.output_scale), params.output_offset);
      g.step_outputs.push_back(out);
      g.row_leaves.push_back(std::move(rows));
      task_sum = task_sum.valid() ? ad::add(task_sum, out) : out;
    }
    g.task_outputs.push_back(task_sum);
  }
  g.total = g.task_outputs.front();
  for (std::size_t i = 1; i < g.task_outputs.size(); ++i) g.total = ad::add(g.total, g.task_outputs[i]);
  return g;
}

struct PredictionResult {
  std::vector<double> per_step;
  std::vector<double> per_task;
  double total = 0.0;
};

inline PredictionResult predict_sequence(const Layout& layout, const TaskSequence& seq, const ModelParams& params,
                                         const EmbeddingTable& table, bool train = false, std::uint64_t seed = 0) {
  if (seq.tasks.empty()) return {};
  ad::Tape tape;
  const ModelVars vars = ModelVars::bind(tape, params, false);
  const SequenceGraph g = build_sequence_graph(tape, vars, params, layout, seq, table, {train, seed, false});
  PredictionResult r;
  for (const Var& v : g.step_outputs) r.per_step.push_back(v.scalar());
  for (const Var& v : g.task_outputs) r.per_task.push_back(v.scalar());
  r.total = g.total.scalar();
  return r;
}

// ---------------------------------------------------------------------------
// Loss and metrics

// sum (y - t)^2 / sum (y - mean y)^2 ; equals 1 - R^2.
inline double loss_ls(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw ShapeMismatch("loss: length mismatch");
  if (observed.size() < 2) throw PreconditionViolation("loss needs at least two tasks");
  double mean = 0.0;
  for (double y : observed) mean += y;
  mean /= static_cast<double>(observed.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    num += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    den += (observed[i] - mean) * (observed[i] - mean);
  }
  if (!(den > 0.0)) throw ZeroVariance("observed sequence has zero variance");
  return num / den;
}

inline Var loss_ls(ad::Tape& tape, std::span<const Var> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw ShapeMismatch("loss: length mismatch");
  if (observed.size() < 2) throw PreconditionViolation("loss needs at least two tasks");
  double mean = 0.0;
  for (double y : observed) mean += y;
  mean /= static_cast<double>(observed.size());
  double den = 0.0;
  for (double y : observed) den += (y - mean) * (y - mean);
  if (!(den > 0.0)) throw ZeroVariance("observed sequence has zero variance");
  const Var pred = ad::concat(predicted);
  const Var obs = tape.constant(detail::to_column(observed));
  return ad::scale(ad::sum(ad::square(ad::sub(obs, pred))), 1.0 / den);
}

struct TrialKey {
  std::string target_id;
  int trial_index = 1;
  auto operator<=>(const TrialKey&) const = default;
};

inline std::vector<TrialKey> trial_keys(const TaskSequence& seq) {
  std::vector<TrialKey> keys;
  keys.reserve(seq.tasks.size());
  for (const auto& t : seq.tasks) keys.push_back({t.target_id(), t.trial_index});
  return keys;
}

// R^2 over (target, trial) group means.
inline double target_level_r2(std::span<const double> predicted, std::span<const double> observed,
                              std::span<const TrialKey> keys) {
  if (predicted.size() != observed.size() || keys.size() != observed.size())
    throw ShapeMismatch("target_level_r2: length mismatch");
  std::map<TrialKey, std::tuple<double, double, int>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto& [p, o, n] = groups[keys[i]];
    p += predicted[i];
    o += observed[i];
    ++n;
  }
  if (groups.size() < 2) throw PreconditionViolation("target_level_r2 needs at least two groups");
  std::vector<double> pm, om;
  for (const auto& [k, v] : groups) {
    const auto& [p, o, n] = v;
    pm.push_back(p / n);
    om.push_back(o / n);
  }
  return 1.0 - loss_ls(pm, om);
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const ModelParams& p) {
  using nlohmann::json;
  json tensors = json::object();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Matrix& m = *ts[i];
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    for (Eigen::Index k = 0; k < m.size(); ++k) data[static_cast<std::size_t>(k)] = m(k);
    tensors[ModelParams::kTensorNames[i]] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  }
  const auto& c = p.config;
  return {{"format", "layoutforge-model"},
          {"version", kModelFormatVersion},
          {"config",
           {{"input_width", c.input_width},
            {"encoder_hidden", c.encoder_hidden},
            {"tail_width", c.tail_width},
            {"predictor_hidden", c.predictor_hidden},
            {"feedforward", c.feedforward},
            {"embedding_dropout", c.embedding_dropout},
            {"feedforward_dropout", c.feedforward_dropout}}},
          {"output_offset", p.output_offset},
          {"output_scale", p.output_scale},
          {"tensors", std::move(tensors)}};
}

// Refuses files whose version or tensor shapes do not match the manifest.
inline ModelParams model_from_json(const nlohmann::json& j, const ModelConfig& expected = {}) {
  try {
    if (j.at("format").get<std::string>() != "layoutforge-model") throw SchemaError("not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw SchemaError("unsupported model version");
    ModelParams p;
    const auto& c = j.at("config");
    p.config.input_width = c.at("input_width").get<int>();
    p.config.encoder_hidden = c.at("encoder_hidden").get<int>();
    p.config.tail_width = c.at("tail_width").get<int>();
    p.config.predictor_hidden = c.at("predictor_hidden").get<int>();
    p.config.feedforward = c.at("feedforward").get<int>();
    p.config.embedding_dropout = c.at("embedding_dropout").get<double>();
    p.config.feedforward_dropout = c.at("feedforward_dropout").get<double>();
    if (p.config.input_width != expected.input_width || p.config.tail_width != expected.tail_width)
      throw ShapeMismatch("model input widths do not match the feature encoder");
    p.output_offset = j.at("output_offset").get<double>();
    p.output_scale = j.at("output_scale").get<double>();
    const auto shapes = ModelParams::shapes(p.config);
    auto ts = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto& jt = j.at("tensors").at(ModelParams::kTensorNames[i]);
      const auto rows = jt.at("rows").get<Eigen::Index>();
      const auto cols = jt.at("cols").get<Eigen::Index>();
      const auto data = jt.at("data").get<std::vector<double>>();
      if (rows != shapes[i].first || cols != shapes[i].second || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ShapeMismatch(std::string("tensor shape mismatch: ") + ModelParams::kTensorNames[i]);
      ts[i]->resize(rows, cols);
      for (Eigen::Index k = 0; k < rows * cols; ++k) (*ts[i])(k) = data[static_cast<std::size_t>(k)];
    }
    return p;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad model file: ") + ex.what());
  }
}

}  // namespace layoutforge
