#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "layout.hpp"
#include "random.hpp"
#include "tasks.hpp"

namespace layoutforge {

inline constexpr int kEmbeddingDim = 4;

// Column layout of a FeatureRow.
namespace feature {
inline constexpr int kTarget = 0;       // 3: target / destination / other
inline constexpr int kSalience = 3;     // 1
inline constexpr int kEmbedding = 4;    // 4
inline constexpr int kSpatial = 8;      // 4: cx cy w h
inline constexpr int kOrientation = 12; // 3
inline constexpr int kContainer = 15;   // 4: cx cy w h, zeros when free
inline constexpr int kKind = 19;        // 8
inline constexpr int kWidth = 27;
}  // namespace feature

inline constexpr int kMaxStepsCap = 4;
inline constexpr int kTaskTailWidth = kInteractionTypeCount + 4;

using FeatureRow = std::array<double, feature::kWidth>;
using TaskFeatureTail = std::array<double, kTaskTailWidth>;
using Embedding = std::array<double, kEmbeddingDim>;

// Word -> unit 4-vector. Words in the same semantic group are built around a
// shared random direction so they end up close to each other.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  static EmbeddingTable builtin(std::uint64_t seed = 0x1f2e3d4cULL) {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
        {"controls", {"undo", "upload", "save", "cancel", "recipe"}},
        {"categories", {"text", "emoji", "filter", "grains", "fruits", "veg"}},
        {"stickers", {"hello", "wow", "smile", "heart", "sepia", "mono"}},
        {"ingredients", {"apple", "pear", "rice", "bread", "carrot", "broccoli"}},
        {"targets", {"red", "green", "blue", "like", "dislike"}},
        {"surfaces", {"photo", "slider"}},
    };
    EmbeddingTable t;
    Rng rng(seed);
    for (const auto& [group, words] : groups) {
      Embedding center;
      for (auto& c : center) c = rng.normal();
      normalize(center);
      for (const auto& w : words) {
        Embedding v;
        for (int i = 0; i < kEmbeddingDim; ++i) v[i] = center[i] + 0.3 * rng.normal();
        normalize(v);
        t.vectors_[w] = v;
      }
    }
    t.recompute_max_length();
    return t;
  }

  const Embedding& embed(const std::string& word) const {
    auto it = vectors_.find(word);
    if (it == vectors_.end()) throw UnknownLabel("label not in vocabulary: " + word);
    return it->second;
  }

  bool contains(const std::string& word) const { return vectors_.count(word) > 0; }
  int max_length() const { return max_length_; }
  const std::map<std::string, Embedding>& vectors() const { return vectors_; }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [w, v] : vectors_) j[w] = v;
    return j;
  }

  static EmbeddingTable from_json(const nlohmann::json& j) {
    EmbeddingTable t;
    for (auto it = j.begin(); it != j.end(); ++it) t.vectors_[it.key()] = it.value().get<Embedding>();
    t.recompute_max_length();
    return t;
  }

 private:
  static void normalize(Embedding& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  }

  void recompute_max_length() {
    max_length_ = 1;
    for (const auto& [w, v] : vectors_) max_length_ = std::max<int>(max_length_, static_cast<int>(w.size()));
  }

  std::map<std::string, Embedding> vectors_;
  int max_length_ = 1;
};

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < kEmbeddingDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

inline Embedding embed_label(const EmbeddingTable& table, const std::string& word) { return table.embed(word); }

// Where `e` sits during `step`: anchored drop targets can be relocated by the
// step's drop_position.
inline Rect effective_rect(const UiElement& e, const TaskStep& step, const Layout& layout) {
  if (e.anchor_id && step.drop_position && step.destination_id == e.id) {
    const UiElement* a = layout.find_element(*e.anchor_id);
    if (a != nullptr) {
      return Rect{a->rect.left() + (*step.drop_position)[0] * a->rect.w,
                  a->rect.top() + (*step.drop_position)[1] * a->rect.h, e.rect.w, e.rect.h};
    }
  }
  return e.rect;
}

inline FeatureRow element_features(const UiElement& e, const TaskStep& step, const Layout& layout,
                                   const EmbeddingTable& table) {
  FeatureRow row{};
  using namespace feature;
  if (e.id == step.target_id) {
    row[kTarget + 0] = 1.0;
  } else if (step.destination_id && *step.destination_id == e.id) {
    row[kTarget + 1] = 1.0;
  } else {
    row[kTarget + 2] = 1.0;
  }
  const double s = 2.0 * static_cast<double>(e.label_salience) / table.max_length() - 1.0;
  row[kSalience] = std::clamp(s, -1.0, 1.0);
  const Embedding& v = table.embed(e.label);
  for (int i = 0; i < kEmbeddingDim; ++i) row[kEmbedding + i] = v[i];
  const Rect r = effective_rect(e, step, layout);
  row[kSpatial + 0] = r.cx;
  row[kSpatial + 1] = r.cy;
  row[kSpatial + 2] = r.w;
  row[kSpatial + 3] = r.h;
  row[kOrientation + static_cast<int>(e.orientation)] = 1.0;
  if (e.container_id) {
    if (const GroupContainer* c = layout.find_container(*e.container_id)) {
      row[kContainer + 0] = c->rect.cx;
      row[kContainer + 1] = c->rect.cy;
      row[kContainer + 2] = c->rect.w;
      row[kContainer + 3] = c->rect.h;
    }
  }
  row[kKind + static_cast<int>(e.kind)] = 1.0;
  return row;
}

inline TaskFeatureTail task_tail(const TaskStep& step, const Demographics& d) {
  TaskFeatureTail t{};
  t[static_cast<int>(step.interaction)] = 1.0;
  t[kInteractionTypeCount + 0] = static_cast<double>(step.step_index) / kMaxStepsCap;
  t[kInteractionTypeCount + 1] = static_cast<double>(step.total_steps) / kMaxStepsCap;
  t[kInteractionTypeCount + 2] = d.frac_left_handed;
  t[kInteractionTypeCount + 3] = d.avg_age_years / 100.0;
  return t;
}

// Encoder input for one step: one row per element in reading order.
struct StepEncoding {
  std::vector<const UiElement*> order;
  std::vector<FeatureRow> rows;
  TaskFeatureTail tail{};
};

inline StepEncoding encode_step(const Layout& layout, const std::vector<const UiElement*>& order,
                                const TaskStep& step, const Demographics& d, const EmbeddingTable& table) {
  StepEncoding enc;
  enc.order = order;
  enc.rows.reserve(order.size());
  for (const UiElement* e : order) enc.rows.push_back(element_features(*e, step, layout, table));
  enc.tail = task_tail(step, d);
  return enc;
}

}  // namespace layoutforge
