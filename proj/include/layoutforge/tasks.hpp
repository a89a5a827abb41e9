#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "random.hpp"

namespace layoutforge {

enum class InteractionType : int { tap = 0, acquire, drag_and_drop, slide };
inline constexpr int kInteractionTypeCount = 4;

inline constexpr std::array<std::string_view, kInteractionTypeCount> kInteractionNames = {"tap", "acquire",
                                                                                          "drag-and-drop", "slide"};

inline std::string_view to_string(InteractionType t) { return kInteractionNames[static_cast<int>(t)]; }

inline InteractionType parse_interaction(std::string_view s) {
  for (int i = 0; i < kInteractionTypeCount; ++i)
    if (kInteractionNames[i] == s) return static_cast<InteractionType>(i);
  throw SchemaError("unknown interaction: " + std::string(s));
}

using Interval = std::array<double, 2>;
using Point2 = std::array<double, 2>;

struct TaskStep {
  InteractionType interaction = InteractionType::tap;
  std::string target_id;
  std::optional<std::string> destination_id;  // drag-and-drop and slide only
  int step_index = 1;
  int total_steps = 1;
  std::optional<Interval> slide_range;
  // Center of an anchored destination for this step, in its anchor's [0,1]^2
  // frame. Lets drop targets move between photos without a new layout.
  std::optional<Point2> drop_position;

  friend bool operator==(const TaskStep&, const TaskStep&) = default;
};

struct Task {
  int task_type = 1;
  std::vector<TaskStep> steps;
  int trial_index = 1;

  // Element the task is "about": the last step's target.
  const std::string& target_id() const { return steps.back().target_id; }
  friend bool operator==(const Task&, const Task&) = default;
};

struct Demographics {
  double frac_left_handed = 0.1;
  double avg_age_years = 37.7;
  friend bool operator==(const Demographics&, const Demographics&) = default;
};

struct TaskSequence {
  std::vector<Task> tasks;
  Demographics demographics;

  std::size_t step_count() const {
    std::size_t n = 0;
    for (const auto& t : tasks) n += t.steps.size();
    return n;
  }
  friend bool operator==(const TaskSequence&, const TaskSequence&) = default;
};

// What a task asks for before it is broken into interactions.
struct TaskSpec {
  int task_type = 1;
  std::string target;
  std::optional<std::string> destination;
  // Element tapped first to reveal the target (task type 2).
  std::optional<std::string> opener;
  std::optional<Interval> slide_range;
  std::optional<Point2> drop_position;
};

// Interactions for one task:
//   types 1, 5: tap
//   type 2:     tap(opener), tap(target)   or, with a destination,
//               tap(opener), acquire(target), drag-and-drop(target -> destination)
//   type 3:     acquire(slider), slide(slider -> range)
//   type 4:     acquire(target), drag-and-drop(target -> destination)
inline std::vector<TaskStep> expand_steps(const TaskSpec& spec) {
  std::vector<TaskStep> steps;
  auto need_destination = [&] {
    if (!spec.destination) throw MissingDestination("task type " + std::to_string(spec.task_type) + " needs a destination");
  };
  auto tap = [](const std::string& id) { return TaskStep{InteractionType::tap, id, std::nullopt, 0, 0, {}, {}}; };
  auto acquire = [](const std::string& id) { return TaskStep{InteractionType::acquire, id, std::nullopt, 0, 0, {}, {}}; };
  switch (spec.task_type) {
    case 1:
    case 5:
      steps.push_back(tap(spec.target));
      break;
    case 2:
      if (!spec.opener) throw MissingDestination("task type 2 needs an opener");
      steps.push_back(tap(*spec.opener));
      if (spec.destination) {
        steps.push_back(acquire(spec.target));
        steps.push_back({InteractionType::drag_and_drop, spec.target, spec.destination, 0, 0, {}, spec.drop_position});
      } else {
        steps.push_back(tap(spec.target));
      }
      break;
    case 3:
      need_destination();
      steps.push_back(acquire(spec.target));
      steps.push_back({InteractionType::slide, spec.target, spec.destination, 0, 0,
                       spec.slide_range.value_or(Interval{0.5, 0.75}), {}});
      break;
    case 4:
      need_destination();
      steps.push_back(acquire(spec.target));
      steps.push_back({InteractionType::drag_and_drop, spec.target, spec.destination, 0, 0, {}, spec.drop_position});
      break;
    default:
      throw PreconditionViolation("task type must be 1..5, got " + std::to_string(spec.task_type));
  }
  const int n = static_cast<int>(steps.size());
  for (int i = 0; i < n; ++i) {
    steps[i].step_index = i + 1;
    steps[i].total_steps = n;
  }
  return steps;
}

// Appends tasks while maintaining per-(target, task type) trial counters.
class SequenceBuilder {
 public:
  void add(const TaskSpec& spec) {
    Task t;
    t.task_type = spec.task_type;
    t.steps = expand_steps(spec);
    t.trial_index = ++trials_[{t.target_id(), t.task_type}];
    seq_.tasks.push_back(std::move(t));
  }
  TaskSequence finish(Demographics d = {}) {
    seq_.demographics = d;
    return std::move(seq_);
  }

 private:
  TaskSequence seq_;
  std::map<std::pair<std::string, int>, int> trials_;
};

// ---------------------------------------------------------------------------
// Photo editing

inline constexpr int kPhotoTasksBase = 14;

// Per photo: three rounds of {open a sticker set and pick a sticker, pick the
// set's other sticker, resize with the slider, drag a sticker onto a drop
// target}, then undo or upload, every fifth photo both, then save or cancel.
// 16 photos of 14 tasks and 4 of 15 give 284 tasks for 20 photos.
inline TaskSequence build_photo_editing_sequence(int n_photos, std::uint64_t seed) {
  if (n_photos < 1) throw PreconditionViolation("n_photos must be >= 1");
  Rng rng(seed);
  struct Category {
    std::string button;
    std::array<std::string, 2> stickers;
  };
  const std::array<Category, 3> categories = {Category{"btn_text", {"st_hello", "st_wow"}},
                                              Category{"btn_emoji", {"st_smile", "st_heart"}},
                                              Category{"btn_filter", {"st_sepia", "st_mono"}}};
  const std::array<std::string, 3> drops = {"drop_red", "drop_green", "drop_blue"};
  const std::array<Interval, 4> ranges = {Interval{0.0, 0.25}, Interval{0.25, 0.5}, Interval{0.5, 0.75},
                                          Interval{0.75, 1.0}};

  SequenceBuilder b;
  for (int p = 0; p < n_photos; ++p) {
    // Drop targets move for every photo.
    std::array<Point2, 3> drop_pos;
    for (auto& d : drop_pos) d = {rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)};
    std::array<int, 3> cat_order = {0, 1, 2};
    rng.shuffle(cat_order);
    std::array<int, 3> drop_order = {0, 1, 2};
    rng.shuffle(drop_order);

    for (int r = 0; r < 3; ++r) {
      const Category& cat = categories[cat_order[r]];
      const std::size_t first = rng.index(2);
      const std::string& picked = cat.stickers[first];
      const std::string& other = cat.stickers[1 - first];
      b.add({.task_type = 2, .target = picked, .opener = cat.button});
      b.add({.task_type = 1, .target = other});
      b.add({.task_type = 3, .target = "slider", .destination = "slider", .slide_range = ranges[rng.index(4)]});
      const int d = drop_order[r];
      b.add({.task_type = 4, .target = rng.bernoulli(0.5) ? picked : other, .destination = drops[d],
             .drop_position = drop_pos[d]});
    }
    const bool undo_first = p % 2 == 0;
    b.add({.task_type = 5, .target = undo_first ? "undo" : "upload"});
    if (p % 5 == 4) b.add({.task_type = 5, .target = undo_first ? "upload" : "undo"});
    b.add({.task_type = 5, .target = p % 4 == 3 ? "btn_cancel" : "btn_save"});
  }
  return b.finish();
}

// ---------------------------------------------------------------------------
// Recipe planner

inline constexpr int kRecipeRounds = 8;

// Each round of 17 tasks drags every ingredient into the like or dislike box
// (half of them after opening their set first), undoes and redoes one drop,
// and finishes with Get Recipe.
inline TaskSequence build_recipe_sequence(std::uint64_t seed, int rounds = kRecipeRounds) {
  Rng rng(seed);
  struct Category {
    std::string button;
    std::array<std::string, 2> items;
  };
  const std::array<Category, 3> categories = {Category{"btn_grains", {"ing_rice", "ing_bread"}},
                                              Category{"btn_fruits", {"ing_apple", "ing_pear"}},
                                              Category{"btn_veg", {"ing_carrot", "ing_broccoli"}}};
  auto box = [&] { return std::string(rng.bernoulli(0.5) ? "like_box" : "dislike_box"); };

  SequenceBuilder b;
  for (int round = 0; round < rounds; ++round) {
    std::array<int, 3> order = {0, 1, 2};
    rng.shuffle(order);
    std::string last_item, last_box;
    for (int c : order) {
      const Category& cat = categories[c];
      const std::size_t first = rng.index(2);
      last_box = box();
      b.add({.task_type = 2, .target = cat.items[first], .destination = last_box, .opener = cat.button});
      last_item = cat.items[1 - first];
      last_box = box();
      b.add({.task_type = 4, .target = last_item, .destination = last_box});
    }
    b.add({.task_type = 5, .target = "undo"});
    b.add({.task_type = 4, .target = last_item, .destination = last_box});
    rng.shuffle(order);
    for (int c : order) {
      const Category& cat = categories[c];
      b.add({.task_type = 5, .target = cat.button});
      b.add({.task_type = 4, .target = cat.items[rng.index(2)], .destination = box()});
    }
    b.add({.task_type = 5, .target = "cancel"});
    b.add({.task_type = 5, .target = "btn_recipe"});
    b.add({.task_type = 5, .target = categories[rng.index(3)].button});
  }
  return b.finish();
}

// First `n_tasks` tasks; trial indices stay valid because they only count
// earlier occurrences.
inline TaskSequence truncate_sequence(TaskSequence s, std::size_t n_tasks) {
  if (s.tasks.size() > n_tasks) s.tasks.resize(n_tasks);
  return s;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const TaskSequence& s) {
  using nlohmann::json;
  json tasks = json::array();
  for (const auto& t : s.tasks) {
    json steps = json::array();
    for (const auto& st : t.steps) {
      json js = {{"interaction", to_string(st.interaction)},
                 {"target_id", st.target_id},
                 {"step_index", st.step_index},
                 {"total_steps", st.total_steps}};
      if (st.destination_id) js["destination_id"] = *st.destination_id;
      if (st.slide_range) js["slide_range"] = *st.slide_range;
      if (st.drop_position) js["drop_position"] = *st.drop_position;
      steps.push_back(std::move(js));
    }
    tasks.push_back({{"task_type", t.task_type}, {"steps", std::move(steps)}, {"trial_index", t.trial_index}});
  }
  return {{"demographics",
           {{"frac_left_handed", s.demographics.frac_left_handed}, {"avg_age_years", s.demographics.avg_age_years}}},
          {"tasks", std::move(tasks)}};
}

inline TaskSequence sequence_from_json(const nlohmann::json& j) {
  TaskSequence s;
  try {
    const auto& d = j.at("demographics");
    s.demographics.frac_left_handed = d.at("frac_left_handed").get<double>();
    s.demographics.avg_age_years = d.at("avg_age_years").get<double>();
    for (const auto& jt : j.at("tasks")) {
      Task t;
      t.task_type = jt.at("task_type").get<int>();
      t.trial_index = jt.at("trial_index").get<int>();
      for (const auto& js : jt.at("steps")) {
        TaskStep st;
        st.interaction = parse_interaction(js.at("interaction").get<std::string>());
        st.target_id = js.at("target_id").get<std::string>();
        st.step_index = js.at("step_index").get<int>();
        st.total_steps = js.at("total_steps").get<int>();
        if (js.contains("destination_id")) st.destination_id = js.at("destination_id").get<std::string>();
        if (js.contains("slide_range")) st.slide_range = js.at("slide_range").get<Interval>();
        if (js.contains("drop_position")) st.drop_position = js.at("drop_position").get<Point2>();
        t.steps.push_back(std::move(st));
      }
      if (t.steps.empty()) throw SchemaError("task without steps");
      s.tasks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad task sequence: ") + ex.what());
  }
  if (!(s.demographics.frac_left_handed >= 0.0 && s.demographics.frac_left_handed <= 1.0) ||
      !(s.demographics.avg_age_years > 0.0))
    throw SchemaError("demographics out of range");
  return s;
}

}  // namespace layoutforge
