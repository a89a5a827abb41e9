#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "layout.hpp"
#include "random.hpp"
#include "tasks.hpp"

namespace layoutforge {

// Synthetic human-performance simulator. Times are in milliseconds.
struct OracleProfile {
  double fitts_a = 100.0;         // ms
  double fitts_b = 150.0;         // ms / bit
  double search_base = 40.0;      // ms per element on screen
  double learning_floor = 0.3;    // search never drops below this fraction
  double learning_decay = 0.6;    // per prior visit of the searched element
  double error_k = 60.0;          // slope of the size -> mis-tap mapping
  double min_comfort_size = 0.06; // normalized by screen width
  double handed_penalty = 80.0;   // ms at the far screen edge for the user's hand
  double noise_sigma = 0.15;      // multiplicative lognormal
  double age_slowdown = 0.05;     // per decade over 30
};

struct VirtualUser {
  std::uint64_t seed = 0;
  bool left_handed = false;
  double age_years = 37.7;
  double speed_factor = 1.0;

  // Population draw: ~10% left-handed, adult ages around the iPhone-user mean.
  static VirtualUser draw(std::uint64_t seed) {
    Rng rng(seed);
    VirtualUser u;
    u.seed = mix_seed(seed, 1);
    u.left_handed = rng.bernoulli(0.1);
    u.age_years = std::clamp(37.7 + 12.0 * rng.normal(), 18.0, 80.0);
    u.speed_factor = std::exp(0.1 * rng.normal());
    return u;
  }
};

struct Point {
  double x = 0.5;
  double y = 0.5;
};

// Per-user memory across a sequence.
struct FamiliarityState {
  std::map<std::string, int> visits;
  Point hand{0.5, 0.5};  // last interaction point, normalized
};

struct StepOutcome {
  double time_ms = 0.0;
  bool minor_error = false;
  bool severe_error = false;
};

inline bool is_destructive_label(const std::string& label) { return label == "save" || label == "cancel"; }

namespace detail {

inline const UiElement& require_element(const Layout& l, const std::string& id) {
  const UiElement* e = l.find_element(id);
  if (e == nullptr) throw SchemaError("step refers to unknown element " + id);
  return *e;
}

inline double fitts_time(const OracleProfile& p, double distance_px, double width_px) {
  return p.fitts_a + p.fitts_b * std::log2(distance_px / width_px + 1.0);
}

}  // namespace detail

// Pointing part of a step: fitts_a + fitts_b * log2(D/W + 1).
inline double pointing_time(const OracleProfile& p, double distance_px, double width_px) {
  return detail::fitts_time(p, distance_px, width_px);
}

inline double minor_error_probability(const OracleProfile& p, double width_norm) {
  return 1.0 / (1.0 + std::exp(-p.error_k * (p.min_comfort_size - width_norm)));
}

// One interaction by one user. `rng` supplies noise and error draws; the
// state is advanced (visit counts, hand position).
inline StepOutcome simulate_step(const Layout& layout, const TaskStep& step, const VirtualUser& user,
                                 FamiliarityState& state, const OracleProfile& p, Rng& rng) {
  const ScreenSpec& s = layout.screen;
  const UiElement& target = detail::require_element(layout, step.target_id);
  const Rect target_rect = effective_rect(target, step, layout);

  Point from = state.hand;
  Point to{target_rect.cx, target_rect.cy};
  double width_px = std::min(target_rect.w * s.width_px, target_rect.h * s.height_px);
  const UiElement* searched = &target;

  if (step.interaction == InteractionType::drag_and_drop) {
    if (!step.destination_id) throw MissingDestination("drag step without destination");
    const UiElement& dest = detail::require_element(layout, *step.destination_id);
    const Rect dr = effective_rect(dest, step, layout);
    from = {target_rect.cx, target_rect.cy};
    to = {dr.cx, dr.cy};
    width_px = std::min(dr.w * s.width_px, dr.h * s.height_px);
    searched = &dest;
  } else if (step.interaction == InteractionType::slide) {
    const Interval range = step.slide_range.value_or(Interval{0.5, 0.75});
    const double mid = 0.5 * (range[0] + range[1]);
    const bool vertical = target.orientation == Orientation::vertical;
    from = {target_rect.cx, target_rect.cy};  // handle rests at the middle
    if (vertical) {
      to = {target_rect.cx, target_rect.top() + mid * target_rect.h};
      width_px = (range[1] - range[0]) * target_rect.h * s.height_px;
    } else {
      to = {target_rect.left() + mid * target_rect.w, target_rect.cy};
      width_px = (range[1] - range[0]) * target_rect.w * s.width_px;
    }
  }

  const double dx = (to.x - from.x) * s.width_px;
  const double dy = (to.y - from.y) * s.height_px;
  const double distance_px = std::sqrt(dx * dx + dy * dy);

  const int prior = state.visits[searched->id];
  const double familiarity = std::max(p.learning_floor, std::exp(-p.learning_decay * prior));
  const double search = p.search_base * static_cast<double>(layout.elements.size()) * familiarity;

  // Thumb reach: targets on the side opposite the dominant hand cost more.
  const double reach = user.left_handed ? std::max(0.0, to.x - 0.5) * 2.0 : std::max(0.0, 0.5 - to.x) * 2.0;
  const double handed = p.handed_penalty * reach;

  const double age_factor = 1.0 + p.age_slowdown * std::max(0.0, (user.age_years - 30.0) / 10.0);
  const double noise = std::exp(p.noise_sigma * rng.normal());

  StepOutcome out;
  out.time_ms = user.speed_factor * age_factor *
                (search + detail::fitts_time(p, distance_px, width_px) + handed) * noise;

  const bool mis_tap = rng.bernoulli(minor_error_probability(p, width_px / s.width_px));
  if (mis_tap) {
    if (is_destructive_label(target.label) && step.interaction == InteractionType::tap) {
      out.severe_error = true;
    } else {
      out.minor_error = true;
    }
  }

  state.visits[searched->id] = prior + 1;
  state.hand = to;
  return out;
}

struct TaskOutcome {
  double time_ms = 0.0;
  bool minor_error = false;
  bool severe_error = false;
};

inline std::vector<TaskOutcome> simulate_user(const Layout& layout, const TaskSequence& seq, const VirtualUser& user,
                                              const OracleProfile& p) {
  Rng rng(user.seed);
  FamiliarityState state;
  std::vector<TaskOutcome> out;
  out.reserve(seq.tasks.size());
  for (const Task& t : seq.tasks) {
    TaskOutcome o;
    for (const TaskStep& st : t.steps) {
      const StepOutcome s = simulate_step(layout, st, user, state, p, rng);
      o.time_ms += s.time_ms;
      o.minor_error = o.minor_error || s.minor_error;
      o.severe_error = o.severe_error || s.severe_error;
    }
    out.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Keeps values within k median absolute deviations of the median (within
// 1e-9 of it when the MAD is zero). Order is preserved.
inline std::vector<double> mad_filter(std::span<const double> values, double k = 1.5) {
  if (values.empty()) throw PreconditionViolation("mad_filter of an empty set");
  const std::vector<double> v(values.begin(), values.end());
  const double med = median_of(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - med));
  const double mad = median_of(dev);
  const double threshold = mad > 0.0 ? k * mad : 1e-9;
  std::vector<double> out;
  for (double x : v)
    if (std::abs(x - med) <= threshold) out.push_back(x);
  return out;
}

// avg_time * (1 + 0.5 * frac_minor + 0.8 * frac_severe)
inline double task_metric(double avg_time, double frac_minor, double frac_severe) {
  return avg_time * (1.0 + 0.5 * frac_minor + 0.8 * frac_severe);
}

struct TaskObservation {
  double metric = 0.0;
  double frac_minor = 0.0;
  double frac_severe = 0.0;
  int n_retained = 0;
};

struct LayoutRecord {
  std::string layout_id;
  Layout layout;
  TaskSequence sequence;  // demographics are those of the simulated users
  std::vector<TaskObservation> tasks;

  std::vector<double> observed() const {
    std::vector<double> v;
    v.reserve(tasks.size());
    for (const auto& t : tasks) v.push_back(t.metric);
    return v;
  }
  double sequence_metric() const {
    double s = 0.0;
    for (const auto& t : tasks) s += t.metric;
    return s;
  }
};

struct Dataset {
  std::vector<LayoutRecord> records;
};

inline constexpr int kMinUsers = 3;

// Aggregates per-user outcomes of one layout into the task metric.
inline LayoutRecord aggregate_users(std::string id, const Layout& layout, const TaskSequence& seq,
                                   const std::vector<VirtualUser>& users,
                                   const std::vector<std::vector<TaskOutcome>>& outcomes) {
  LayoutRecord rec;
  rec.layout_id = std::move(id);
  rec.layout = layout;
  rec.sequence = seq;
  double left = 0.0, age = 0.0;
  for (const auto& u : users) {
    left += u.left_handed ? 1.0 : 0.0;
    age += u.age_years;
  }
  const double n = static_cast<double>(users.size());
  rec.sequence.demographics = {left / n, age / n};

  for (std::size_t ti = 0; ti < seq.tasks.size(); ++ti) {
    std::vector<double> correct, all;
    int minor = 0, severe = 0;
    for (const auto& per_user : outcomes) {
      const TaskOutcome& o = per_user[ti];
      all.push_back(o.time_ms);
      if (o.severe_error) {
        ++severe;
      } else if (o.minor_error) {
        ++minor;
      } else {
        correct.push_back(o.time_ms);
      }
    }
    // With nobody correct the penalty terms still carry the signal; fall back
    // to every completion time.
    const std::vector<double> kept = mad_filter(correct.empty() ? all : correct);
    const double avg = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
    TaskObservation obs;
    obs.frac_minor = minor / n;
    obs.frac_severe = severe / n;
    obs.metric = task_metric(avg, obs.frac_minor, obs.frac_severe);
    obs.n_retained = static_cast<int>(kept.size());
    rec.tasks.push_back(obs);
  }
  return rec;
}

struct NamedLayout {
  std::string id;
  Layout layout;
};

// Runs `n_users` fresh virtual users through `seq` on every layout. User i of
// layout j is seeded from (seed, j, i), so results depend only on the order
// of `layouts`.
inline Dataset simulate_dataset(const std::vector<NamedLayout>& layouts, const TaskSequence& seq, int n_users,
                                std::uint64_t seed, const OracleProfile& profile = {}) {
  if (n_users < kMinUsers) throw PreconditionViolation("simulate_dataset needs at least 3 users");
  Dataset d;
  for (std::size_t j = 0; j < layouts.size(); ++j) {
    std::vector<VirtualUser> users;
    std::vector<std::vector<TaskOutcome>> outcomes;
    for (int i = 0; i < n_users; ++i) {
      users.push_back(VirtualUser::draw(mix_seed(mix_seed(seed, j), static_cast<std::uint64_t>(i))));
      outcomes.push_back(simulate_user(layouts[j].layout, seq, users.back(), profile));
    }
    d.records.push_back(aggregate_users(layouts[j].id, layouts[j].layout, seq, users, outcomes));
  }
  return d;
}

// Sum over tasks of the oracle metric for one layout.
inline double oracle_sequence_metric(const Layout& layout, const TaskSequence& seq, int n_users, std::uint64_t seed,
                                     const OracleProfile& profile = {}) {
  return simulate_dataset({{"layout", layout}}, seq, n_users, seed, profile).records.front().sequence_metric();
}

// ---------------------------------------------------------------------------
// JSON-lines: one record per (layout id, task index).

inline std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& r : d.records) {
    for (std::size_t i = 0; i < r.tasks.size(); ++i) {
      const auto& t = r.tasks[i];
      nlohmann::json j = {{"layout_id", r.layout_id},   {"task_index", i},
                          {"metric", t.metric},         {"frac_minor", t.frac_minor},
                          {"frac_severe", t.frac_severe}, {"n_retained", t.n_retained}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

// Layouts, sequence and per-layout demographics that the JSON-lines records
// refer to.
inline nlohmann::json dataset_meta(const Dataset& d) {
  nlohmann::json layouts = nlohmann::json::object();
  nlohmann::json demographics = nlohmann::json::object();
  for (const auto& r : d.records) {
    layouts[r.layout_id] = to_json(r.layout);
    demographics[r.layout_id] = {{"frac_left_handed", r.sequence.demographics.frac_left_handed},
                                 {"avg_age_years", r.sequence.demographics.avg_age_years}};
  }
  nlohmann::json seq = d.records.empty() ? nlohmann::json::object() : to_json(d.records.front().sequence);
  return {{"layouts", std::move(layouts)}, {"demographics", std::move(demographics)}, {"sequence", std::move(seq)}};
}

inline Dataset dataset_from_jsonl(const std::string& jsonl, const nlohmann::json& meta) {
  Dataset d;
  std::map<std::string, std::size_t> index;
  std::size_t pos = 0;
  try {
    const TaskSequence seq = sequence_from_json(meta.at("sequence"));
    while (pos < jsonl.size()) {
      const std::size_t end = jsonl.find('\n', pos);
      const std::string line = jsonl.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      pos = end == std::string::npos ? jsonl.size() : end + 1;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      const std::string id = j.at("layout_id").get<std::string>();
      auto it = index.find(id);
      if (it == index.end()) {
        LayoutRecord r;
        r.layout_id = id;
        r.layout = layout_from_json(meta.at("layouts").at(id));
        r.sequence = seq;
        const auto& dem = meta.at("demographics").at(id);
        r.sequence.demographics = {dem.at("frac_left_handed").get<double>(), dem.at("avg_age_years").get<double>()};
        it = index.emplace(id, d.records.size()).first;
        d.records.push_back(std::move(r));
      }
      LayoutRecord& r = d.records[it->second];
      const auto ti = j.at("task_index").get<std::size_t>();
      if (ti != r.tasks.size()) throw SchemaError("task records out of order for " + id);
      r.tasks.push_back({j.at("metric").get<double>(), j.at("frac_minor").get<double>(),
                         j.at("frac_severe").get<double>(), j.at("n_retained").get<int>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad dataset: ") + ex.what());
  }
  for (const auto& r : d.records)
    if (r.tasks.size() != r.sequence.tasks.size()) throw SchemaError("dataset/sequence length mismatch for " + r.layout_id);
  return d;
}

}  // namespace layoutforge
