#pragma once

#include <optional>
#include <string>
#include <vector>

#include "layout.hpp"

namespace layoutforge {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// One randomizable piece of a UI. Sizes are in pixels for the horizontal
// orientation; a vertical draw swaps them.
struct ElementSpec {
  std::string id;
  ElementKind kind = ElementKind::icon;
  std::string label;
  int label_salience = 1;
  std::optional<double> aspect_ratio;
  std::vector<Orientation> orientations{Orientation::none};
  Range width_px;
  Range height_px;
  std::optional<std::string> anchor_id;  // anchored: sizes are fractions of the anchor
};

struct ContainerSpec {
  std::string id;
  ElementKind kind = ElementKind::icon_group_container;
  std::vector<Orientation> orientations{Orientation::horizontal};
  Range width_px;
  Range height_px;
  std::vector<ElementSpec> members;
};

struct LayoutTemplate {
  std::string name;
  ScreenSpec screen;
  std::vector<ElementSpec> elements;  // free and anchored elements, in placement order
  std::vector<ContainerSpec> containers;
};

// Icons use a symbol, so their salience is a one-character equivalent; text
// labels use their length.
inline constexpr int kIconSalience = 1;

inline int text_salience(const std::string& word) { return static_cast<int>(word.size()); }

inline LayoutTemplate photo_editing_template() {
  LayoutTemplate t;
  t.name = "photo-editing";
  const std::vector<Orientation> hv{Orientation::horizontal, Orientation::vertical};
  t.elements = {
      {"undo", ElementKind::icon, "undo", kIconSalience, 1.0, {Orientation::none}, {28, 64}, {28, 64}, {}},
      {"upload", ElementKind::icon, "upload", kIconSalience, 1.0, {Orientation::none}, {28, 64}, {28, 64}, {}},
      {"photo", ElementKind::static_div, "photo", kIconSalience, {}, {Orientation::none}, {170, 300}, {150, 260}, {}},
      {"slider", ElementKind::slider, "slider", kIconSalience, {}, hv, {110, 240}, {22, 40}, {}},
      {"drop_red", ElementKind::drop_target, "red", kIconSalience, {}, {Orientation::none}, {0.16, 0.26}, {0.16, 0.26}, "photo"},
      {"drop_green", ElementKind::drop_target, "green", kIconSalience, {}, {Orientation::none}, {0.16, 0.26}, {0.16, 0.26}, "photo"},
      {"drop_blue", ElementKind::drop_target, "blue", kIconSalience, {}, {Orientation::none}, {0.16, 0.26}, {0.16, 0.26}, "photo"},
  };
  auto button = [](std::string id, std::string label) {
    ElementSpec s;
    s.id = std::move(id);
    s.kind = ElementKind::button_group_member;
    s.label_salience = text_salience(label);
    s.label = std::move(label);
    return s;
  };
  auto sticker = [](std::string id, std::string label) {
    ElementSpec s;
    s.id = std::move(id);
    s.kind = ElementKind::icon_group_member;
    s.label = std::move(label);
    s.label_salience = kIconSalience;
    s.aspect_ratio = 1.0;
    return s;
  };
  t.containers = {
      {"sticker_buttons", ElementKind::button_group_container, hv, {140, 300}, {28, 56},
       {button("btn_text", "text"), button("btn_emoji", "emoji"), button("btn_filter", "filter")}},
      {"stickers", ElementKind::icon_group_container, {Orientation::none}, {120, 320}, {50, 140},
       {sticker("st_hello", "hello"), sticker("st_wow", "wow"), sticker("st_smile", "smile"),
        sticker("st_heart", "heart"), sticker("st_sepia", "sepia"), sticker("st_mono", "mono")}},
      {"exit_buttons", ElementKind::button_group_container, hv, {100, 220}, {28, 56},
       {button("btn_save", "save"), button("btn_cancel", "cancel")}},
  };
  return t;
}

inline LayoutTemplate recipe_planner_template() {
  LayoutTemplate t;
  t.name = "recipe-planner";
  t.elements = {
      {"undo", ElementKind::icon, "undo", kIconSalience, 1.0, {Orientation::none}, {28, 64}, {28, 64}, {}},
      {"cancel", ElementKind::icon, "cancel", kIconSalience, 1.0, {Orientation::none}, {28, 64}, {28, 64}, {}},
      {"like_box", ElementKind::drop_target, "like", text_salience("like"), {}, {Orientation::none}, {120, 300}, {70, 150}, {}},
      {"dislike_box", ElementKind::drop_target, "dislike", text_salience("dislike"), {}, {Orientation::none}, {120, 300}, {70, 150}, {}},
  };
  auto button = [](std::string id, std::string label) {
    ElementSpec s;
    s.id = std::move(id);
    s.kind = ElementKind::button_group_member;
    s.label_salience = text_salience(label);
    s.label = std::move(label);
    return s;
  };
  auto ingredient = [](std::string id, std::string label) {
    ElementSpec s;
    s.id = std::move(id);
    s.kind = ElementKind::icon_group_member;
    s.label = std::move(label);
    s.label_salience = kIconSalience;
    s.aspect_ratio = 1.0;
    return s;
  };
  const std::vector<Orientation> hv{Orientation::horizontal, Orientation::vertical};
  t.containers = {
      {"recipe_button", ElementKind::button_group_container, {Orientation::horizontal}, {110, 240}, {30, 56},
       {button("btn_recipe", "recipe")}},
      {"ingredient_buttons", ElementKind::button_group_container, hv, {150, 320}, {28, 56},
       {button("btn_grains", "grains"), button("btn_fruits", "fruits"), button("btn_veg", "veg")}},
      {"ingredients", ElementKind::icon_group_container, {Orientation::none}, {120, 320}, {50, 140},
       {ingredient("ing_apple", "apple"), ingredient("ing_pear", "pear"), ingredient("ing_rice", "rice"),
        ingredient("ing_bread", "bread"), ingredient("ing_carrot", "carrot"), ingredient("ing_broccoli", "broccoli")}},
  };
  return t;
}

// ---------------------------------------------------------------------------
// Hand-built layouts. Rects are given in pixels as (left, top, width, height)
// and converted to normalized center form; group members are reflowed.

struct PixelBox {
  double left, top, width, height;
};

namespace detail {

inline Rect to_rect(const PixelBox& b, const ScreenSpec& s) {
  return Rect{(b.left + 0.5 * b.width) / s.width_px, (b.top + 0.5 * b.height) / s.height_px, b.width / s.width_px,
              b.height / s.height_px};
}

inline UiElement make_element(const ElementSpec& spec, Orientation o) {
  UiElement e;
  e.id = spec.id;
  e.kind = spec.kind;
  e.label = spec.label;
  e.label_salience = spec.label_salience;
  e.aspect_ratio = spec.aspect_ratio;
  e.orientation = o;
  e.anchor_id = spec.anchor_id;
  return e;
}

}  // namespace detail

// Places every template piece at the given boxes (keyed by id). Anchored
// elements take boxes relative to their anchor in [0,1] units.
struct HandPlacement {
  std::string id;
  PixelBox box;
  Orientation orientation = Orientation::none;
};

inline Layout build_layout(const LayoutTemplate& t, const std::vector<HandPlacement>& placements) {
  auto find = [&](const std::string& id) -> const HandPlacement& {
    for (const auto& p : placements)
      if (p.id == id) return p;
    throw SchemaError("no placement for " + id);
  };
  Layout l;
  l.screen = t.screen;
  for (const auto& spec : t.elements) {
    if (spec.anchor_id) continue;
    const auto& p = find(spec.id);
    UiElement e = detail::make_element(spec, spec.orientations.size() > 1 ? p.orientation : spec.orientations.front());
    e.rect = detail::to_rect(p.box, l.screen);
    if (e.aspect_ratio) enforce_aspect(e.rect, *e.aspect_ratio, l.screen);
    l.elements.push_back(std::move(e));
  }
  for (const auto& spec : t.elements) {
    if (!spec.anchor_id) continue;
    const auto& p = find(spec.id);
    const Rect a = l.find_element(*spec.anchor_id)->rect;
    UiElement e = detail::make_element(spec, Orientation::none);
    e.rect = Rect{a.left() + (p.box.left + 0.5 * p.box.width) * a.w, a.top() + (p.box.top + 0.5 * p.box.height) * a.h,
                  p.box.width * a.w, p.box.height * a.h};
    l.elements.push_back(std::move(e));
  }
  for (const auto& cs : t.containers) {
    const auto& p = find(cs.id);
    GroupContainer c;
    c.id = cs.id;
    c.kind = cs.kind;
    c.rect = detail::to_rect(p.box, l.screen);
    const Orientation o = cs.orientations.size() > 1 ? p.orientation : cs.orientations.front();
    for (const auto& ms : cs.members) {
      UiElement m = detail::make_element(ms, o == Orientation::vertical ? Orientation::vertical : Orientation::horizontal);
      if (!ms.aspect_ratio) m.orientation = o;
      else m.orientation = Orientation::none;
      m.container_id = c.id;
      c.member_ids.push_back(m.id);
      l.elements.push_back(std::move(m));
    }
    l.containers.push_back(std::move(c));
  }
  reflow_all(l);
  return l;
}

namespace detail {

inline std::vector<HandPlacement> drop_defaults() {
  return {{"drop_red", {0.08, 0.10, 0.22, 0.22}},
          {"drop_green", {0.68, 0.12, 0.22, 0.22}},
          {"drop_blue", {0.38, 0.66, 0.22, 0.22}}};
}

inline std::vector<HandPlacement> with_drops(std::vector<HandPlacement> p) {
  auto d = drop_defaults();
  p.insert(p.end(), d.begin(), d.end());
  return p;
}

}  // namespace detail

// Five layouts following common mobile guidelines: large targets, related
// controls adjacent, primary actions within thumb reach.
inline std::vector<Layout> good_photo_layouts() {
  const auto t = photo_editing_template();
  using O = Orientation;
  std::vector<std::vector<HandPlacement>> designs = {
      {{"undo", {16, 14, 52, 52}}, {"upload", {307, 14, 52, 52}},
       {"photo", {30, 78, 315, 250}}, {"slider", {40, 338, 295, 36}, O::horizontal},
       {"sticker_buttons", {22, 384, 331, 50}, O::horizontal}, {"stickers", {22, 440, 331, 140}},
       {"exit_buttons", {40, 592, 295, 56}, O::horizontal}},
      {{"undo", {16, 596, 54, 54}}, {"upload", {305, 596, 54, 54}},
       {"photo", {24, 16, 327, 262}}, {"slider", {36, 288, 303, 36}, O::horizontal},
       {"sticker_buttons", {22, 334, 331, 50}, O::horizontal}, {"stickers", {22, 390, 331, 140}},
       {"exit_buttons", {84, 540, 207, 50}, O::horizontal}},
      {{"undo", {14, 16, 50, 50}}, {"upload", {311, 16, 50, 50}},
       {"photo", {70, 12, 235, 250}}, {"slider", {330, 290, 36, 220}, O::vertical},
       {"sticker_buttons", {16, 276, 300, 50}, O::horizontal}, {"stickers", {16, 336, 300, 174}},
       {"exit_buttons", {30, 530, 315, 60}, O::horizontal}},
      {{"undo", {18, 18, 48, 48}}, {"upload", {309, 18, 48, 48}},
       {"photo", {30, 76, 315, 230}}, {"slider", {40, 316, 295, 34}, O::horizontal},
       {"sticker_buttons", {300, 364, 60, 160}, O::vertical}, {"stickers", {16, 364, 276, 160}},
       {"exit_buttons", {40, 540, 295, 56}, O::horizontal}},
      {{"undo", {20, 600, 50, 50}}, {"upload", {305, 600, 50, 50}},
       {"photo", {20, 70, 335, 250}}, {"slider", {36, 330, 303, 34}, O::horizontal},
       {"sticker_buttons", {22, 374, 331, 48}, O::horizontal}, {"stickers", {22, 428, 331, 160}},
       {"exit_buttons", {40, 12, 295, 50}, O::horizontal}},
  };
  std::vector<Layout> out;
  for (auto& d : designs) out.push_back(build_layout(t, detail::with_drops(std::move(d))));
  return out;
}

// Three layouts that break the same guidelines: tiny targets, scattered
// related controls, cramped destructive actions.
inline std::vector<Layout> bad_photo_layouts() {
  const auto t = photo_editing_template();
  using O = Orientation;
  std::vector<std::vector<HandPlacement>> designs = {
      {{"undo", {340, 630, 18, 18}}, {"upload", {8, 8, 18, 18}},
       {"photo", {120, 200, 150, 130}}, {"slider", {6, 60, 20, 120}, O::vertical},
       {"sticker_buttons", {250, 20, 110, 20}, O::horizontal}, {"stickers", {30, 600, 120, 40}},
       {"exit_buttons", {200, 420, 60, 18}, O::horizontal}},
      {{"undo", {180, 640, 16, 16}}, {"upload", {200, 640, 16, 16}},
       {"photo", {40, 40, 160, 150}}, {"slider", {260, 400, 100, 16}, O::horizontal},
       {"sticker_buttons", {340, 60, 22, 120}, O::vertical}, {"stickers", {10, 300, 90, 40}},
       {"exit_buttons", {230, 250, 30, 60}, O::vertical}},
      {{"undo", {10, 330, 18, 18}}, {"upload", {345, 330, 18, 18}},
       {"photo", {200, 420, 160, 150}}, {"slider", {10, 620, 120, 16}, O::horizontal},
       {"sticker_buttons", {20, 20, 100, 20}, O::horizontal}, {"stickers", {240, 30, 110, 36}},
       {"exit_buttons", {150, 200, 70, 16}, O::horizontal}},
  };
  std::vector<Layout> out;
  for (auto& d : designs) out.push_back(build_layout(t, detail::with_drops(std::move(d))));
  return out;
}

inline std::vector<Layout> recipe_layouts() {
  const auto t = recipe_planner_template();
  using O = Orientation;
  std::vector<std::vector<HandPlacement>> designs = {
      // Initially weak: scattered, small targets.
      {{"undo", {10, 10, 26, 26}}, {"cancel", {44, 10, 26, 26}},
       {"like_box", {20, 470, 150, 90}}, {"dislike_box", {205, 470, 150, 90}},
       {"recipe_button", {250, 610, 110, 30}, O::horizontal},
       {"ingredient_buttons", {150, 60, 210, 30}, O::horizontal}, {"ingredients", {20, 200, 180, 60}}},
      // Initially reasonable.
      {{"undo", {16, 16, 48, 48}}, {"cancel", {311, 16, 48, 48}},
       {"like_box", {16, 80, 165, 130}}, {"dislike_box", {194, 80, 165, 130}},
       {"recipe_button", {60, 590, 255, 52}, O::horizontal},
       {"ingredient_buttons", {16, 230, 343, 50}, O::horizontal}, {"ingredients", {16, 290, 343, 150}}},
  };
  std::vector<Layout> out;
  for (auto& d : designs) out.push_back(build_layout(t, std::move(d)));
  return out;
}

inline LayoutTemplate template_by_name(const std::string& name) {
  if (name == "photo-editing") return photo_editing_template();
  if (name == "recipe-planner") return recipe_planner_template();
  throw SchemaError("unknown template: " + name);
}

}  // namespace layoutforge
