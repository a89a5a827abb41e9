#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "geometry.hpp"

namespace layoutforge {

struct ScreenSpec {
  int width_px = 375;
  int height_px = 667;

  // Pixel aspect of the whole screen (width / height).
  double aspect() const { return static_cast<double>(width_px) / static_cast<double>(height_px); }
  friend bool operator==(const ScreenSpec&, const ScreenSpec&) = default;
};

enum class ElementKind : int {
  icon = 0,
  icon_group_container,
  icon_group_member,
  button_group_container,
  button_group_member,
  slider,
  static_div,
  drop_target,
};
inline constexpr int kElementKindCount = 8;

enum class Orientation : int { horizontal = 0, vertical, none };
inline constexpr int kOrientationCount = 3;

inline constexpr std::array<std::string_view, kElementKindCount> kElementKindNames = {
    "icon",         "icon-group-container", "icon-group-member", "button-group-container",
    "button-group-member", "slider",       "static-div",        "drop-target"};

inline constexpr std::array<std::string_view, kOrientationCount> kOrientationNames = {
    "horizontal", "vertical", "none"};

inline std::string_view to_string(ElementKind k) { return kElementKindNames[static_cast<int>(k)]; }
inline std::string_view to_string(Orientation o) { return kOrientationNames[static_cast<int>(o)]; }

inline ElementKind parse_element_kind(std::string_view s) {
  for (int i = 0; i < kElementKindCount; ++i) {
    if (kElementKindNames[i] == s) return static_cast<ElementKind>(i);
  }
  throw SchemaError("unknown element kind: " + std::string(s));
}

inline Orientation parse_orientation(std::string_view s) {
  for (int i = 0; i < kOrientationCount; ++i) {
    if (kOrientationNames[i] == s) return static_cast<Orientation>(i);
  }
  throw SchemaError("unknown orientation: " + std::string(s));
}

inline bool is_container_kind(ElementKind k) {
  return k == ElementKind::icon_group_container || k == ElementKind::button_group_container;
}

inline bool is_member_kind(ElementKind k) {
  return k == ElementKind::icon_group_member || k == ElementKind::button_group_member;
}

struct UiElement {
  std::string id;
  ElementKind kind = ElementKind::icon;
  std::string label;
  Rect rect;
  Orientation orientation = Orientation::none;
  std::optional<std::string> container_id;
  // Pixel width / pixel height, kept fixed under every resize.
  std::optional<double> aspect_ratio;
  int label_salience = 1;
  // Elements drawn on top of another element (drop targets inside the photo).
  // They move and scale with their anchor and take no part in overlap checks.
  std::optional<std::string> anchor_id;

  bool is_member() const { return container_id.has_value(); }
  bool is_anchored() const { return anchor_id.has_value(); }
  bool is_top_level() const { return !is_member() && !is_anchored(); }
  friend bool operator==(const UiElement&, const UiElement&) = default;
};

struct GroupContainer {
  std::string id;
  ElementKind kind = ElementKind::icon_group_container;
  Rect rect;
  std::vector<std::string> member_ids;
  friend bool operator==(const GroupContainer&, const GroupContainer&) = default;
};

struct Layout {
  ScreenSpec screen;
  std::vector<UiElement> elements;
  std::vector<GroupContainer> containers;

  const UiElement* find_element(std::string_view id) const {
    for (const auto& e : elements)
      if (e.id == id) return &e;
    return nullptr;
  }
  UiElement* find_element(std::string_view id) {
    for (auto& e : elements)
      if (e.id == id) return &e;
    return nullptr;
  }
  const GroupContainer* find_container(std::string_view id) const {
    for (const auto& c : containers)
      if (c.id == id) return &c;
    return nullptr;
  }
  GroupContainer* find_container(std::string_view id) {
    for (auto& c : containers)
      if (c.id == id) return &c;
    return nullptr;
  }

  friend bool operator==(const Layout&, const Layout&) = default;
};

// A top-level, independently positioned piece of the layout: a free element
// or a group container. These are the units that overlap/boundary checks and
// the optimizer operate on.
struct BlockRef {
  enum class Type { element, container } type = Type::element;
  std::size_t index = 0;

  friend bool operator==(const BlockRef&, const BlockRef&) = default;
};

inline const std::string& block_id(const Layout& l, BlockRef b) {
  return b.type == BlockRef::Type::element ? l.elements[b.index].id : l.containers[b.index].id;
}

inline const Rect& block_rect(const Layout& l, BlockRef b) {
  return b.type == BlockRef::Type::element ? l.elements[b.index].rect : l.containers[b.index].rect;
}

// Free elements in list order, then containers in list order.
inline std::vector<BlockRef> top_level_blocks(const Layout& l) {
  std::vector<BlockRef> out;
  for (std::size_t i = 0; i < l.elements.size(); ++i)
    if (l.elements[i].is_top_level()) out.push_back({BlockRef::Type::element, i});
  for (std::size_t i = 0; i < l.containers.size(); ++i)
    out.push_back({BlockRef::Type::container, i});
  return out;
}

// ---------------------------------------------------------------------------
// Aspect ratio and anchors

inline double pixel_aspect(const Rect& r, const ScreenSpec& s) { return (r.w / r.h) * s.aspect(); }

// Restores the pixel aspect ratio while keeping the pixel area and center.
inline void enforce_aspect(Rect& r, double aspect_ratio, const ScreenSpec& s) {
  const double wpx = r.w * s.width_px;
  const double hpx = r.h * s.height_px;
  const double side = std::sqrt(wpx * hpx);
  r.w = side * std::sqrt(aspect_ratio) / s.width_px;
  r.h = side / std::sqrt(aspect_ratio) / s.height_px;
}

// Moves every element anchored to `anchor_id` so it keeps its relative
// placement when the anchor goes from `before` to `after`.
inline void follow_anchor(Layout& l, std::string_view anchor_id, const Rect& before, const Rect& after) {
  for (auto& e : l.elements) {
    if (!e.anchor_id || *e.anchor_id != anchor_id) continue;
    const double u = (e.rect.cx - before.left()) / before.w;
    const double v = (e.rect.cy - before.top()) / before.h;
    const double rw = e.rect.w / before.w;
    const double rh = e.rect.h / before.h;
    e.rect = Rect{after.left() + u * after.w, after.top() + v * after.h, rw * after.w, rh * after.h};
  }
}

// ---------------------------------------------------------------------------
// Group reflow

inline constexpr double kMemberFill = 0.85;
inline constexpr double kMinMemberExtent = 1e-5;
// Shape used to rank grid candidates for members without a fixed aspect.
inline constexpr double kNominalButtonAspect = 2.0;

struct GridChoice {
  int rows = 1;
  int cols = 1;
};

// Row count maximizing member size; ties go to the squarer grid, then to
// fewer rows.
inline GridChoice choose_grid(int n, double width_px, double height_px, double aspect) {
  GridChoice best;
  double best_size = -1.0;
  for (int rows = 1; rows <= n; ++rows) {
    const int cols = (n + rows - 1) / rows;
    if ((n + cols - 1) / cols != rows) continue;  // some row would be empty
    const double cell_w = width_px / cols;
    const double cell_h = height_px / rows;
    const double h = std::min(cell_h, cell_w / aspect);
    const double size = h * h * aspect;
    const double tol = 1e-9 * std::max(size, best_size);
    const bool better =
        size > best_size + tol ||
        (std::abs(size - best_size) <= tol &&
         (std::abs(rows - cols) < std::abs(best.rows - best.cols) ||
          (std::abs(rows - cols) == std::abs(best.rows - best.cols) && rows < best.rows)));
    if (better) {
      best = {rows, cols};
      best_size = size;
    }
  }
  return best;
}

// Row-major placement of `members` inside `container`. Members share one size
// (the largest that fits its grid cell), adjacent gaps are uniform on each
// axis, and a short last row stays left-aligned on the same grid.
inline std::vector<Rect> reflow_group(const GroupContainer& container,
                                      std::span<const UiElement* const> members,
                                      const ScreenSpec& screen) {
  const int n = static_cast<int>(members.size());
  if (n == 0) throw DegenerateContainer("container " + container.id + " has no members");
  const double width_px = container.rect.w * screen.width_px;
  const double height_px = container.rect.h * screen.height_px;

  std::optional<double> aspect = members.front()->aspect_ratio;
  const GridChoice grid = choose_grid(n, width_px, height_px, aspect.value_or(kNominalButtonAspect));
  const double cell_w = width_px / grid.cols;
  const double cell_h = height_px / grid.rows;
  double mw = cell_w * kMemberFill;
  double mh = cell_h * kMemberFill;
  if (aspect) {
    mh = std::min(cell_h, cell_w / *aspect) * kMemberFill;
    mw = mh * *aspect;
  }
  const double w = mw / screen.width_px;
  const double h = mh / screen.height_px;
  if (!(w >= kMinMemberExtent && h >= kMinMemberExtent))
    throw DegenerateContainer("container " + container.id + " too small for its members");

  const double cw = container.rect.w / grid.cols;
  const double ch = container.rect.h / grid.rows;
  std::vector<Rect> out;
  out.reserve(members.size());
  for (int i = 0; i < n; ++i) {
    const int row = i / grid.cols;
    const int col = i % grid.cols;
    out.push_back(Rect{container.rect.left() + (col + 0.5) * cw, container.rect.top() + (row + 0.5) * ch, w, h});
  }
  return out;
}

inline std::vector<const UiElement*> container_members(const Layout& l, const GroupContainer& c) {
  std::vector<const UiElement*> out;
  for (const auto& id : c.member_ids) {
    const UiElement* e = l.find_element(id);
    if (e == nullptr) throw SchemaError("container " + c.id + " lists unknown member " + id);
    out.push_back(e);
  }
  return out;
}

inline void reflow_container(Layout& l, std::size_t container_index) {
  const GroupContainer& c = l.containers[container_index];
  const auto members = container_members(l, c);
  const auto rects = reflow_group(c, members, l.screen);
  for (std::size_t i = 0; i < rects.size(); ++i) l.find_element(c.member_ids[i])->rect = rects[i];
}

inline void reflow_all(Layout& l) {
  for (std::size_t i = 0; i < l.containers.size(); ++i) reflow_container(l, i);
}

// Writes `r` into the block and keeps its dependents (members, anchored
// elements, aspect ratio) consistent.
inline void set_block_rect(Layout& l, BlockRef b, Rect r) {
  if (b.type == BlockRef::Type::container) {
    l.containers[b.index].rect = r;
    reflow_container(l, b.index);
    return;
  }
  UiElement& e = l.elements[b.index];
  if (e.aspect_ratio) enforce_aspect(r, *e.aspect_ratio, l.screen);
  const Rect before = e.rect;
  e.rect = r;
  follow_anchor(l, e.id, before, e.rect);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::pair<std::string, std::string>> overlaps;
  std::vector<std::string> boundary_violations;
  std::vector<std::string> broken_invariants;

  bool empty() const { return overlaps.empty() && boundary_violations.empty() && broken_invariants.empty(); }
};

inline constexpr double kAspectTolerance = 1e-6;

inline ValidationReport validate_layout(const Layout& l) {
  ValidationReport report;
  auto broken = [&](std::string msg) { report.broken_invariants.push_back(std::move(msg)); };

  if (l.screen.width_px <= 0 || l.screen.height_px <= 0) broken("screen dimensions must be positive");

  std::set<std::string> ids;
  for (const auto& e : l.elements)
    if (!ids.insert(e.id).second) broken("duplicate id " + e.id);
  for (const auto& c : l.containers)
    if (!ids.insert(c.id).second) broken("duplicate id " + c.id);

  for (const auto& e : l.elements) {
    if (!(e.rect.w > 0.0 && e.rect.h > 0.0)) broken("non-positive extent on " + e.id);
    if (e.container_id) {
      const GroupContainer* c = l.find_container(*e.container_id);
      if (c == nullptr) {
        broken(e.id + " references missing container " + *e.container_id);
      } else {
        if (std::find(c->member_ids.begin(), c->member_ids.end(), e.id) == c->member_ids.end())
          broken(e.id + " not listed by container " + c->id);
        if (!c->rect.contains(e.rect, 1e-9)) broken(e.id + " lies outside container " + c->id);
      }
    }
    if (e.anchor_id) {
      const UiElement* a = l.find_element(*e.anchor_id);
      if (a == nullptr) {
        broken(e.id + " references missing anchor " + *e.anchor_id);
      } else if (!a->rect.contains(e.rect, 1e-9)) {
        broken(e.id + " lies outside anchor " + a->id);
      }
    }
    if (e.aspect_ratio && std::abs(pixel_aspect(e.rect, l.screen) - *e.aspect_ratio) > kAspectTolerance)
      broken("aspect ratio drift on " + e.id);
  }
  for (const auto& c : l.containers) {
    if (!is_container_kind(c.kind)) broken(c.id + " has a non-container kind");
    if (c.member_ids.empty()) broken(c.id + " has no members");
    for (const auto& m : c.member_ids) {
      const UiElement* e = l.find_element(m);
      if (e == nullptr || e->container_id != c.id) broken(c.id + " lists foreign member " + m);
    }
  }

  const auto blocks = top_level_blocks(l);
  for (auto b : blocks) {
    if (!block_rect(l, b).inside_unit_square()) report.boundary_violations.push_back(block_id(l, b));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < blocks.size(); ++j) {
      if (overlap_area(block_rect(l, blocks[i]), block_rect(l, blocks[j])) > 0.0)
        report.overlaps.emplace_back(block_id(l, blocks[i]), block_id(l, blocks[j]));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reading order

// Encodable elements (everything except containers), top-down then
// left-right by the top-left corner, ties broken by id.
inline std::vector<const UiElement*> order_elements(const Layout& l) {
  std::vector<const UiElement*> out;
  out.reserve(l.elements.size());
  for (const auto& e : l.elements) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const UiElement* a, const UiElement* b) {
    if (a->rect.top() != b->rect.top()) return a->rect.top() < b->rect.top();
    if (a->rect.left() != b->rect.left()) return a->rect.left() < b->rect.left();
    return a->id < b->id;
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSS export

inline std::string export_css(const Layout& l) {
  std::string out = "/* layout " + std::to_string(l.screen.width_px) + "x" + std::to_string(l.screen.height_px) + " */\n";
  const double wpx = l.screen.width_px;
  const double hpx = l.screen.height_px;
  char buf[256];
  for (const UiElement* e : order_elements(l)) {
    std::snprintf(buf, sizeof buf,
                  " { position: absolute; left: %ldpx; top: %ldpx; width: %ldpx; height: %ldpx; }\n",
                  std::lround(e->rect.left() * wpx), std::lround(e->rect.top() * hpx), std::lround(e->rect.w * wpx),
                  std::lround(e->rect.h * hpx));
    out += "#" + e->id + buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad field ") + key + ": " + ex.what());
  }
}

inline double require_finite(const nlohmann::json& j, const char* key) {
  const double v = require<double>(j, key);
  if (!std::isfinite(v)) throw SchemaError(std::string("non-finite field: ") + key);
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const Layout& l) {
  using nlohmann::json;
  json elements = json::array();
  for (const auto& e : l.elements) {
    json je = {{"id", e.id},
               {"kind", to_string(e.kind)},
               {"label", e.label},
               {"cx", e.rect.cx},
               {"cy", e.rect.cy},
               {"w", e.rect.w},
               {"h", e.rect.h},
               {"orientation", to_string(e.orientation)},
               {"label_salience", e.label_salience}};
    if (e.container_id) je["container_id"] = *e.container_id;
    if (e.aspect_ratio) je["aspect_ratio"] = *e.aspect_ratio;
    if (e.anchor_id) je["anchor_id"] = *e.anchor_id;
    elements.push_back(std::move(je));
  }
  json containers = json::array();
  for (const auto& c : l.containers) {
    containers.push_back({{"id", c.id},
                          {"kind", to_string(c.kind)},
                          {"cx", c.rect.cx},
                          {"cy", c.rect.cy},
                          {"w", c.rect.w},
                          {"h", c.rect.h},
                          {"member_ids", c.member_ids}});
  }
  return {{"screen", {{"width_px", l.screen.width_px}, {"height_px", l.screen.height_px}}},
          {"elements", std::move(elements)},
          {"containers", std::move(containers)}};
}

inline Layout layout_from_json(const nlohmann::json& j) {
  using detail::require;
  using detail::require_finite;
  Layout l;
  const auto screen = require<nlohmann::json>(j, "screen");
  l.screen.width_px = require<int>(screen, "width_px");
  l.screen.height_px = require<int>(screen, "height_px");
  if (l.screen.width_px <= 0 || l.screen.height_px <= 0) throw SchemaError("screen dimensions must be positive");

  for (const auto& je : require<nlohmann::json>(j, "elements")) {
    UiElement e;
    e.id = require<std::string>(je, "id");
    e.kind = parse_element_kind(require<std::string>(je, "kind"));
    e.label = require<std::string>(je, "label");
    e.rect = Rect{require_finite(je, "cx"), require_finite(je, "cy"), require_finite(je, "w"), require_finite(je, "h")};
    e.orientation = parse_orientation(require<std::string>(je, "orientation"));
    e.label_salience = require<int>(je, "label_salience");
    if (je.contains("container_id")) e.container_id = require<std::string>(je, "container_id");
    if (je.contains("aspect_ratio")) e.aspect_ratio = require_finite(je, "aspect_ratio");
    if (je.contains("anchor_id")) e.anchor_id = require<std::string>(je, "anchor_id");
    l.elements.push_back(std::move(e));
  }
  if (j.contains("containers")) {
    for (const auto& jc : j.at("containers")) {
      GroupContainer c;
      c.id = require<std::string>(jc, "id");
      c.kind = parse_element_kind(require<std::string>(jc, "kind"));
      c.rect = Rect{require_finite(jc, "cx"), require_finite(jc, "cy"), require_finite(jc, "w"), require_finite(jc, "h")};
      c.member_ids = require<std::vector<std::string>>(jc, "member_ids");
      l.containers.push_back(std::move(c));
    }
  }
  return l;
}

}  // namespace layoutforge
