#pragma once

#include <string>
#include <vector>

#include "layoutforge/layoutforge.hpp"

namespace lf_test {

using namespace layoutforge;

inline UiElement icon(const std::string& id, const std::string& label, Rect r) {
  UiElement e;
  e.id = id;
  e.kind = ElementKind::icon;
  e.label = label;
  e.rect = r;
  return e;
}

inline Layout free_layout(std::vector<UiElement> elements) {
  Layout l;
  l.elements = std::move(elements);
  return l;
}

// Four free icons, well apart.
inline Layout four_icons() {
  return free_layout({icon("a", "undo", {0.2, 0.2, 0.12, 0.08}), icon("b", "upload", {0.75, 0.25, 0.15, 0.1}),
                      icon("c", "save", {0.3, 0.7, 0.1, 0.1}), icon("d", "cancel", {0.7, 0.8, 0.2, 0.08})});
}

inline TaskSequence tap_sequence(const std::vector<std::string>& targets) {
  SequenceBuilder b;
  for (const auto& t : targets) b.add({.task_type = 1, .target = t});
  return b.finish();
}

inline std::vector<const UiElement*> pointers(const Layout& l) {
  std::vector<const UiElement*> v;
  for (const auto& e : l.elements) v.push_back(&e);
  return v;
}

}  // namespace lf_test
