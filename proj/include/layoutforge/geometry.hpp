#pragma once

#include <algorithm>

namespace layoutforge {

// Axis-aligned rectangle in normalized screen coordinates (0..1 on both axes),
// stored as center + extent.
struct Rect {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.1;
  double h = 0.1;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  bool inside_unit_square() const {
    return left() >= 0.0 && top() >= 0.0 && right() <= 1.0 && bottom() <= 1.0;
  }

  bool contains(const Rect& o, double tol = 1e-12) const {
    return o.left() >= left() - tol && o.right() <= right() + tol && o.top() >= top() - tol &&
           o.bottom() <= bottom() + tol;
  }

  static Rect from_edges(double left, double top, double right, double bottom) {
    return Rect{0.5 * (left + right), 0.5 * (top + bottom), right - left, bottom - top};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline double overlap_extent_x(const Rect& a, const Rect& b) {
  return std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
}

inline double overlap_extent_y(const Rect& a, const Rect& b) {
  return std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
}

inline double overlap_area(const Rect& a, const Rect& b) {
  return overlap_extent_x(a, b) * overlap_extent_y(a, b);
}

// Chebyshev gap: 0 when the rects touch or overlap.
inline double rect_gap(const Rect& a, const Rect& b) {
  const double gx = std::max(0.0, std::max(a.left(), b.left()) - std::min(a.right(), b.right()));
  const double gy = std::max(0.0, std::max(a.top(), b.top()) - std::min(a.bottom(), b.bottom()));
  return std::max(gx, gy);
}

}  // namespace layoutforge
