#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "random.hpp"
#include "templates.hpp"

namespace layoutforge {

inline constexpr int kDefaultPlacementRetries = 200;
// Sequential placement can corner itself; a piece that runs out of retries
// restarts the whole layout, at most this many times.
inline constexpr int kPlacementRestarts = 20;

namespace detail {

inline Orientation draw_orientation(const std::vector<Orientation>& choices, Rng& rng) {
  return choices[rng.index(choices.size())];
}

// Draws a pixel size for `spec` under orientation `o` and converts to a
// normalized rect centered uniformly inside the screen.
inline Rect draw_rect(Range wr, Range hr, std::optional<double> aspect, Orientation o, const ScreenSpec& s, Rng& rng) {
  double wpx = rng.uniform(wr.lo, wr.hi);
  double hpx = aspect ? wpx / *aspect : rng.uniform(hr.lo, hr.hi);
  if (o == Orientation::vertical) std::swap(wpx, hpx);
  const double w = std::min(wpx / s.width_px, 1.0);
  const double h = std::min(hpx / s.height_px, 1.0);
  return Rect{rng.uniform(0.5 * w, 1.0 - 0.5 * w), rng.uniform(0.5 * h, 1.0 - 0.5 * h), w, h};
}

}  // namespace detail

// Places the template's free elements and containers one at a time,
// re-randomizing orientation, size and position of the current piece while it
// collides with anything already placed. Anchored elements are placed inside
// their anchor the same way. Throws PlacementFailure once a piece exhausts
// `max_retries` re-randomizations on every one of kPlacementRestarts fresh
// attempts.
inline Layout generate_random_layout(const LayoutTemplate& t, std::uint64_t seed,
                                     int max_retries = kDefaultPlacementRetries);

namespace detail {

inline Layout place_once(const LayoutTemplate& t, Rng& rng, int max_retries) {
  Layout l;
  l.screen = t.screen;
  std::vector<Rect> placed;

  auto place = [&](const std::string& id, auto&& draw) {
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      auto [rect, orientation] = draw();
      bool clear = true;
      for (const auto& p : placed) {
        if (overlap_area(p, rect) > 0.0) {
          clear = false;
          break;
        }
      }
      if (clear) {
        placed.push_back(rect);
        return std::pair{rect, orientation};
      }
    }
    throw PlacementFailure("could not place " + id + " after " + std::to_string(max_retries) + " retries");
  };

  for (const auto& spec : t.elements) {
    if (spec.anchor_id) continue;
    auto [rect, o] = place(spec.id, [&] {
      const Orientation o = detail::draw_orientation(spec.orientations, rng);
      return std::pair{detail::draw_rect(spec.width_px, spec.height_px, spec.aspect_ratio, o, l.screen, rng), o};
    });
    UiElement e = detail::make_element(spec, o);
    e.rect = rect;
    l.elements.push_back(std::move(e));
  }
  for (const auto& cs : t.containers) {
    auto [rect, o] = place(cs.id, [&] {
      const Orientation o = detail::draw_orientation(cs.orientations, rng);
      return std::pair{detail::draw_rect(cs.width_px, cs.height_px, std::nullopt, o, l.screen, rng), o};
    });
    GroupContainer c;
    c.id = cs.id;
    c.kind = cs.kind;
    c.rect = rect;
    for (const auto& ms : cs.members) {
      UiElement m = detail::make_element(ms, ms.aspect_ratio ? Orientation::none : o);
      m.container_id = c.id;
      c.member_ids.push_back(m.id);
      l.elements.push_back(std::move(m));
    }
    l.containers.push_back(std::move(c));
  }

  // Anchored elements only need to avoid each other.
  placed.clear();
  for (const auto& spec : t.elements) {
    if (!spec.anchor_id) continue;
    const UiElement* anchor = l.find_element(*spec.anchor_id);
    if (anchor == nullptr) throw SchemaError(spec.id + " anchored to unknown " + *spec.anchor_id);
    const Rect a = anchor->rect;
    auto [rect, o] = place(spec.id, [&] {
      const double fw = rng.uniform(spec.width_px.lo, spec.width_px.hi);
      const double fh = rng.uniform(spec.height_px.lo, spec.height_px.hi);
      const double u = rng.uniform(0.5 * fw, 1.0 - 0.5 * fw);
      const double v = rng.uniform(0.5 * fh, 1.0 - 0.5 * fh);
      return std::pair{Rect{a.left() + u * a.w, a.top() + v * a.h, fw * a.w, fh * a.h}, Orientation::none};
    });
    UiElement e = detail::make_element(spec, o);
    e.rect = rect;
    l.elements.push_back(std::move(e));
  }
  reflow_all(l);
  return l;
}

}  // namespace detail

inline Layout generate_random_layout(const LayoutTemplate& t, std::uint64_t seed, int max_retries) {
  Rng rng(seed);
  for (int restart = 1;; ++restart) {
    try {
      return detail::place_once(t, rng, max_retries);
    } catch (const PlacementFailure&) {
      if (restart >= kPlacementRestarts) throw;
    }
  }
}

struct PerturbConfig {
  double scale_lo = 0.7;
  double scale_hi = 1.3;
  double swap_probability = 0.15;
  // Two pieces are adjacent when their Chebyshev gap is below this.
  double adjacency_gap = 0.05;
};

// Scales every free element and container about its center by independent
// uniform factors (one shared factor when the aspect ratio is fixed), then
// swaps the centers of adjacent pairs with the configured probability. Each
// piece swaps at most once. The result may be infeasible.
inline Layout perturb_layout(const Layout& input, std::uint64_t seed, const PerturbConfig& cfg = {}) {
  Rng rng(seed);
  Layout l = input;
  const auto blocks = top_level_blocks(l);

  // Adjacency is judged on the unperturbed geometry.
  std::vector<std::pair<std::size_t, std::size_t>> adjacent;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = i + 1; j < blocks.size(); ++j)
      if (rect_gap(block_rect(input, blocks[i]), block_rect(input, blocks[j])) < cfg.adjacency_gap)
        adjacent.emplace_back(i, j);

  for (auto b : blocks) {
    Rect r = block_rect(l, b);
    const bool fixed_aspect = b.type == BlockRef::Type::element && l.elements[b.index].aspect_ratio.has_value();
    const double fw = rng.uniform(cfg.scale_lo, cfg.scale_hi);
    const double fh = fixed_aspect ? fw : rng.uniform(cfg.scale_lo, cfg.scale_hi);
    r.w *= fw;
    r.h *= fh;
    if (b.type == BlockRef::Type::container) {
      l.containers[b.index].rect = r;
    } else {
      const Rect before = l.elements[b.index].rect;
      l.elements[b.index].rect = r;
      follow_anchor(l, l.elements[b.index].id, before, r);
    }
  }

  std::vector<bool> swapped(blocks.size(), false);
  for (auto [i, j] : adjacent) {
    const bool draw = rng.bernoulli(cfg.swap_probability);
    if (!draw || swapped[i] || swapped[j]) continue;
    Rect a = block_rect(l, blocks[i]);
    Rect b = block_rect(l, blocks[j]);
    std::swap(a.cx, b.cx);
    std::swap(a.cy, b.cy);
    for (auto [blk, r] : {std::pair{blocks[i], a}, std::pair{blocks[j], b}}) {
      if (blk.type == BlockRef::Type::container) {
        l.containers[blk.index].rect = r;
      } else {
        const Rect before = l.elements[blk.index].rect;
        l.elements[blk.index].rect = r;
        follow_anchor(l, l.elements[blk.index].id, before, r);
      }
    }
    swapped[i] = swapped[j] = true;
  }
  reflow_all(l);
  return l;
}

}  // namespace layoutforge
