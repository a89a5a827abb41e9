#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace layoutforge;
using lf_test::icon;

TEST(Geometry, OverlapArea) {
  EXPECT_DOUBLE_EQ(overlap_area({0.2, 0.2, 0.1, 0.1}, {0.8, 0.8, 0.1, 0.1}), 0.0);
  const Rect r{0.5, 0.5, 0.2, 0.2};
  EXPECT_NEAR(overlap_area(r, r), 0.04, 1e-12);
  EXPECT_NEAR(overlap_area({0.5, 0.5, 0.3, 0.2}, {0.6, 0.5, 0.3, 0.2}), 0.04, 1e-12);
}

TEST(Geometry, TouchingRectsDoNotOverlap) {
  EXPECT_EQ(overlap_area(Rect::from_edges(0.0, 0.0, 0.5, 0.5), Rect::from_edges(0.5, 0.0, 1.0, 0.5)), 0.0);
}

// Brute-force rasterized intersection on a fine grid.
TEST(Geometry, OverlapMatchesRasterOracle) {
  Rng rng(11);
  const int n = 400;
  for (int trial = 0; trial < 50; ++trial) {
    auto draw = [&] {
      const double l = rng.index(n) / double(n), t = rng.index(n) / double(n);
      const double w = (1 + rng.index(n / 2)) / double(n), h = (1 + rng.index(n / 2)) / double(n);
      return Rect::from_edges(l, t, l + w, t + h);
    };
    const Rect a = draw(), b = draw();
    int cells = 0;
    for (int i = 0; i < 2 * n; ++i) {
      for (int j = 0; j < 2 * n; ++j) {
        const double x = (i + 0.5) / n, y = (j + 0.5) / n;
        auto in = [&](const Rect& r) { return x > r.left() && x < r.right() && y > r.top() && y < r.bottom(); };
        cells += in(a) && in(b);
      }
    }
    EXPECT_NEAR(overlap_area(a, b), cells / double(n) / double(n), 1e-9);
  }
}

TEST(Validate, DisjointIsClean) {
  const Layout l = lf_test::four_icons();
  EXPECT_TRUE(validate_layout(l).empty());
}

TEST(Validate, BoundaryViolation) {
  const Layout l = lf_test::free_layout({icon("a", "undo", Rect::from_edges(0.85, 0.1, 1.05, 0.2))});
  const auto r = validate_layout(l);
  ASSERT_EQ(r.boundary_violations.size(), 1u);
  EXPECT_EQ(r.boundary_violations[0], "a");
  EXPECT_TRUE(r.overlaps.empty());
}

TEST(Validate, OverlapPair) {
  const Layout l =
      lf_test::free_layout({icon("a", "undo", {0.5, 0.5, 0.3, 0.2}), icon("b", "upload", {0.6, 0.5, 0.3, 0.2})});
  const auto r = validate_layout(l);
  ASSERT_EQ(r.overlaps.size(), 1u);
  EXPECT_EQ(r.overlaps[0], std::make_pair(std::string("a"), std::string("b")));
}

TEST(Validate, DuplicateIdAndAspectDrift) {
  Layout l = lf_test::free_layout({icon("a", "undo", {0.2, 0.2, 0.1, 0.1}), icon("a", "upload", {0.7, 0.7, 0.1, 0.1})});
  l.elements[1].aspect_ratio = 1.0;
  const auto r = validate_layout(l);
  EXPECT_EQ(r.broken_invariants.size(), 2u);
}

namespace {

GroupContainer container_with(int n, Rect r, std::optional<double> aspect, Layout& l) {
  GroupContainer c;
  c.id = "g";
  c.kind = ElementKind::icon_group_container;
  c.rect = r;
  for (int i = 0; i < n; ++i) {
    UiElement e = icon("m" + std::to_string(i), "hello", {0.5, 0.5, 0.01, 0.01});
    e.kind = ElementKind::icon_group_member;
    e.container_id = "g";
    e.aspect_ratio = aspect;
    l.elements.push_back(e);
    c.member_ids.push_back(e.id);
  }
  return c;
}

}  // namespace

TEST(Reflow, SingleMemberCentered) {
  Layout l;
  const GroupContainer c = container_with(1, {0.4, 0.6, 0.3, 0.1}, 1.0, l);
  const auto rects = reflow_group(c, lf_test::pointers(l), l.screen);
  ASSERT_EQ(rects.size(), 1u);
  EXPECT_NEAR(rects[0].cx, 0.4, 1e-12);
  EXPECT_NEAR(rects[0].cy, 0.6, 1e-12);
}

TEST(Reflow, FourSquaresInWideBoxMakeTwoByTwo) {
  // 200 x 100 px container.
  Layout l;
  const Rect r{0.5, 0.5, 200.0 / 375.0, 100.0 / 667.0};
  const GroupContainer c = container_with(4, r, 1.0, l);
  const GridChoice g = choose_grid(4, 200, 100, 1.0);
  EXPECT_EQ(g.rows, 2);
  EXPECT_EQ(g.cols, 2);
  const auto rects = reflow_group(c, lf_test::pointers(l), l.screen);
  EXPECT_NEAR(rects[0].cy, rects[1].cy, 1e-12);
  EXPECT_NEAR(rects[2].cy, rects[3].cy, 1e-12);
  EXPECT_NEAR(rects[0].cx, rects[2].cx, 1e-12);
  EXPECT_GT(rects[2].cy, rects[0].cy);
}

// Enumerate every row count and keep the one with the largest member square.
TEST(Reflow, SixMembersThreePerRow) {
  const double w = 300, h = 180;
  int best_rows = 0;
  double best = -1;
  for (int rows = 1; rows <= 6; ++rows) {
    const int cols = (6 + rows - 1) / rows;
    const double side = std::min(w / cols, h / rows);
    if (side > best + 1e-9) {
      best = side;
      best_rows = rows;
    }
  }
  ASSERT_EQ(best_rows, 2);
  const GridChoice g = choose_grid(6, w, h, 1.0);
  EXPECT_EQ(g.rows, 2);
  EXPECT_EQ(g.cols, 3);
}

TEST(Reflow, MembersStayInsideAndKeepAspect) {
  Layout l;
  l.containers.push_back(container_with(5, {0.5, 0.3, 0.6, 0.12}, 1.0, l));
  reflow_all(l);
  EXPECT_TRUE(validate_layout(l).empty());
  for (const auto& e : l.elements) EXPECT_NEAR(pixel_aspect(e.rect, l.screen), 1.0, 1e-9);
}

TEST(Reflow, EmptyContainerThrows) {
  Layout l;
  GroupContainer c;
  c.id = "g";
  EXPECT_THROW(reflow_group(c, {}, l.screen), DegenerateContainer);
}

TEST(Order, TopThenLeftThenId) {
  const Layout l = lf_test::free_layout({icon("z", "undo", Rect::from_edges(0.6, 0.1, 0.7, 0.2)),
                                         icon("y", "undo", Rect::from_edges(0.2, 0.1, 0.3, 0.2)),
                                         icon("x", "undo", Rect::from_edges(0.1, 0.3, 0.2, 0.4)),
                                         icon("b", "undo", Rect::from_edges(0.5, 0.5, 0.6, 0.6)),
                                         icon("a", "undo", Rect::from_edges(0.5, 0.5, 0.6, 0.6))});
  std::vector<std::string> ids;
  for (const auto* e : order_elements(l)) ids.push_back(e->id);
  EXPECT_EQ(ids, (std::vector<std::string>{"y", "z", "x", "a", "b"}));
}

TEST(Css, RoundsEdgesToPixels) {
  // left = round(0.4 * 375), top = round(0.45 * 667), from the edge formula.
  const Layout l = lf_test::free_layout({icon("e", "undo", {0.5, 0.5, 0.2, 0.1})});
  const std::string css = export_css(l);
  EXPECT_NE(css.find("#e { position: absolute; left: 150px; top: 300px; width: 75px; height: 67px; }"),
            std::string::npos)
      << css;
}

TEST(Css, EmptyLayoutHeaderOnly) {
  EXPECT_EQ(export_css(Layout{}), "/* layout 375x667 */\n");
}

TEST(Css, Deterministic) {
  const Layout l = good_photo_layouts().front();
  EXPECT_EQ(export_css(l), export_css(l));
}

TEST(Json, RoundTrip) {
  for (const Layout& l : good_photo_layouts()) EXPECT_EQ(layout_from_json(to_json(l)), l);
  for (const Layout& l : recipe_layouts()) EXPECT_EQ(layout_from_json(to_json(l)), l);
}

TEST(Json, RejectsBadInput) {
  auto j = to_json(lf_test::four_icons());
  j["elements"][0].erase("cx");
  EXPECT_THROW(layout_from_json(j), SchemaError);
  auto k = to_json(lf_test::four_icons());
  k["elements"][0]["kind"] = "spaceship";
  EXPECT_THROW(layout_from_json(k), SchemaError);
}

TEST(SetBlockRect, ContainerMovesMembersAnchoredFollow) {
  Layout l = good_photo_layouts().front();
  const auto blocks = top_level_blocks(l);
  for (auto b : blocks) {
    Rect r = block_rect(l, b);
    r.cx += 0.001;
    set_block_rect(l, b, r);
  }
  EXPECT_TRUE(validate_layout(l).broken_invariants.empty());
}

TEST(Templates, HandBuiltLayoutsAreFeasible) {
  for (const Layout& l : good_photo_layouts()) EXPECT_TRUE(validate_layout(l).empty());
  for (const Layout& l : bad_photo_layouts()) EXPECT_TRUE(validate_layout(l).empty());
  for (const Layout& l : recipe_layouts()) EXPECT_TRUE(validate_layout(l).empty());
  EXPECT_EQ(good_photo_layouts().size(), 5u);
  EXPECT_EQ(bad_photo_layouts().size(), 3u);
  EXPECT_THROW(template_by_name("spreadsheet"), SchemaError);
}
