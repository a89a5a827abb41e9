#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace layoutforge;

TEST(Generate, SameSeedSameLayout) {
  const auto t = photo_editing_template();
  EXPECT_EQ(generate_random_layout(t, 42), generate_random_layout(t, 42));
  EXPECT_NE(generate_random_layout(t, 42), generate_random_layout(t, 43));
}

TEST(Generate, AlwaysFeasible) {
  for (const auto& t : {photo_editing_template(), recipe_planner_template()}) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      const Layout l = generate_random_layout(t, seed);
      const auto r = validate_layout(l);
      ASSERT_TRUE(r.empty()) << "seed " << seed;
    }
  }
}

TEST(Generate, ZeroRetriesOnCollidingTemplateFails) {
  LayoutTemplate t;
  t.screen = ScreenSpec{};
  // Two full-screen statics always collide.
  for (const char* id : {"p", "q"}) {
    ElementSpec s;
    s.id = id;
    s.kind = ElementKind::static_div;
    s.label = "photo";
    s.width_px = {375, 375};
    s.height_px = {667, 667};
    t.elements.push_back(s);
  }
  EXPECT_THROW(generate_random_layout(t, 1, 0), PlacementFailure);
}

TEST(Perturb, Deterministic) {
  const Layout base = good_photo_layouts().front();
  EXPECT_EQ(perturb_layout(base, 5), perturb_layout(base, 5));
}

TEST(Perturb, UnitScaleNoSwapIsIdentity) {
  const Layout base = good_photo_layouts().front();
  PerturbConfig cfg;
  cfg.scale_lo = cfg.scale_hi = 1.0;
  cfg.swap_probability = 0.0;
  const Layout out = perturb_layout(base, 9, cfg);
  ASSERT_EQ(out.elements.size(), base.elements.size());
  for (std::size_t i = 0; i < out.elements.size(); ++i) {
    EXPECT_NEAR(out.elements[i].rect.cx, base.elements[i].rect.cx, 1e-12);
    EXPECT_NEAR(out.elements[i].rect.w, base.elements[i].rect.w, 1e-12);
  }
}

TEST(Perturb, ScaleDrawMultipliesWidth) {
  Layout l = lf_test::free_layout({lf_test::icon("a", "undo", {0.5, 0.5, 0.2, 0.1})});
  PerturbConfig cfg;
  cfg.scale_lo = cfg.scale_hi = 1.3;
  cfg.swap_probability = 0.0;
  const Layout out = perturb_layout(l, 1, cfg);
  EXPECT_NEAR(out.elements[0].rect.w, 0.26, 1e-12);
  EXPECT_NEAR(out.elements[0].rect.h, 0.13, 1e-12);
  EXPECT_NEAR(out.elements[0].rect.cx, 0.5, 1e-12);
}

TEST(Perturb, KeepsStructuralInvariants) {
  for (const Layout& base : good_photo_layouts()) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Layout out = perturb_layout(base, s);
      EXPECT_TRUE(validate_layout(out).broken_invariants.empty());
    }
  }
}
