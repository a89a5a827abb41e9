#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace layoutforge;
using namespace layoutforge::feature;

namespace {
const EmbeddingTable& table() {
  static const EmbeddingTable t = EmbeddingTable::builtin();
  return t;
}
}  // namespace

TEST(Features, NonTargetStaticDiv) {
  const Layout l = good_photo_layouts().front();
  const TaskStep step{InteractionType::tap, "undo"};
  const auto row = element_features(*l.find_element("photo"), step, l, table());
  EXPECT_EQ(row[kTarget + 0], 0.0);
  EXPECT_EQ(row[kTarget + 1], 0.0);
  EXPECT_EQ(row[kTarget + 2], 1.0);
  EXPECT_EQ(row[kKind + static_cast<int>(ElementKind::static_div)], 1.0);
}

TEST(Features, DropTargetDuringDrag) {
  const Layout l = good_photo_layouts().front();
  const TaskStep step{InteractionType::drag_and_drop, "st_hello", "drop_red", 2, 2};
  const auto dest = element_features(*l.find_element("drop_red"), step, l, table());
  EXPECT_EQ(dest[kTarget + 1], 1.0);
  EXPECT_EQ(dest[kTarget + 0], 0.0);
  const auto target = element_features(*l.find_element("st_hello"), step, l, table());
  EXPECT_EQ(target[kTarget + 0], 1.0);
  // Member rows carry their container's rect.
  const GroupContainer* c = l.find_container("stickers");
  EXPECT_EQ(target[kContainer + 0], c->rect.cx);
  EXPECT_EQ(target[kContainer + 3], c->rect.h);
}

TEST(Features, SalienceEndpoints) {
  UiElement e = lf_test::icon("x", "undo", {0.5, 0.5, 0.1, 0.1});
  const Layout l = lf_test::free_layout({e});
  e.label_salience = table().max_length();
  EXPECT_DOUBLE_EQ(element_features(e, {}, l, table())[kSalience], 1.0);
  e.label_salience = 0;
  EXPECT_DOUBLE_EQ(element_features(e, {}, l, table())[kSalience], -1.0);
}

TEST(Features, DropPositionRelocatesAnchoredTarget) {
  const Layout l = good_photo_layouts().front();
  TaskStep step{InteractionType::drag_and_drop, "st_wow", "drop_blue", 2, 2};
  step.drop_position = Point2{0.25, 0.75};
  const Rect photo = l.find_element("photo")->rect;
  const auto row = element_features(*l.find_element("drop_blue"), step, l, table());
  EXPECT_NEAR(row[kSpatial + 0], photo.left() + 0.25 * photo.w, 1e-12);
  EXPECT_NEAR(row[kSpatial + 1], photo.top() + 0.75 * photo.h, 1e-12);
}

TEST(TaskTail, Normalization) {
  const Demographics d{0.1, 37.7};
  const auto single = task_tail({InteractionType::tap, "a", {}, 1, 1}, d);
  EXPECT_DOUBLE_EQ(single[kInteractionTypeCount + 0], 0.25);
  EXPECT_DOUBLE_EQ(single[kInteractionTypeCount + 1], 0.25);
  EXPECT_DOUBLE_EQ(single[kInteractionTypeCount + 2], 0.1);
  EXPECT_DOUBLE_EQ(single[kInteractionTypeCount + 3], 0.377);
  const auto second = task_tail({InteractionType::drag_and_drop, "a", "b", 2, 2}, d);
  EXPECT_DOUBLE_EQ(second[kInteractionTypeCount + 0], 0.5);
  EXPECT_EQ(second[static_cast<int>(InteractionType::drag_and_drop)], 1.0);
}

TEST(Embedding, DeterministicUnitAndGrouped) {
  const auto a = embed_label(table(), "undo");
  EXPECT_EQ(a, embed_label(EmbeddingTable::builtin(), "undo"));
  double n = 0;
  for (double x : a) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_GT(cosine_similarity(table().embed("apple"), table().embed("pear")),
            cosine_similarity(table().embed("apple"), table().embed("undo")));
  EXPECT_THROW(table().embed("zebra"), UnknownLabel);
}

TEST(Embedding, JsonRoundTrip) {
  const auto t = EmbeddingTable::from_json(table().to_json());
  EXPECT_EQ(t.vectors(), table().vectors());
  EXPECT_EQ(t.max_length(), table().max_length());
}
