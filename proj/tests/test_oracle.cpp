#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace layoutforge;

namespace {

OracleProfile noiseless() {
  OracleProfile p;
  p.noise_sigma = 0.0;
  return p;
}

// Definition-based MAD filter: sort-free median by counting.
std::vector<double> mad_oracle(const std::vector<double>& v, double k) {
  auto median = [](std::vector<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j)
        if (x[j] < x[i]) std::swap(x[i], x[j]);
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : (x[n / 2 - 1] + x[n / 2]) / 2;
  };
  const double m = median(v);
  std::vector<double> dev;
  for (double x : v) dev.push_back(std::abs(x - m));
  const double mad = median(dev);
  std::vector<double> out;
  for (double x : v)
    if (mad > 0 ? std::abs(x - m) <= k * mad : std::abs(x - m) <= 1e-9) out.push_back(x);
  return out;
}

}  // namespace

TEST(Fitts, PointingTerm) {
  OracleProfile p;
  EXPECT_NEAR(pointing_time(p, 4.0, 1.0), 100.0 + 150.0 * std::log2(5.0), 1e-12);
  EXPECT_NEAR(pointing_time(p, 4.0, 1.0), 448.3, 0.05);
}

TEST(Errors, ComfortableSizeRarelyMisses) {
  OracleProfile p;
  EXPECT_LT(minor_error_probability(p, p.min_comfort_size + 0.1), 0.5);
  EXPECT_GT(minor_error_probability(p, p.min_comfort_size - 0.05), 0.5);
}

TEST(TaskMetric, Examples) {
  EXPECT_DOUBLE_EQ(task_metric(1000, 0, 0), 1000);
  EXPECT_NEAR(task_metric(1000, 0.2, 0), 1100, 1e-12);
  EXPECT_NEAR(task_metric(1000, 0, 0.25), 1200, 1e-12);
}

TEST(Mad, Examples) {
  const std::vector<double> v{1, 2, 3, 4, 100};
  EXPECT_EQ(mad_filter(v), (std::vector<double>{2, 3, 4}));
  const std::vector<double> same{5, 5, 5};
  EXPECT_EQ(mad_filter(same), same);
  const std::vector<double> one{7};
  EXPECT_EQ(mad_filter(one), one);
  EXPECT_THROW(mad_filter(std::vector<double>{}), PreconditionViolation);
}

TEST(Mad, MatchesDefinitionOracle) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + rng.index(12));
    for (auto& x : v) x = static_cast<double>(rng.index(20)) + (rng.bernoulli(0.2) ? 100.0 : 0.0);
    EXPECT_EQ(mad_filter(v), mad_oracle(v, 1.5));
  }
}

TEST(SimulateStep, NoiselessMonotoneInDistanceAndWidth) {
  const OracleProfile p = noiseless();
  VirtualUser u;
  auto time_for = [&](Rect target) {
    const Layout l = lf_test::free_layout({lf_test::icon("t", "undo", target)});
    FamiliarityState s;
    s.hand = {0.5, 0.5};
    Rng rng(1);
    return simulate_step(l, {InteractionType::tap, "t"}, u, s, p, rng).time_ms;
  };
  EXPECT_LT(time_for({0.6, 0.5, 0.1, 0.1}), time_for({0.6, 0.8, 0.1, 0.1}));
  EXPECT_GT(time_for({0.6, 0.8, 0.05, 0.05}), time_for({0.6, 0.8, 0.1, 0.1}));
}

TEST(SimulateStep, RepeatVisitsGetFaster) {
  const OracleProfile p = noiseless();
  const Layout l = lf_test::four_icons();
  VirtualUser u;
  FamiliarityState s;
  Rng rng(1);
  std::vector<double> times;
  for (int i = 0; i < 4; ++i) {
    s.hand = {0.5, 0.5};
    times.push_back(simulate_step(l, {InteractionType::tap, "a"}, u, s, p, rng).time_ms);
  }
  for (std::size_t i = 1; i < times.size(); ++i) EXPECT_LE(times[i], times[i - 1]);
  EXPECT_LT(times.back(), times.front());
}

TEST(Dataset, DeterministicAndNeedsThreeUsers) {
  const auto seq = build_photo_editing_sequence(1, 2);
  const std::vector<NamedLayout> layouts{{"good", good_photo_layouts()[0]}};
  const Dataset a = simulate_dataset(layouts, seq, 3, 9);
  const Dataset b = simulate_dataset(layouts, seq, 3, 9);
  EXPECT_EQ(dataset_to_jsonl(a), dataset_to_jsonl(b));
  EXPECT_NE(dataset_to_jsonl(a), dataset_to_jsonl(simulate_dataset(layouts, seq, 3, 10)));
  EXPECT_THROW(simulate_dataset(layouts, seq, 2, 9), PreconditionViolation);
}

TEST(Dataset, LargerTargetsAreFaster) {
  OracleProfile p = noiseless();
  const Layout small = lf_test::four_icons();
  Layout large = small;
  for (auto& e : large.elements) {
    e.rect.w *= 1.2;
    e.rect.h *= 1.2;
  }
  const auto seq = lf_test::tap_sequence({"a", "b", "c", "d", "a", "c"});
  EXPECT_LT(oracle_sequence_metric(large, seq, 8, 3, p), oracle_sequence_metric(small, seq, 8, 3, p));
}

TEST(Dataset, JsonlRoundTrip) {
  const auto seq = build_photo_editing_sequence(1, 2);
  const Dataset d = simulate_dataset({{"x", good_photo_layouts()[1]}, {"y", bad_photo_layouts()[0]}}, seq, 4, 1);
  const Dataset e = dataset_from_jsonl(dataset_to_jsonl(d), dataset_meta(d));
  ASSERT_EQ(e.records.size(), 2u);
  EXPECT_EQ(e.records[1].layout_id, "y");
  EXPECT_EQ(e.records[1].layout, d.records[1].layout);
  EXPECT_EQ(e.records[0].sequence, d.records[0].sequence);
  EXPECT_EQ(e.records[0].observed(), d.records[0].observed());
}

TEST(Dataset, SevereErrorsOnlyOnSaveCancelTaps) {
  OracleProfile p = noiseless();
  p.min_comfort_size = 1.0;  // every tap misses
  Layout l = lf_test::four_icons();
  VirtualUser u;
  FamiliarityState s;
  Rng rng(1);
  const auto save = simulate_step(l, {InteractionType::tap, "c"}, u, s, p, rng);
  EXPECT_TRUE(save.severe_error);
  const auto undo = simulate_step(l, {InteractionType::tap, "a"}, u, s, p, rng);
  EXPECT_TRUE(undo.minor_error);
  EXPECT_FALSE(undo.severe_error);
}
