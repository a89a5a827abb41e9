#include <gtest/gtest.h>

#include "layoutforge/autodiff.hpp"

using namespace layoutforge;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 0.5) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST(Ops, ReluSigmoidDropout) {
  Tape t;
  const Var x = t.leaf(col({-3, 0, 2}));
  EXPECT_EQ(ad::relu(x).value(), col({0, 0, 2}));
  EXPECT_DOUBLE_EQ(ad::sigmoid(t.scalar(0.0)).scalar(), 0.5);
  EXPECT_EQ(ad::dropout(x, 0.4, false, 1).value(), x.value());
}

TEST(Ops, DropoutKeepsExpectation) {
  Tape t;
  const Var x = t.leaf(Matrix::Ones(20000, 1));
  const double m = ad::dropout(x, 0.4, true, 3).value().mean();
  EXPECT_NEAR(m, 1.0, 0.03);
}

TEST(Backward, SumAndSquare) {
  Tape t;
  const Var x = t.leaf(col({1, 2, 3}));
  t.backward(ad::sum(x));
  EXPECT_EQ(x.grad(), Matrix::Ones(3, 1));

  Tape u;
  const Var y = u.leaf(col({3}));
  u.backward(ad::sum(ad::square(y)));
  EXPECT_DOUBLE_EQ(y.grad()(0, 0), 6.0);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  Tape t;
  const Var x = t.leaf(col({2}));
  const Var y = ad::mul(x, x);
  t.backward(ad::add(y, x));  // d/dx (x^2 + x) = 2x + 1
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 5.0);
}

TEST(Backward, MinMaxRouteToWinner) {
  Tape t;
  const Var a = t.leaf(col({1, 5}));
  const Var b = t.leaf(col({2, 4}));
  t.backward(ad::sum(ad::add(ad::minimum(a, b), ad::scale(ad::maximum(a, b), 3.0))));
  EXPECT_EQ(a.grad(), col({1, 3}));
  EXPECT_EQ(b.grad(), col({3, 1}));
}

TEST(Lstm, ZeroWeightsGiveZeroHidden) {
  Tape t;
  const int h = 5, in = 3;
  const auto s = ad::lstm_cell(t.leaf(Matrix::Ones(in, 1)), t.leaf(Matrix::Zero(h, 1)), t.leaf(Matrix::Zero(h, 1)),
                               t.leaf(Matrix::Zero(4 * h, in)), t.leaf(Matrix::Zero(4 * h, h)),
                               t.leaf(Matrix::Zero(4 * h, 1)));
  EXPECT_EQ(s.h.value(), Matrix::Zero(h, 1));
}

TEST(Lstm, SaturatedForgetCarriesCell) {
  Tape t;
  const int h = 3, in = 2;
  Matrix bias = Matrix::Zero(4 * h, 1);
  bias.block(0, 0, h, 1).setConstant(-1e3);  // input gate -> 0
  bias.block(h, 0, h, 1).setConstant(1e3);   // forget gate -> 1
  const Matrix c_prev = col({0.3, -0.7, 1.1});
  const auto s = ad::lstm_cell(t.leaf(col({0.4, -0.2})), t.leaf(col({0.1, 0.2, 0.3})), t.leaf(c_prev),
                               t.leaf(Matrix::Ones(4 * h, in)), t.leaf(Matrix::Ones(4 * h, h)), t.leaf(bias));
  EXPECT_TRUE(s.c.value().isApprox(c_prev, 1e-12));
}

TEST(GradCheck, LinearIsExact) {
  Rng rng(1);
  const Matrix w = random_matrix(3, 4, rng), x = random_matrix(4, 1, rng);
  const auto r = ad::grad_check(
      [](Tape&, std::span<const Var> v) { return ad::sum(ad::matvec(v[0], v[1])); }, {w, x});
  EXPECT_LE(r.max_relative_error, 1e-9);
  EXPECT_EQ(r.checked, 16u);
}

TEST(GradCheck, SigmoidMatvec) {
  Rng rng(2);
  const auto r = ad::grad_check(
      [](Tape&, std::span<const Var> v) { return ad::sum(ad::sigmoid(ad::matvec(v[0], v[1]))); },
      {random_matrix(5, 6, rng, 1.0), random_matrix(6, 1, rng, 1.0)});
  EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST(GradCheck, ReluAwayFromKinks) {
  Rng rng(3);
  Matrix w = random_matrix(8, 6, rng, 1.0);
  const Matrix x = random_matrix(6, 1, rng, 1.0);
  // Resample rows whose preactivation is within 1e-3 of the kink.
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    while (std::abs((w.row(i) * x)(0, 0)) < 1e-3) w.row(i) = random_matrix(1, 6, rng, 1.0);
  const auto r = ad::grad_check(
      [](Tape&, std::span<const Var> v) { return ad::sum(ad::square(ad::relu(ad::matvec(v[0], v[1])))); }, {w, x});
  EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST(GradCheck, LstmCellAllInputs) {
  Rng rng(4);
  const int h = 4, in = 3;
  const auto r = ad::grad_check(
      [&](Tape&, std::span<const Var> v) {
        auto s = ad::lstm_cell(v[0], v[1], v[2], v[3], v[4], v[5]);
        auto s2 = ad::lstm_cell(v[0], s.h, s.c, v[3], v[4], v[5]);
        return ad::add(ad::sum(ad::square(s2.h)), ad::sum(s2.c));
      },
      {random_matrix(in, 1, rng), random_matrix(h, 1, rng), random_matrix(h, 1, rng), random_matrix(4 * h, in, rng),
       random_matrix(4 * h, h, rng), random_matrix(4 * h, 1, rng)});
  EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST(Errors, ShapeMismatch) {
  Tape t;
  EXPECT_THROW(ad::add(t.leaf(Matrix::Zero(2, 1)), t.leaf(Matrix::Zero(3, 1))), ShapeMismatch);
}
