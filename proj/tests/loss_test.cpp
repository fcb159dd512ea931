#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "clad/loss.hpp"
#include "clad/rng.hpp"

using namespace clad;

namespace {

GaussianModeld identity_model(Eigen::Index d) {
  return make_gaussian<double>(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d), 50, 0.0);
}

GaussianModeld random_model(Eigen::Index d, Rng& rng) {
  return fit_gaussian(rng.normal_matrix(3 * d + 5, d), 1e-6);
}

ContrastBatch random_batch(Eigen::Index count, Eigen::Index d, Rng& rng) {
  ContrastBatch b;
  b.anchor = rng.normal_matrix(count, d);
  b.positive = b.anchor + 0.5 * rng.normal_matrix(count, d);
  b.negative = 1.5 * rng.normal_matrix(count, d);
  return b;
}

// Gradient error relative to the larger magnitude, with a 1e-6 floor so that
// components at round-off level are not compared digit by digit.
double grad_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

void check_gradient(const std::function<double(const Eigen::MatrixXd&)>& f, Eigen::MatrixXd at,
                    const Eigen::MatrixXd& grad, const char* what) {
  // Fourth-order central stencil. The step follows the size of the row being
  // perturbed, since the cosine loss varies on the scale of the vector norm.
  for (Eigen::Index i = 0; i < at.rows(); ++i)
    for (Eigen::Index j = 0; j < at.cols(); ++j) {
      const double keep = at(i, j);
      const double h = 1e-3 * std::min(1.0, at.row(i).norm());
      auto at_offset = [&](double delta) {
        at(i, j) = keep + delta;
        const double v = f(at);
        at(i, j) = keep;
        return v;
      };
      const double numeric =
          (8 * (at_offset(h) - at_offset(-h)) - (at_offset(2 * h) - at_offset(-2 * h))) / (12 * h);
      EXPECT_LT(grad_rel_err(grad(i, j), numeric), 1e-5) << what << " (" << i << "," << j << ")";
    }
}

}  // namespace

TEST(MahLoss, EqualSimilaritiesGiveOneHalf) {
  const GaussianModeld g = identity_model(2);
  ContrastBatch b;
  b.anchor = Eigen::MatrixXd::Zero(1, 2);
  b.positive = Eigen::RowVector2d(1, 0);
  b.negative = Eigen::RowVector2d(0, -1);
  EXPECT_NEAR(mah_loss(b, g).value, 0.5, 1e-15);
}

TEST(MahLoss, IdenticalPositive) {
  const GaussianModeld g = identity_model(2);
  ContrastBatch b;
  b.anchor = Eigen::RowVector2d(0.4, 0.1);
  b.positive = b.anchor;
  b.negative = b.anchor + Eigen::RowVector2d(std::sqrt(2.0), 0);
  EXPECT_NEAR(mah_loss(b, g).value, 1.0 / (1.0 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(mah_loss(b, g).value, 0.268941, 1e-6);
}

TEST(MahLoss, AveragesTerms) {
  const GaussianModeld g = identity_model(1);
  ContrastBatch b;
  b.anchor = Eigen::MatrixXd::Zero(2, 1);
  b.positive = Eigen::MatrixXd::Zero(2, 1);
  b.negative.resize(2, 1);
  b.negative << 0.0, std::sqrt(std::log(3.0));  // terms 1/2 and 1/4
  EXPECT_NEAR(mah_loss(b, g).value, 0.375, 1e-15);
}

TEST(MahMeanLoss, TargetAtTheMean) {
  const GaussianModeld g = identity_model(2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  const Eigen::MatrixXd y = Eigen::RowVector2d(std::sqrt(2.0), 0);
  // the target term sits at similarity 1 and is clamped to 1 - kSimClamp
  const double want = -std::log1p(-kSimClamp) - std::log(1.0 - std::exp(-1.0));
  EXPECT_NEAR(mah_mean_loss(x, y, g).value, want, 1e-15);
  EXPECT_NEAR(want, 0.458675, 1e-6);
}

TEST(MahMeanLoss, NegativeAtTheMeanIsClamped) {
  const GaussianModeld g = identity_model(2);
  const Eigen::MatrixXd x = Eigen::RowVector2d(0.5, 0.5);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 2);
  const LossValue v = mah_mean_loss(x, y, g);
  EXPECT_TRUE(std::isfinite(v.value));
  EXPECT_NEAR(v.value, 0.25 - std::log(kSimClamp), 1e-12);
  EXPECT_EQ(v.grad_negative.norm(), 0.0);
}

TEST(MahMeanLoss, AveragesPairs) {
  Rng rng(3);
  const GaussianModeld g = random_model(3, rng);
  const Eigen::MatrixXd x = rng.normal_matrix(2, 3), y = 2 * rng.normal_matrix(2, 3);
  const double v1 = mah_mean_loss(x.topRows(1), y.topRows(1), g).value;
  const double v2 = mah_mean_loss(x.bottomRows(1), y.bottomRows(1), g).value;
  EXPECT_NEAR(mah_mean_loss(x, y, g).value, 0.5 * (v1 + v2), 1e-14);
}

TEST(MahMeanLoss, Errors) {
  const GaussianModeld g = identity_model(2);
  EXPECT_THROW(mah_mean_loss(Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2), g), Error);
  EXPECT_THROW(mah_mean_loss(Eigen::MatrixXd::Zero(1, 3), Eigen::MatrixXd::Zero(1, 3), g), Error);
  EXPECT_THROW(mah_mean_loss(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(1, 2), g), Error);
}

TEST(CosineLoss, Examples) {
  ContrastBatch b;
  b.anchor = Eigen::RowVector3d(1, 2, 0);
  b.positive = b.anchor;
  b.negative = Eigen::RowVector3d(-2, 1, 5);
  EXPECT_NEAR(cosine_loss(b).value, 1.0 / 3.0, 1e-15);
  b.negative = -b.anchor;
  EXPECT_NEAR(cosine_loss(b).value, 0.0, 1e-15);
  b.negative = Eigen::RowVector3d::Zero();
  EXPECT_THROW(cosine_loss(b), Error);

  ContrastBatch flat;
  flat.anchor = Eigen::MatrixXd::Constant(1, 1, 1.0);
  flat.positive = Eigen::MatrixXd::Constant(1, 1, -2.0);
  flat.negative = Eigen::MatrixXd::Constant(1, 1, -3.0);
  try {
    cosine_loss(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteLoss);
  }
}

TEST(CosineLoss, ScalarRecomputation) {
  Rng rng(8);
  const ContrastBatch b = random_batch(5, 4, rng);
  double want = 0;
  for (int i = 0; i < 5; ++i) {
    auto cosine = [](const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v) {
      double uv = 0, uu = 0, vv = 0;
      for (Eigen::Index k = 0; k < u.size(); ++k) uv += u[k] * v[k], uu += u[k] * u[k], vv += v[k] * v[k];
      return uv / std::sqrt(uu * vv);
    };
    const double sp = (1 + cosine(b.anchor.row(i), b.positive.row(i))) / 2;
    const double sn = (1 + cosine(b.anchor.row(i), b.negative.row(i))) / 2;
    want += sn / (sp + sn) / 5;
  }
  EXPECT_NEAR(cosine_loss(b).value, want, 1e-14);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 1 + Eigen::Index(rng.below(8));
    const Eigen::Index count = 1 + Eigen::Index(rng.below(4));
    const GaussianModeld g = random_model(d, rng);
    const ContrastBatch b = random_batch(count, d, rng);

    const LossValue m = mah_loss(b, g);
    check_gradient([&](const Eigen::MatrixXd& a) { ContrastBatch c = b; c.anchor = a; return mah_loss(c, g).value; },
                   b.anchor, m.grad_anchor, "mah anchor");
    check_gradient([&](const Eigen::MatrixXd& p) { ContrastBatch c = b; c.positive = p; return mah_loss(c, g).value; },
                   b.positive, m.grad_positive, "mah positive");
    check_gradient([&](const Eigen::MatrixXd& n) { ContrastBatch c = b; c.negative = n; return mah_loss(c, g).value; },
                   b.negative, m.grad_negative, "mah negative");

    const LossValue mm = mah_mean_loss(b.anchor, b.negative, g);
    check_gradient([&](const Eigen::MatrixXd& a) { return mah_mean_loss(a, b.negative, g).value; }, b.anchor,
                   mm.grad_anchor, "mean target");
    check_gradient([&](const Eigen::MatrixXd& n) { return mah_mean_loss(b.anchor, n, g).value; }, b.negative,
                   mm.grad_negative, "mean negative");

    if (d == 1) continue;  // in one dimension the cosine is a sign and the loss is piecewise constant
    const LossValue cl = cosine_loss(b);
    check_gradient([&](const Eigen::MatrixXd& a) { ContrastBatch c = b; c.anchor = a; return cosine_loss(c).value; },
                   b.anchor, cl.grad_anchor, "cosine anchor");
    check_gradient([&](const Eigen::MatrixXd& p) { ContrastBatch c = b; c.positive = p; return cosine_loss(c).value; },
                   b.positive, cl.grad_positive, "cosine positive");
    check_gradient([&](const Eigen::MatrixXd& n) { ContrastBatch c = b; c.negative = n; return cosine_loss(c).value; },
                   b.negative, cl.grad_negative, "cosine negative");
  }
}

TEST(Bounds, RangesAndDescentStep) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 2 + Eigen::Index(rng.below(6));
    const GaussianModeld g = random_model(d, rng);
    ContrastBatch b = random_batch(4, d, rng);
    const LossValue m = mah_loss(b, g);
    EXPECT_GT(m.value, 0.0);
    EXPECT_LT(m.value, 1.0);
    const LossValue mm = mah_mean_loss(b.anchor, b.negative, g);
    EXPECT_GE(mm.value, 0.0);

    const double step = 1e-3;
    ContrastBatch moved = b;
    moved.negative -= step * m.grad_negative;
    EXPECT_LT(mah_loss(moved, g).value, m.value);
    const Eigen::MatrixXd y = b.negative - step * mm.grad_negative;
    EXPECT_LT(mah_mean_loss(b.anchor, y, g).value, mm.value);
  }
}

TEST(Permutation, OrderDoesNotMatter) {
  Rng rng(12);
  const GaussianModeld g = random_model(3, rng);
  const ContrastBatch b = random_batch(4, 3, rng);
  const Eigen::Vector4i order(2, 0, 3, 1);
  ContrastBatch p;
  p.anchor = b.anchor(order, Eigen::all);
  p.positive = b.positive(order, Eigen::all);
  p.negative = b.negative(order, Eigen::all);

  const LossValue a = mah_loss(b, g), c = mah_loss(p, g);
  EXPECT_NEAR(a.value, c.value, 1e-15);
  EXPECT_LT((a.grad_anchor(order, Eigen::all) - c.grad_anchor).norm(), 1e-15);
  EXPECT_LT((a.grad_negative(order, Eigen::all) - c.grad_negative).norm(), 1e-15);

  const LossValue ma = mah_mean_loss(b.anchor, b.negative, g), mc = mah_mean_loss(p.anchor, p.negative, g);
  EXPECT_NEAR(ma.value, mc.value, 1e-14);
  EXPECT_LT((ma.grad_anchor(order, Eigen::all) - mc.grad_anchor).norm(), 1e-15);

  EXPECT_NEAR(cosine_loss(b).value, cosine_loss(p).value, 1e-15);
}
