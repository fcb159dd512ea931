#include "clad/loss.hpp"

#include <cmath>

#include "clad/mahalanobis.hpp"

namespace clad {

namespace {

void check_batch(const ContrastBatch& batch, Eigen::Index dim) {
  if (batch.size() == 0) throw Error(Errc::EmptyBatch, "contrast batch is empty");
  if (batch.positive.rows() != batch.size() || batch.negative.rows() != batch.size())
    throw Error(Errc::DimensionMismatch, "triple members differ in count");
  if (batch.anchor.cols() != dim || batch.positive.cols() != dim || batch.negative.cols() != dim)
    throw Error(Errc::DimensionMismatch, "triple members must have dimension " + std::to_string(dim));
}

// Precision-weighted difference P·v with P = (cov + ridge·I)⁻¹.
Eigen::VectorXd precision_times(const GaussianModeld& model, const Eigen::VectorXd& v) {
  return spd_solve(model, v);
}

}  // namespace

LossValue mah_loss(const ContrastBatch& batch, const GaussianModeld& model) {
  check_batch(batch, model.dim());
  const Eigen::Index count = batch.size();
  const double d = double(model.dim());
  LossValue out;
  out.grad_anchor = Eigen::MatrixXd::Zero(count, model.dim());
  out.grad_positive = Eigen::MatrixXd::Zero(count, model.dim());
  out.grad_negative = Eigen::MatrixXd::Zero(count, model.dim());

  double total = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::VectorXd dp = (batch.anchor.row(i) - batch.positive.row(i)).transpose();
    const Eigen::VectorXd dn = (batch.anchor.row(i) - batch.negative.row(i)).transpose();
    const Eigen::VectorXd pdp = precision_times(model, dp);
    const Eigen::VectorXd pdn = precision_times(model, dn);
    // term = sn / (sp + sn) = logistic(log sn - log sp), stable when both underflow
    const double log_sp = -dp.dot(pdp) / d;
    const double log_sn = -dn.dot(pdn) / d;
    const double term = 1.0 / (1.0 + std::exp(log_sp - log_sn));
    total += term;

    // d(term)/d(log sn) = term(1-term) = -d(term)/d(log sp); d(log sim(a,b))/da = -2/d · P(a-b)
    const double w = term * (1.0 - term);
    const Eigen::VectorXd g_dp = (2.0 / d) * w * pdp;
    const Eigen::VectorXd g_dn = -(2.0 / d) * w * pdn;
    out.grad_anchor.row(i) = (g_dp + g_dn).transpose();
    out.grad_positive.row(i) = -g_dp.transpose();
    out.grad_negative.row(i) = -g_dn.transpose();
  }
  const double scale = 1.0 / double(count);
  out.value = total * scale;
  out.grad_anchor *= scale;
  out.grad_positive *= scale;
  out.grad_negative *= scale;
  return out;
}

LossValue mah_mean_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& negatives,
                        const GaussianModeld& model) {
  if (targets.rows() == 0) throw Error(Errc::EmptyBatch, "mean loss batch is empty");
  if (targets.rows() != negatives.rows())
    throw Error(Errc::DimensionMismatch, "targets and negatives must pair up");
  if (targets.cols() != model.dim() || negatives.cols() != model.dim())
    throw Error(Errc::DimensionMismatch, "batch dimension does not match model");
  const Eigen::Index count = targets.rows();
  const double d = double(model.dim());
  LossValue out;
  out.grad_anchor = Eigen::MatrixXd::Zero(count, model.dim());
  out.grad_positive.resize(0, model.dim());
  out.grad_negative = Eigen::MatrixXd::Zero(count, model.dim());

  double total = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::VectorXd dx = targets.row(i).transpose() - model.mean;
    const Eigen::VectorXd dy = negatives.row(i).transpose() - model.mean;
    const Eigen::VectorXd pdx = precision_times(model, dx);
    const Eigen::VectorXd pdy = precision_times(model, dy);
    // work with log sim and 1 - sim directly so the clamp bounds are exact
    const double log_sx = -dx.dot(pdx) / d;
    const double log_sy = -dy.dot(pdy) / d;
    const double one_minus_sy = -std::expm1(log_sy);

    // clamped regions contribute no gradient
    const double log_sx_c = std::clamp(log_sx, std::log(kSimClamp), std::log1p(-kSimClamp));
    const double one_minus_sy_c = std::clamp(one_minus_sy, kSimClamp, 1.0 - kSimClamp);
    total -= log_sx_c + std::log(one_minus_sy_c);

    if (log_sx == log_sx_c) {
      // -d log(sx)/dx = (2/d) P(x-μ)
      out.grad_anchor.row(i) = ((2.0 / d) * pdx).transpose();
    }
    if (one_minus_sy == one_minus_sy_c) {
      // -d log(1-sy)/dy = (1/(1-sy)) · dsy/dy = -(2/d) sy/(1-sy) P(y-μ)
      out.grad_negative.row(i) = (-(2.0 / d) * std::exp(log_sy) / one_minus_sy * pdy).transpose();
    }
  }
  const double scale = 1.0 / double(count);
  out.value = total * scale;
  out.grad_anchor *= scale;
  out.grad_negative *= scale;
  return out;
}

namespace {

struct CosineSim {
  double value;     // (1 + cos) / 2
  Eigen::VectorXd grad_a;
  Eigen::VectorXd grad_b;
};

CosineSim cosine_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine of a zero vector");
  const double c = a.dot(b) / (na * nb);
  CosineSim s;
  s.value = 0.5 * (1.0 + c);
  s.grad_a = 0.5 * (b / (na * nb) - c * a / (na * na));
  s.grad_b = 0.5 * (a / (na * nb) - c * b / (nb * nb));
  return s;
}

}  // namespace

LossValue cosine_loss(const ContrastBatch& batch) {
  check_batch(batch, batch.anchor.cols());
  const Eigen::Index count = batch.size();
  const Eigen::Index dim = batch.anchor.cols();
  LossValue out;
  out.grad_anchor = Eigen::MatrixXd::Zero(count, dim);
  out.grad_positive = Eigen::MatrixXd::Zero(count, dim);
  out.grad_negative = Eigen::MatrixXd::Zero(count, dim);

  double total = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::VectorXd x = batch.anchor.row(i).transpose();
    const CosineSim sp = cosine_sim(x, batch.positive.row(i).transpose());
    const CosineSim sn = cosine_sim(x, batch.negative.row(i).transpose());
    const double denom = sp.value + sn.value;
    if (denom == 0.0)
      throw Error(Errc::NonFiniteLoss, "anchor is antipodal to both its positive and its negative");
    total += sn.value / denom;
    const double w_sp = -sn.value / (denom * denom);
    const double w_sn = sp.value / (denom * denom);
    out.grad_anchor.row(i) = (w_sp * sp.grad_a + w_sn * sn.grad_a).transpose();
    out.grad_positive.row(i) = (w_sp * sp.grad_b).transpose();
    out.grad_negative.row(i) = (w_sn * sn.grad_b).transpose();
  }
  const double scale = 1.0 / double(count);
  out.value = total * scale;
  out.grad_anchor *= scale;
  out.grad_positive *= scale;
  out.grad_negative *= scale;
  return out;
}

}  // namespace clad
