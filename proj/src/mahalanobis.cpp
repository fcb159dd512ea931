#include "clad/mahalanobis.hpp"

#include <algorithm>
#include <vector>

namespace clad {

DecisionThreshold make_threshold(const BetaParams& params, double beta_level) {
  DecisionThreshold thr;
  thr.params = params;
  thr.beta_level = beta_level;
  thr.v_beta = beta_quantile(params, beta_level);
  return thr;
}

DecisionThreshold threshold_at_value(const BetaParams& params, double v_beta) {
  if (!(v_beta >= 0.0 && v_beta <= 1.0))
    throw Error(Errc::OutOfDomain, "critical value must lie in [0, 1]");
  DecisionThreshold thr;
  thr.params = params;
  thr.v_beta = v_beta;
  thr.beta_level = reg_inc_beta(params, v_beta);
  return thr;
}

Eigen::VectorXd decision_statistics(const GaussianModeld& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.dim())
    throw Error(Errc::DimensionMismatch, "points have " + std::to_string(points.cols()) +
                                             " columns, model dimension " +
                                             std::to_string(model.dim()));
  Eigen::VectorXd t(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    t[i] = decision_statistic(model, points.row(i).transpose()).t;
  return t;
}

namespace {

struct SweepPoint {
  double v;
  double f1;
  double fpr;
};

// Counts of entries strictly below v in a sorted array.
Eigen::Index count_below(const std::vector<double>& sorted, double v) {
  return std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
}

}  // namespace

DecisionThreshold calibrate_scores(const BetaParams& params, const Eigen::VectorXd& t,
                                   const std::vector<Label>& truth,
                                   const CalibrationOptions& options) {
  if (static_cast<std::size_t>(t.size()) != truth.size())
    throw Error(Errc::LengthMismatch, "statistics and labels differ in length");
  std::vector<double> pos, neg;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    (truth[static_cast<std::size_t>(i)] == Label::Target ? pos : neg).push_back(t[i]);
  if (pos.empty() || neg.empty())
    throw Error(Errc::DegenerateDevSet, "development split must contain both classes");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> candidates(t.data(), t.data() + t.size());
  for (int k = 1; k <= 99; ++k) candidates.push_back(beta_quantile(params, k / 100.0));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double n_pos = double(pos.size());
  const double n_neg = double(neg.size());
  std::vector<SweepPoint> sweep;
  sweep.reserve(candidates.size());
  for (double v : candidates) {
    const double tp = double(count_below(pos, v));
    const double fp = double(count_below(neg, v));
    const double fn = n_pos - tp;
    const double f1 = tp > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
    sweep.push_back({v, f1, fp / n_neg});
  }

  // candidates ascend in v, so strict improvement keeps the smaller value on ties
  const SweepPoint* best = nullptr;
  const bool capped = options.objective == CalibrationObjective::MaxF1AtFprCap;
  for (const auto& s : sweep) {
    if (capped && s.fpr > options.fpr_cap) continue;
    if (!best || s.f1 > best->f1) best = &s;
  }
  if (!best) {
    for (const auto& s : sweep)
      if (!best || s.fpr < best->fpr) best = &s;
  }
  return threshold_at_value(params, best->v);
}

DecisionThreshold calibrate(const GaussianModeld& model, const EmbeddingDataset& dev,
                            const CalibrationOptions& options) {
  if (dev.n_target() == 0 || dev.m_non_target() == 0)
    throw Error(Errc::DegenerateDevSet, "development split must contain both classes");
  const Eigen::VectorXd t = decision_statistics(model, dev.vectors);
  return calibrate_scores(decision_params(model.n, model.dim()), t, dev.labels, options);
}

}  // namespace clad
