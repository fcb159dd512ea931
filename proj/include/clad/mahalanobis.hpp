#ifndef CLAD_MAHALANOBIS_HPP
#define CLAD_MAHALANOBIS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "clad/betadist.hpp"
#include "clad/dataset.hpp"
#include "clad/linalg.hpp"

namespace clad {

/// vᵀ (cov + ridge·I)⁻¹ v for a difference vector v.
template <typename Scalar, typename Derived>
Scalar mahalanobis_form(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != model.dim())
    throw Error(Errc::DimensionMismatch, "vector length " + std::to_string(v.size()) +
                                             " vs model dimension " + std::to_string(model.dim()));
  const Vector<Scalar> y = model.chol.template triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

/// Squared Mahalanobis distance of x from the model mean.
template <typename Scalar, typename Derived>
Scalar sq_mahalanobis(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != model.dim())
    throw Error(Errc::DimensionMismatch, "vector length " + std::to_string(x.size()) +
                                             " vs model dimension " + std::to_string(model.dim()));
  return mahalanobis_form(model, x - model.mean);
}

/// exp(-(x-y)ᵀ Σ⁻¹ (x-y) / d), in (0, 1].
template <typename Scalar, typename DerivedX, typename DerivedY>
Scalar sim_mah(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<DerivedX>& x,
               const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size())
    throw Error(Errc::DimensionMismatch, "sim_mah: operands differ in length");
  return std::exp(-mahalanobis_form(model, x - y) / Scalar(model.dim()));
}

/// Squared distance of a query and its normalized Beta statistic.
template <typename Scalar = double>
struct DecisionScore {
  Scalar d2 = 0;
  Scalar t = 0;
};

/// Shapes of the Beta law followed by the statistic of a query scored against
/// a model of n points in d dimensions: Beta(d/2, (n-d)/2). This is the
/// included-point law Beta(d/2, (N-d-1)/2) at N = n+1, since the query is
/// appended before scoring.
inline BetaParams decision_params(Eigen::Index n, Eigen::Index d) {
  return BetaParams{double(d) / 2.0, double(n - d) / 2.0};
}

/// Appends x to the model statistics, takes its squared distance under the
/// updated mean and covariance, and normalizes by (n+1)/n². The input model is
/// not modified.
template <typename Scalar, typename Derived>
DecisionScore<Scalar> decision_statistic(const GaussianModel<Scalar>& model,
                                         const Eigen::MatrixBase<Derived>& x) {
  if (model.n <= model.dim() + 1)
    throw Error(Errc::InsufficientSamples, "decision statistic needs n > d + 1 (n=" +
                                               std::to_string(model.n) + ", d=" +
                                               std::to_string(model.dim()) + ")");
  const GaussianModel<Scalar> updated = append_point(model, x);
  const Scalar n = Scalar(model.n);
  DecisionScore<Scalar> score;
  score.d2 = sq_mahalanobis(updated, x);
  score.t = std::clamp((n + Scalar(1)) / (n * n) * score.d2, Scalar(0), Scalar(1));
  return score;
}

/// Quantile level, Beta shapes and critical value of the decision rule.
///
/// Thresholds built from a level have v_beta = beta_quantile(params, level).
/// Thresholds calibrated on observed statistics carry v_beta exactly and
/// level = I_{v_beta}(a, b), which may round to 0 or 1 in the far tails;
/// v_beta is authoritative for decisions.
struct DecisionThreshold {
  double beta_level = 0.95;
  BetaParams params;
  double v_beta = 0.0;
};

DecisionThreshold make_threshold(const BetaParams& params, double beta_level);
DecisionThreshold threshold_at_value(const BetaParams& params, double v_beta);

/// Target iff T < v_beta. A tie at the critical value is non-target.
template <typename Scalar, typename Derived>
Label beta_decide(const GaussianModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                  const DecisionThreshold& thr) {
  const BetaParams expected = decision_params(model.n, model.dim());
  if (!(thr.params == expected))
    throw Error(Errc::ShapeMismatch, "threshold shapes (" + std::to_string(thr.params.a) + ", " +
                                         std::to_string(thr.params.b) + ") do not match model (" +
                                         std::to_string(expected.a) + ", " +
                                         std::to_string(expected.b) + ")");
  return decision_statistic(model, x).t < Scalar(thr.v_beta) ? Label::Target : Label::NonTarget;
}

/// Statistic T for every row of `points` against a frozen model.
Eigen::VectorXd decision_statistics(const GaussianModeld& model, const Eigen::MatrixXd& points);

enum class CalibrationObjective { MaxF1, MaxF1AtFprCap };

struct CalibrationOptions {
  CalibrationObjective objective = CalibrationObjective::MaxF1;
  double fpr_cap = 0.05;
};

/// Chooses the critical value maximizing the objective on a development set.
/// Candidates are every distinct observed T plus the quantiles at levels
/// 0.01, 0.02, ..., 0.99; ties go to the smaller critical value. Under the
/// FPR cap, candidates over the cap are discarded; when none qualify the
/// lowest-FPR candidate is returned.
DecisionThreshold calibrate(const GaussianModeld& model, const EmbeddingDataset& dev,
                            const CalibrationOptions& options = {});

/// Same sweep over precomputed statistics.
DecisionThreshold calibrate_scores(const BetaParams& params, const Eigen::VectorXd& t,
                                   const std::vector<Label>& truth,
                                   const CalibrationOptions& options = {});

}  // namespace clad

#endif  // CLAD_MAHALANOBIS_HPP
