#ifndef CLAD_LOSS_HPP
#define CLAD_LOSS_HPP

#include <Eigen/Dense>

#include "clad/linalg.hpp"

namespace clad {

/// A batch of contrast triples, one per row: anchor x and positive x⁺ from the
/// target class, negative y⁻ from the non-target class.
struct ContrastBatch {
  Eigen::MatrixXd anchor;
  Eigen::MatrixXd positive;
  Eigen::MatrixXd negative;

  Eigen::Index size() const { return anchor.rows(); }
};

/// Loss value and its gradient with respect to every input row. For the
/// mean loss, grad_anchor holds the target rows and grad_positive is empty.
struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad_anchor;
  Eigen::MatrixXd grad_positive;
  Eigen::MatrixXd grad_negative;
};

/// Log clamp for the mean loss: similarities are kept in [eps, 1 - eps].
inline constexpr double kSimClamp = 1e-12;

/// Mean over triples of sim(x,y⁻) / (sim(x,x⁺) + sim(x,y⁻)) with the
/// Mahalanobis kernel. Mean and covariance are treated as constants.
LossValue mah_loss(const ContrastBatch& batch, const GaussianModeld& model);

/// -mean over pairs of [log sim(μ,x) + log(1 - sim(μ,y⁻))].
LossValue mah_mean_loss(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& negatives,
                        const GaussianModeld& model);

/// mah_loss with the kernel replaced by (1 + cos(x,y)) / 2.
LossValue cosine_loss(const ContrastBatch& batch);

}  // namespace clad

#endif  // CLAD_LOSS_HPP
