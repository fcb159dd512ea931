#ifndef CLAD_METRICS_HPP
#define CLAD_METRICS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clad/dataset.hpp"

namespace clad {

/// Binary metrics with the target class as positive. Ratios whose
/// denominator is zero are reported as 0 and flagged.
struct MetricsReport {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  bool has_auc = false;

  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
  bool fpr_degenerate = false;

  long total() const { return tp + fp + tn + fn; }

  /// Flat `key=value` lines in a fixed key order.
  std::string to_text() const;
};

MetricsReport score(const std::vector<Label>& predictions, const std::vector<Label>& truth);

/// Probability that a random target scores above a random non-target, ties
/// counting one half. Computed from midranks in O(n log n).
double roc_auc(const Eigen::VectorXd& scores, const std::vector<Label>& truth);

}  // namespace clad

#endif  // CLAD_METRICS_HPP
