#ifndef CLAD_DIAGNOSTICS_HPP
#define CLAD_DIAGNOSTICS_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clad/dataset.hpp"
#include "clad/linalg.hpp"
#include "clad/trainer.hpp"

namespace clad {

double normal_cdf(double z);
/// Standard normal quantile, accurate to a few ulps on (0, 1).
double normal_quantile(double p);

struct PcaResult {
  Eigen::MatrixXd reduced;     // n x k scores
  Eigen::MatrixXd components;  // d x k principal directions
  Eigen::VectorXd mean;
  Eigen::VectorXd explained_ratio;  // nonincreasing, in [0, 1]
  /// Set when k exceeds the numerical rank; the surplus columns are zero.
  bool rank_deficient = false;
};

/// Projects centered rows onto the top-k eigenvectors of the sample covariance.
PcaResult pca_reduce(const Eigen::MatrixXd& points, Eigen::Index k);

/// Henze-Zirkler statistic with the usual smoothing
/// b = (n(2d+1)/4)^(1/(d+4)) / √2 and MLE-standardized data.
double henze_zirkler(const Eigen::MatrixXd& points);

/// A² = -n - (1/n) Σ (2i-1) [ln p_(i) + ln(1 - p_(n+1-i))] for probability values p.
double anderson_darling_from_probabilities(std::vector<double> p);

/// Anderson-Darling A² against a normal with estimated mean and deviation.
double anderson_darling(const std::vector<double>& samples);

struct NormalityReport {
  Label label = Label::Target;
  double hz = 0.0;
  std::vector<double> ad_per_dim;
  Eigen::Index n = 0;
  Eigen::Index k = 0;

  double mean_ad() const;
};

/// Per class (target first): project, reduce to k dimensions, then HZ on the
/// reduced sample and AD along each reduced dimension.
std::vector<NormalityReport> normality_report(const EmbeddingDataset& data,
                                              const ProjectionHead& head, Eigen::Index k = 3);

/// (theoretical, sample) quantile pairs: standard normal quantiles at the
/// plotting positions (i - 0.5)/n against the sorted sample. Constant samples
/// are rejected since they carry no shape to compare.
std::vector<std::pair<double, double>> emit_qq(const std::vector<double>& samples);

struct DistanceRecord {
  std::string id;
  Label label;
  double d2;
};

/// One record per instance, ordered by id.
std::vector<DistanceRecord> emit_distance_report(const EmbeddingDataset& data,
                                                 const ProjectionHead& head,
                                                 const GaussianModeld& model);

std::string to_jsonl(const NormalityReport& report);
std::string qq_tsv(const std::vector<std::pair<double, double>>& pairs);
std::string distance_tsv(const std::vector<DistanceRecord>& records);

}  // namespace clad

#endif  // CLAD_DIAGNOSTICS_HPP
