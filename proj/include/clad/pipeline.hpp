#ifndef CLAD_PIPELINE_HPP
#define CLAD_PIPELINE_HPP

#include <string>
#include <vector>

#include "clad/data.hpp"
#include "clad/mahalanobis.hpp"
#include "clad/metrics.hpp"
#include "clad/trainer.hpp"

namespace clad {

/// Per-instance output of the decision rule.
struct Inference {
  std::string id;
  Label decision;
  double t;      // normalized statistic, or the MLP probability
  double score;  // higher means more target-like
};

/// Applies the artifact's decision head to every row of `data`.
std::vector<Inference> infer(const ModelArtifact& artifact, const EmbeddingDataset& data);

/// infer + score + roc_auc against the dataset labels.
MetricsReport evaluate(const ModelArtifact& artifact, const EmbeddingDataset& data);

struct PipelineOptions {
  TrainConfig train;
  CalibrationOptions calibration;
  /// Fixed quantile level; when unset the threshold is calibrated on dev.
  std::optional<double> beta_level;
  /// Fit the inference statistics on every training target instead of
  /// keeping the final sliding-window model.
  bool refit_all = false;
  bool mlp_decision = false;
  MlpConfig mlp;
};

struct PipelineResult {
  ModelArtifact artifact;
  std::vector<TrainLogRecord> log;
  MetricsReport dev;
};

/// train -> (refit) -> calibrate on dev -> package an artifact.
PipelineResult run_pipeline(const Splits& splits, const PipelineOptions& options);

struct AblationRow {
  LossKind loss;
  bool mlp_decision;
  MetricsReport test;
};

/// {mah, mah-mean, cosine} x {beta-decision, MLP} on shared splits.
std::vector<AblationRow> run_ablation(const Splits& splits, const PipelineOptions& base,
                                      const std::vector<bool>& decisions = {false, true});

/// Tab-separated table: loss, decision, accuracy, precision, fpr, f1.
std::string ablation_tsv(const std::vector<AblationRow>& rows);

/// Line-delimited inference records.
std::string inference_jsonl(const std::vector<Inference>& rows);

}  // namespace clad

#endif  // CLAD_PIPELINE_HPP
