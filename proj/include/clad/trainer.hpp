#ifndef CLAD_TRAINER_HPP
#define CLAD_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clad/dataset.hpp"
#include "clad/linalg.hpp"
#include "clad/rng.hpp"
#include "clad/sliding_window.hpp"

namespace clad {

/// Affine map from input embeddings to the contrast space: z = W x + b.
struct ProjectionHead {
  Eigen::MatrixXd weights;  // d_out x d_in
  Eigen::VectorXd bias;     // d_out

  Eigen::Index d_in() const { return weights.cols(); }
  Eigen::Index d_out() const { return weights.rows(); }

  /// Projects each row of `points`.
  Eigen::MatrixXd project(const Eigen::MatrixXd& points) const;

  /// Random orthonormal rows and zero bias.
  static ProjectionHead orthonormal(Eigen::Index d_in, Eigen::Index d_out, Rng& rng);
  static ProjectionHead identity(Eigen::Index d);
};

/// Copy of `data` with every vector mapped through `head`.
EmbeddingDataset project(const EmbeddingDataset& data, const ProjectionHead& head);

enum class LossKind { Mah, MahMean, Cosine };

const char* loss_name(LossKind kind);
LossKind parse_loss(const std::string& name);

struct TrainConfig {
  LossKind loss = LossKind::MahMean;
  Eigen::Index batch_size = 16;
  Eigen::Index window_multiplier = 100;
  double learning_rate = 1e-2;
  int epochs = 1;
  double ridge = kDefaultRidge;
  /// Requested projection width, clamped to the input dimension. 0 selects
  /// min(64, d_in / 2): a full-width head is invertible, and Mahalanobis
  /// distances are invariant under invertible affine maps, so only a
  /// narrowing head can change the decision geometry.
  Eigen::Index proj_dim = 0;
  std::uint64_t seed = 0;

  Eigen::Index window_capacity() const { return window_multiplier * batch_size; }
  Eigen::Index projection_width(Eigen::Index d_in) const;
  void validate() const;
};

/// Row indices into a dataset for one contrast triple.
struct TripleIndex {
  Eigen::Index anchor;
  Eigen::Index positive;
  Eigen::Index negative;
};

/// One epoch of triples, chunked into batches of `batch_size` (the last batch
/// may be short). Anchors visit every target row once in random order; the
/// positive is uniform over the other target rows and the negative uniform
/// over the non-target rows.
std::vector<std::vector<TripleIndex>> sample_triples(const EmbeddingDataset& data,
                                                     Eigen::Index batch_size, Rng& rng);

struct TrainLogRecord {
  int epoch;
  int batch;
  double loss;
};

struct TrainResult {
  ProjectionHead head;
  GaussianModeld model;
  std::vector<TrainLogRecord> log;
};

/// Called after every optimizer step with the step's log record, the updated
/// head and the window that supplied the statistics.
using TrainObserver =
    std::function<void(const TrainLogRecord&, const ProjectionHead&, const SlidingWindow<double>&)>;

/// Trains the projection head on `data` with the configured loss. Statistics
/// come from a sliding window over projected target vectors, warm-started
/// with one pass over the training targets before the first step.
TrainResult train(const EmbeddingDataset& data, const TrainConfig& cfg,
                  const TrainObserver& observer = {});

/// Statistics of every target row of `data` under `head`.
GaussianModeld fit_target_model(const EmbeddingDataset& data, const ProjectionHead& head,
                                double ridge);

/// Three-layer feed-forward classifier used as the ablation decision head.
struct MlpHead {
  Eigen::VectorXd shift;  // input standardization
  Eigen::VectorXd scale;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;
  double b3 = 0.0;

  /// Probability of the target class for each row.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& points) const;
  std::vector<Label> predict(const Eigen::MatrixXd& points) const;
};

struct MlpConfig {
  int epochs = 20;
  Eigen::Index hidden1 = 0;  // 0 selects the projection width
  Eigen::Index hidden2 = 0;  // 0 selects half the projection width
  Eigen::Index batch_size = 32;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

/// Fits the MLP with binary log-loss on embeddings projected by a frozen head.
MlpHead train_mlp(const EmbeddingDataset& data, const ProjectionHead& head, const MlpConfig& cfg);

}  // namespace clad

#endif  // CLAD_TRAINER_HPP
