#ifndef CLAD_DATA_HPP
#define CLAD_DATA_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clad/dataset.hpp"
#include "clad/linalg.hpp"
#include "clad/mahalanobis.hpp"
#include "clad/trainer.hpp"

namespace clad {

// ---------------------------------------------------------------------------
// Dataset files: JSON Lines, one record per line,
//   {"id":"t000001","label":1,"vector":[0.25,-1.5,...]}
// Keys appear in that order and floats use 17 significant digits, so
// read -> write reproduces the file byte for byte.

EmbeddingDataset parse_dataset(const std::string& text);
EmbeddingDataset load_dataset(const std::string& path);
std::string format_dataset(const EmbeddingDataset& data);
void save_dataset(const EmbeddingDataset& data, const std::string& path);

/// Rejects non-finite values, ragged vectors and duplicate ids.
void validate_dataset(const EmbeddingDataset& data);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct Splits {
  EmbeddingDataset train;
  EmbeddingDataset dev;
  EmbeddingDataset test;
};

/// Stratified split: each class is shuffled under `seed` and cut by the
/// ratios (dev and test sizes rounded, train takes the rest). Rows keep
/// dataset order within each split.
Splits split(const EmbeddingDataset& data, const SplitRatios& ratios, std::uint64_t seed);

struct SynthConfig {
  Eigen::Index d_in = 32;
  Eigen::Index manifold_dim = 8;
  Eigen::Index n_target = 2000;
  Eigen::Index m_non_target = 8000;
  Eigen::Index components = 4;
  double separation = 7.0;
  std::uint64_t seed = 0;
};

/// Synthetic benchmark. Targets come from one anisotropic Gaussian on a
/// low-dimensional affine subspace of R^d_in plus small isotropic noise.
/// Non-targets come from a heterogeneous mixture: Gaussians that share the
/// target subspace but sit off-center within it, full-dimensional Gaussians
/// with their own scales, and a uniform background box. All mixture centers
/// move away from the target center in proportion to `separation`.
EmbeddingDataset synth_benchmark(const SynthConfig& cfg);

struct SynthMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Population mean and covariance of the benchmark's target class.
SynthMoments synth_target_moments(const SynthConfig& cfg);

// ---------------------------------------------------------------------------
// Model artifact: versioned `key value...` text, one key per line, ending
// with `end`. See docs/model_format.md.

inline constexpr int kArtifactVersion = 1;

struct ModelArtifact {
  ProjectionHead head;
  GaussianModeld model;
  DecisionThreshold threshold;
  std::optional<MlpHead> mlp;
  std::uint64_t seed = 0;
  std::string config_hash;
};

std::string format_model(const ModelArtifact& artifact);
ModelArtifact parse_model(const std::string& text);
void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

/// Canonical one-line description of a training configuration.
std::string describe(const TrainConfig& cfg);
/// 16 hex digits of FNV-1a over `text`.
std::string hash_hex(const std::string& text);

/// Training log as JSON Lines: {"epoch":0,"batch":3,"loss":0.125}
std::string format_train_log(const std::vector<TrainLogRecord>& log);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// %.17g rendering shared by every text format.
std::string format_real(double v);

}  // namespace clad

#endif  // CLAD_DATA_HPP
