#ifndef CLAD_DATASET_HPP
#define CLAD_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clad {

enum class Label : std::uint8_t { NonTarget = 0, Target = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }

/// Labeled embedding vectors, one record per row of `vectors`.
struct EmbeddingDataset {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  Eigen::MatrixXd vectors;  // size() x dim()

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  Eigen::Index dim() const { return vectors.cols(); }

  Eigen::Index count(Label l) const {
    Eigen::Index c = 0;
    for (Label x : labels) c += (x == l);
    return c;
  }
  Eigen::Index n_target() const { return count(Label::Target); }
  Eigen::Index m_non_target() const { return count(Label::NonTarget); }

  /// Row indices carrying label l, in dataset order.
  std::vector<Eigen::Index> indices(Label l) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < size(); ++i)
      if (labels[static_cast<std::size_t>(i)] == l) out.push_back(i);
    return out;
  }

  /// Rows carrying label l, stacked in dataset order.
  Eigen::MatrixXd rows(Label l) const {
    const auto idx = indices(l);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), dim());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = vectors.row(idx[k]);
    return out;
  }

  /// Subset in the given row order.
  EmbeddingDataset subset(const std::vector<Eigen::Index>& rows_to_keep) const {
    EmbeddingDataset out;
    out.vectors.resize(static_cast<Eigen::Index>(rows_to_keep.size()), dim());
    for (std::size_t k = 0; k < rows_to_keep.size(); ++k) {
      const auto r = rows_to_keep[k];
      out.ids.push_back(ids[static_cast<std::size_t>(r)]);
      out.labels.push_back(labels[static_cast<std::size_t>(r)]);
      out.vectors.row(static_cast<Eigen::Index>(k)) = vectors.row(r);
    }
    return out;
  }
};

}  // namespace clad

#endif  // CLAD_DATASET_HPP
