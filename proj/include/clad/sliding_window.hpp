#ifndef CLAD_SLIDING_WINDOW_HPP
#define CLAD_SLIDING_WINDOW_HPP

#include <optional>

#include "clad/linalg.hpp"

namespace clad {

/// Ring buffer of the most recent target-class vectors, with Gaussian
/// statistics refreshed from its contents every `update_frequency` pushes.
///
/// Refreshes recompute the statistics over the whole buffer instead of
/// downdating, so the published model always equals fit_gaussian(contents()).
/// Single writer; the published model may be copied out and read concurrently.
template <typename Scalar = double>
class SlidingWindow {
 public:
  SlidingWindow(Eigen::Index capacity, Eigen::Index update_frequency, Eigen::Index dim,
                Scalar ridge = Scalar(kDefaultRidge))
      : capacity_(capacity), update_frequency_(update_frequency), ridge_(ridge) {
    if (capacity < 1 || update_frequency < 1 || dim < 1)
      throw Error(Errc::InvalidConfig, "sliding window needs positive capacity, frequency, dim");
    buffer_.resize(capacity, dim);
  }

  Eigen::Index capacity() const { return capacity_; }
  Eigen::Index update_frequency() const { return update_frequency_; }
  Eigen::Index dim() const { return buffer_.cols(); }
  Eigen::Index size() const { return size_; }
  Eigen::Index pending() const { return pending_; }

  /// Appends the rows of `batch`, evicting the oldest vectors past capacity.
  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& batch) {
    if (batch.rows() == 0) return;
    if (batch.cols() != dim())
      throw Error(Errc::DimensionMismatch, "window push: batch has " +
                                               std::to_string(batch.cols()) + " columns, window " +
                                               std::to_string(dim()));
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
      buffer_.row(head_) = batch.row(i);
      head_ = (head_ + 1) % capacity_;
      if (size_ < capacity_) ++size_;
    }
    pending_ += batch.rows();
    if (pending_ >= update_frequency_ && size_ >= 2) refresh();
  }

  /// Recomputes the statistics now, regardless of the pending count.
  void refresh() {
    model_ = fit_gaussian(contents(), ridge_);
    pending_ = 0;
  }

  /// Buffer contents, oldest first.
  Matrix<Scalar> contents() const {
    Matrix<Scalar> out(size_, dim());
    const Eigen::Index start = size_ < capacity_ ? 0 : head_;
    for (Eigen::Index i = 0; i < size_; ++i) out.row(i) = buffer_.row((start + i) % capacity_);
    return out;
  }

  bool has_model() const { return model_.has_value(); }

  const GaussianModel<Scalar>& model() const {
    if (!model_) throw Error(Errc::TooFewSamples, "sliding window has no statistics yet");
    return *model_;
  }

 private:
  Eigen::Index capacity_;
  Eigen::Index update_frequency_;
  Scalar ridge_;
  Matrix<Scalar> buffer_;
  Eigen::Index head_ = 0;
  Eigen::Index size_ = 0;
  Eigen::Index pending_ = 0;
  std::optional<GaussianModel<Scalar>> model_;
};

}  // namespace clad

#endif  // CLAD_SLIDING_WINDOW_HPP
