#ifndef CLAD_RNG_HPP
#define CLAD_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace clad {

/// 64-bit FNV-1a over raw bytes. Stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Derives an independent stream seed from a root seed and a subsystem label.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept;

/// Seeded random source. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; the distributions below are implemented here so
/// that draws are identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, std::string_view label) : engine_(derive_seed(root, label)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates shuffle driven by Rng::below.
template <typename T, typename Alloc, template <typename, typename> class Seq>
void shuffle(Seq<T, Alloc>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace clad

#endif  // CLAD_RNG_HPP
