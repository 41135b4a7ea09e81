#ifndef ORBITGRAD_RNG_HPP
#define ORBITGRAD_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace orbitgrad {

/// Derive a child seed from a root seed, a purpose tag and an index.
/**
 * All randomness in the library flows from one root seed. Each consumer asks for a
 * purpose-tagged child stream (e.g. "train-item", "noise", "group") and an index
 * (item number, cell number, ...). The mapping is
 *
 *   child = splitmix64(splitmix64(root ^ fnv1a64(tag)) + index)
 *
 * so a child stream depends only on (root, tag, index). Work can be split across any
 * number of threads without changing results.
 */
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

/// Seeded random stream. Not thread-safe; give every worker its own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  /// Child stream derived from this stream's seed (does not advance this stream).
  [[nodiscard]] Rng child(std::string_view tag, std::uint64_t index = 0) const {
    return Rng(derive_seed(seed_, tag, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t seed_;
};

}  // namespace orbitgrad

#endif  // ORBITGRAD_RNG_HPP
