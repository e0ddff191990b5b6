#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace apz {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a
/// top-level seed (stage name, puzzle index, ...).
std::uint64_t mix64(std::uint64_t x);

/// Derive a child seed from a parent seed and a small integer stream id.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Derive a child seed from a parent seed and a label (FNV-1a over the label).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

/// Seeded generator with portable sampling helpers.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are not (their algorithms are
/// implementation-defined), so every draw goes through the helpers below,
/// which consume raw 64-bit engine outputs only.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename Container>
  void shuffle(Container &items) {
    shuffle(std::span(items.data(), items.size()));
  }

private:
  std::mt19937_64 engine_;
};

} // namespace apz
