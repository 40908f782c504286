#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dtg {

/// Source of raw 64-bit random words. Sampling code draws through this
/// interface so tests can script the exact offsets a sampler sees.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;
};

/// Uniform integer in [0, n) via the multiply-high mapping: word 0 maps to 0
/// and the all-ones word maps to n - 1.
std::size_t uniform_index(RandomSource& src, std::size_t n);
/// Uniform double in [0, 1) with 53 bits of precision.
double uniform01(RandomSource& src);
/// Standard normal deviate (Box-Muller, one value per call).
double standard_normal(RandomSource& src);

/// Mixes a base seed with a list of stream keys (SplitMix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);
/// Stable 64-bit hash of a stream name (FNV-1a).
std::uint64_t stream_tag(std::string_view name);

/// Deterministic generator. The sequence depends only on the seed; no
/// std::*_distribution is involved, so results are identical across
/// standard library implementations.
class Rng final : public RandomSource {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Named sub-stream: Rng(derive_seed(seed, {stream_tag(name), keys...})).
  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::initializer_list<std::uint64_t> keys = {});

  std::uint64_t next_u64() override { return engine_(); }

  std::size_t index(std::size_t n) { return uniform_index(*this, n); }
  double uniform() { return uniform01(*this); }
  double normal() { return standard_normal(*this); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dtg
