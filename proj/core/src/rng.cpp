#include "dtg/rng.hpp"

#include <cmath>
#include <numbers>

#include "dtg/errors.hpp"

namespace dtg {

namespace {

__extension__ using uint128 = unsigned __int128;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::size_t uniform_index(RandomSource& src, std::size_t n) {
  if (n == 0) throw InvalidArgument("uniform_index: empty range");
  const auto wide = static_cast<uint128>(src.next_u64()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

double uniform01(RandomSource& src) {
  return static_cast<double>(src.next_u64() >> 11) * 0x1.0p-53;
}

double standard_normal(RandomSource& src) {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform01(src);
  const double u2 = uniform01(src);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng Rng::stream(std::uint64_t seed, std::string_view name,
                std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = derive_seed(seed, {stream_tag(name)});
  for (std::uint64_t k : keys) h = derive_seed(h, {k});
  return Rng(h);
}

}  // namespace dtg
