#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "dtg/numerics.hpp"
#include "dtg/rng.hpp"

namespace dtg::testing {

/// Replays a fixed list of words, cycling.
class ScriptedSource final : public RandomSource {
 public:
  explicit ScriptedSource(std::vector<std::uint64_t> words) : words_(std::move(words)) {}
  std::uint64_t next_u64() override { return words_[i_++ % words_.size()]; }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t i_ = 0;
};

inline constexpr std::uint64_t kMinWord = 0;
inline constexpr std::uint64_t kMaxWord = ~std::uint64_t{0};

inline Vector random_unit(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(d);
  for (double& x : v) x = n(gen);
  return l2_normalize(v);
}

inline Matrix random_unit_rows(std::mt19937_64& gen, std::size_t rows, std::size_t d) {
  Matrix m(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector v = random_unit(gen, d);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dtg_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dtg::testing
