#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dtg/numerics.hpp"

namespace dtg {

/// Parameters of a synthetic labeled video corpus.
///
/// Each class owns a prototype in a `signal_dim`-dimensional signal subspace.
/// A video draws a latent around its prototype (`video_spread`); frame t adds
/// a linear drift of `drift * t` along a per-video direction in the nuisance
/// subspace plus isotropic `frame_noise`.
struct CorpusSpec {
  std::size_t num_classes = 10;
  std::size_t videos_per_class = 50;
  std::size_t frames_per_video = 32;
  std::size_t frame_dim = 16;
  std::size_t signal_dim = 8;
  double video_spread = 1.0;
  double frame_noise = 0.5;
  double drift = 0.1;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when counts are zero or signal_dim > frame_dim.
  void validate() const;
  bool operator==(const CorpusSpec&) const = default;
};

struct Video {
  Matrix frames;  // frames_per_video x frame_dim
  std::uint32_t label = 0;
  std::uint32_t video_id = 0;

  bool operator==(const Video&) const = default;
};

struct Corpus {
  CorpusSpec spec;
  std::vector<Video> videos;
  Matrix signal_basis;    // signal_dim x frame_dim, orthonormal rows
  Matrix nuisance_basis;  // (frame_dim - signal_dim) x frame_dim, orthonormal rows

  bool operator==(const Corpus&) const = default;
};

/// Deterministic in spec.seed. Videos are ordered class-major with
/// video_id equal to their index.
Corpus generate_corpus(const CorpusSpec& spec);

/// Binary layout: `DTGC v1` header line, spec, bases, videos, FNV-1a checksum.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

/// Column-wise mean of a frame matrix.
Vector mean_frame(const Matrix& frames);

}  // namespace dtg
