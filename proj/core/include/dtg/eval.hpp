#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dtg/corpus.hpp"
#include "dtg/model.hpp"
#include "dtg/numerics.hpp"

namespace dtg {

/// Features of every video's deterministic center clip (one row per video).
Matrix embed_videos(const StudentEncoder& student, std::span<const Video> videos,
                    std::size_t num_segments);
Matrix embed_videos(const Teacher& teacher, std::span<const Video> videos,
                    std::size_t num_segments);

std::vector<std::uint32_t> labels_of(std::span<const Video> videos);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle, first round(train_frac · n_c) samples of each class go to train.
Split stratified_split(std::span<const std::uint32_t> labels, double train_frac, std::uint64_t seed);

struct ProbeConfig {
  double split_frac = 0.8;
  std::size_t epochs = 100;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double top1 = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_count;  // held-out samples per class
  std::uint64_t split_seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Linear probe on frozen features. Features are whitened with train-split
/// statistics (directions with variance below 1e-10 of the largest are
/// dropped), then an affine softmax classifier starting from zero is trained
/// with per-sample SGD. Reports held-out top-1.
ProbeResult linear_probe(const Matrix& features, std::span<const std::uint32_t> labels,
                         const ProbeConfig& config);

/// Leave-one-out k-NN accuracy under cosine similarity. Neighbors with equal
/// similarity are taken in index order; vote ties go to the smallest class id.
double knn_top1(const Matrix& features, std::span<const std::uint32_t> labels, std::size_t k);

/// Mean intra-class pairwise Euclidean distance divided by mean inter-class
/// pairwise distance. Smaller means better separated classes.
double class_overlap(const Matrix& features, std::span<const std::uint32_t> labels);

struct Projection {
  Matrix coords;            // M x 2
  Vector variances;         // variance along each retained component, non-increasing
  Matrix components;        // 2 x d, unit rows
};

/// Projection onto the top-2 principal components. Each component's
/// largest-magnitude loading is positive.
Projection project_2d(const Matrix& features);

}  // namespace dtg
