#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dtg/corpus.hpp"
#include "dtg/numerics.hpp"
#include "dtg/rng.hpp"

namespace dtg {

/// How the two members of a positive pair are drawn from one video.
enum class PairMode {
  ImgImg,          // two distinct single frames
  ImgSeq,          // guidance is a single frame, anchor a T-frame sequence
  SeqSeqOverlap,   // two T-frame sequences over the same full-video segmentation
  SeqSeqDisjoint,  // anchor from the first half, guidance from the second half
};

std::string_view to_string(PairMode mode);
/// Accepts "img-img", "img-seq", "seq-seq-overlap", "seq-seq-disjoint".
PairMode parse_pair_mode(std::string_view name);

/// Half-open frame range [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const FrameRange&) const = default;
};

struct FrameSequence {
  std::vector<std::size_t> frame_indices;  // strictly increasing
  Matrix features;                         // one row per index
};

struct ContrastivePair {
  FrameSequence anchor_input;
  FrameSequence guidance_input;
  std::uint32_t video_id = 0;
  std::uint32_t label = 0;
};

/// Crop analog for feature frames: additive jitter plus a contiguous masked
/// block of floor(mask_frac * D) coordinates shared by all frames.
struct AugmentConfig {
  double jitter = 0.0;
  double mask_frac = 0.0;
};

/// Splits [0, L) into T ranges [floor(iL/T), floor((i+1)L/T)).
std::vector<FrameRange> segment_bounds(std::size_t num_frames, std::size_t num_segments);

/// Draws one frame uniformly from each of T segments of `window`, then augments.
FrameSequence sample_sequence(const Video& video, std::size_t num_segments, FrameRange window,
                              RandomSource& rng, const AugmentConfig& aug = {});

FrameSequence augment(FrameSequence seq, RandomSource& rng, const AugmentConfig& aug);

ContrastivePair make_pair(const Video& video, PairMode mode, std::size_t num_segments,
                          RandomSource& rng, const AugmentConfig& aug = {});

/// Deterministic evaluation clip: the middle frame of each of T segments, no augmentation.
FrameSequence center_clip(const Video& video, std::size_t num_segments);

}  // namespace dtg
