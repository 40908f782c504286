#include "dtg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtg/errors.hpp"

namespace dtg {

std::string_view to_string(PairMode mode) {
  switch (mode) {
    case PairMode::ImgImg: return "img-img";
    case PairMode::ImgSeq: return "img-seq";
    case PairMode::SeqSeqOverlap: return "seq-seq-overlap";
    case PairMode::SeqSeqDisjoint: return "seq-seq-disjoint";
  }
  return "unknown";
}

PairMode parse_pair_mode(std::string_view name) {
  for (PairMode m : {PairMode::ImgImg, PairMode::ImgSeq, PairMode::SeqSeqOverlap,
                     PairMode::SeqSeqDisjoint}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown pair mode '" + std::string(name) + "'");
}

std::vector<FrameRange> segment_bounds(std::size_t num_frames, std::size_t num_segments) {
  if (num_segments == 0 || num_segments > num_frames) {
    throw InvalidArgument("segment_bounds: need 1 <= T <= L (T=" + std::to_string(num_segments) +
                          ", L=" + std::to_string(num_frames) + ")");
  }
  std::vector<FrameRange> out(num_segments);
  for (std::size_t i = 0; i < num_segments; ++i) {
    out[i] = {i * num_frames / num_segments, (i + 1) * num_frames / num_segments};
  }
  return out;
}

namespace {

FrameSequence gather(const Video& video, std::vector<std::size_t> indices) {
  FrameSequence seq;
  seq.features = Matrix(indices.size(), video.frames.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = video.frames.row(indices[i]);
    std::copy(src.begin(), src.end(), seq.features.row(i).begin());
  }
  seq.frame_indices = std::move(indices);
  return seq;
}

}  // namespace

FrameSequence sample_sequence(const Video& video, std::size_t num_segments, FrameRange window,
                              RandomSource& rng, const AugmentConfig& aug) {
  if (window.end > video.frames.rows() || window.begin >= window.end) {
    throw InvalidArgument("sample_sequence: window outside the video");
  }
  if (window.size() < num_segments || num_segments == 0) {
    throw InvalidArgument("sample_sequence: window of " + std::to_string(window.size()) +
                          " frames cannot hold " + std::to_string(num_segments) + " segments");
  }
  std::vector<std::size_t> indices;
  indices.reserve(num_segments);
  for (const FrameRange& seg : segment_bounds(window.size(), num_segments)) {
    indices.push_back(window.begin + seg.begin + uniform_index(rng, seg.size()));
  }
  return augment(gather(video, std::move(indices)), rng, aug);
}

FrameSequence augment(FrameSequence seq, RandomSource& rng, const AugmentConfig& aug) {
  if (!(aug.mask_frac >= 0.0 && aug.mask_frac < 1.0)) {
    throw InvalidArgument("augment: mask_frac must lie in [0, 1)");
  }
  const std::size_t dim = seq.features.cols();
  const auto masked = static_cast<std::size_t>(std::floor(aug.mask_frac * static_cast<double>(dim)));
  if (aug.jitter > 0.0) {
    for (double& x : seq.features.data()) x += aug.jitter * standard_normal(rng);
  }
  if (masked > 0) {
    const std::size_t start = uniform_index(rng, dim - masked + 1);
    for (std::size_t r = 0; r < seq.features.rows(); ++r) {
      auto row = seq.features.row(r);
      std::fill(row.begin() + static_cast<std::ptrdiff_t>(start),
                row.begin() + static_cast<std::ptrdiff_t>(start + masked), 0.0);
    }
  }
  return seq;
}

ContrastivePair make_pair(const Video& video, PairMode mode, std::size_t num_segments,
                          RandomSource& rng, const AugmentConfig& aug) {
  const std::size_t L = video.frames.rows();
  const FrameRange full{0, L};
  ContrastivePair pair;
  pair.video_id = video.video_id;
  pair.label = video.label;

  switch (mode) {
    case PairMode::ImgImg: {
      if (L < 2) throw InvalidArgument("make_pair(img-img): video needs at least 2 frames");
      const std::size_t first = uniform_index(rng, L);
      std::size_t second = uniform_index(rng, L - 1);
      if (second >= first) ++second;
      pair.anchor_input = augment(gather(video, {first}), rng, aug);
      pair.guidance_input = augment(gather(video, {second}), rng, aug);
      break;
    }
    case PairMode::ImgSeq: {
      if (L < num_segments) throw InvalidArgument("make_pair(img-seq): need L >= T");
      pair.anchor_input = sample_sequence(video, num_segments, full, rng, aug);
      pair.guidance_input = sample_sequence(video, 1, full, rng, aug);
      break;
    }
    case PairMode::SeqSeqOverlap: {
      if (L < num_segments) throw InvalidArgument("make_pair(seq-seq-overlap): need L >= T");
      pair.anchor_input = sample_sequence(video, num_segments, full, rng, aug);
      pair.guidance_input = sample_sequence(video, num_segments, full, rng, aug);
      break;
    }
    case PairMode::SeqSeqDisjoint: {
      if (L < 2 * num_segments) throw InvalidArgument("make_pair(seq-seq-disjoint): need L >= 2T");
      const std::size_t half = L / 2;
      pair.anchor_input = sample_sequence(video, num_segments, {0, half}, rng, aug);
      pair.guidance_input = sample_sequence(video, num_segments, {half, L}, rng, aug);
      break;
    }
  }
  return pair;
}

FrameSequence center_clip(const Video& video, std::size_t num_segments) {
  std::vector<std::size_t> indices;
  for (const FrameRange& seg : segment_bounds(video.frames.rows(), num_segments)) {
    indices.push_back(seg.begin + (seg.size() - 1) / 2);
  }
  return gather(video, std::move(indices));
}

}  // namespace dtg
