#include "dtg/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "dtg/binary_io.hpp"
#include "dtg/errors.hpp"
#include "dtg/rng.hpp"

namespace dtg {

namespace {

constexpr std::uint32_t kCorpusVersion = 1;

// Random orthonormal n x n matrix (rows) from Gaussian draws, modified
// Gram-Schmidt applied twice for orthogonality at ~1e-15.
Matrix random_orthonormal(std::size_t n, Rng& rng) {
  Matrix q(n, n);
  for (double& x : q.data()) x = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      auto ri = q.row(i);
      for (std::size_t j = 0; j < i; ++j) {
        const auto rj = q.row(j);
        const double p = dot(ri, rj);
        for (std::size_t c = 0; c < n; ++c) ri[c] -= p * rj[c];
      }
      const double nrm = norm(ri);
      for (double& x : ri) x /= nrm;
    }
  }
  return q;
}

Matrix take_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  Matrix out(end - begin, m.cols());
  for (std::size_t r = begin; r < end; ++r)
    std::copy(m.row(r).begin(), m.row(r).end(), out.row(r - begin).begin());
  return out;
}

// Random unit vector in the row space of `basis` (zero when the basis is empty).
Vector random_direction(const Matrix& basis, Rng& rng) {
  Vector coeff(basis.rows());
  for (double& c : coeff) c = rng.normal();
  if (basis.rows() == 0) return Vector(basis.cols(), 0.0);
  return l2_normalize(matvec_transposed(basis, coeff));
}

}  // namespace

void CorpusSpec::validate() const {
  if (num_classes == 0 || videos_per_class == 0 || frames_per_video == 0 || frame_dim == 0) {
    throw InvalidArgument("CorpusSpec: all counts must be >= 1");
  }
  if (signal_dim > frame_dim) {
    throw InvalidArgument("CorpusSpec: signal_dim must not exceed frame_dim");
  }
  if (!(video_spread >= 0.0) || !(frame_noise >= 0.0) || !(drift >= 0.0)) {
    throw InvalidArgument("CorpusSpec: noise scales must be nonnegative");
  }
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const std::size_t D = spec.frame_dim;
  const std::size_t Ds = spec.signal_dim;

  Corpus corpus;
  corpus.spec = spec;
  {
    Rng rng = Rng::stream(spec.seed, "corpus.bases");
    const Matrix q = random_orthonormal(D, rng);
    corpus.signal_basis = take_rows(q, 0, Ds);
    corpus.nuisance_basis = take_rows(q, Ds, D);
  }

  std::vector<Vector> prototypes(spec.num_classes);
  {
    Rng rng = Rng::stream(spec.seed, "corpus.prototypes");
    for (auto& mu : prototypes) {
      Vector coeff(Ds);
      for (double& c : coeff) c = rng.normal();
      mu = matvec_transposed(corpus.signal_basis, coeff);
    }
  }

  corpus.videos.reserve(spec.num_classes * spec.videos_per_class);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t v = 0; v < spec.videos_per_class; ++v) {
      const auto id = static_cast<std::uint32_t>(corpus.videos.size());
      Rng rng = Rng::stream(spec.seed, "corpus.video", {id});

      Vector latent = prototypes[c];
      for (double& x : latent) x += spec.video_spread * rng.normal();
      const Vector drift_dir = random_direction(corpus.nuisance_basis, rng);

      Video video{Matrix(spec.frames_per_video, D), static_cast<std::uint32_t>(c), id};
      for (std::size_t t = 0; t < spec.frames_per_video; ++t) {
        auto frame = video.frames.row(t);
        const double shift = spec.drift * static_cast<double>(t);
        for (std::size_t j = 0; j < D; ++j) {
          frame[j] = latent[j] + shift * drift_dir[j] + spec.frame_noise * rng.normal();
        }
      }
      corpus.videos.push_back(std::move(video));
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  const CorpusSpec& s = corpus.spec;
  io::ByteWriter w;
  w.u64(s.num_classes);
  w.u64(s.videos_per_class);
  w.u64(s.frames_per_video);
  w.u64(s.frame_dim);
  w.u64(s.signal_dim);
  w.f64(s.video_spread);
  w.f64(s.frame_noise);
  w.f64(s.drift);
  w.u64(s.seed);
  w.f64s(corpus.signal_basis.data());
  w.f64s(corpus.nuisance_basis.data());
  w.u64(corpus.videos.size());
  for (const Video& v : corpus.videos) {
    w.u32(v.label);
    w.u32(v.video_id);
    w.f64s(v.frames.data());
  }
  io::write_framed_file(path, "DTGC", kCorpusVersion, w.bytes());
}

Corpus load_corpus(const std::filesystem::path& path) {
  const auto payload = io::read_framed_file(path, "DTGC", kCorpusVersion);
  io::ByteReader r(payload);
  Corpus corpus;
  CorpusSpec& s = corpus.spec;
  s.num_classes = r.u64();
  s.videos_per_class = r.u64();
  s.frames_per_video = r.u64();
  s.frame_dim = r.u64();
  s.signal_dim = r.u64();
  s.video_spread = r.f64();
  s.frame_noise = r.f64();
  s.drift = r.f64();
  s.seed = r.u64();
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": invalid corpus spec: " + e.what());
  }
  const std::size_t D = s.frame_dim;
  corpus.signal_basis = Matrix(s.signal_dim, D, r.f64s(s.signal_dim * D));
  corpus.nuisance_basis = Matrix(D - s.signal_dim, D, r.f64s((D - s.signal_dim) * D));
  const auto count = r.u64();
  if (count != s.num_classes * s.videos_per_class) {
    throw FormatError(path.string() + ": video count does not match spec");
  }
  corpus.videos.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Video v;
    v.label = r.u32();
    v.video_id = r.u32();
    if (v.label >= s.num_classes) throw FormatError(path.string() + ": label out of range");
    v.frames = Matrix(s.frames_per_video, D, r.f64s(s.frames_per_video * D));
    corpus.videos.push_back(std::move(v));
  }
  r.expect_end();
  return corpus;
}

Vector mean_frame(const Matrix& frames) {
  if (frames.rows() == 0) throw InvalidArgument("mean_frame: no frames");
  // Each coordinate is summed in sorted order, which makes the pool exactly
  // invariant to frame order.
  Vector out(frames.cols());
  std::vector<double> column(frames.rows());
  for (std::size_t c = 0; c < frames.cols(); ++c) {
    for (std::size_t r = 0; r < frames.rows(); ++r) column[r] = frames(r, c);
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double x : column) s += x;
    out[c] = s / static_cast<double>(frames.rows());
  }
  return out;
}

}  // namespace dtg
