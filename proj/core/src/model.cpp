#include "dtg/model.hpp"

#include <cmath>
#include <cstring>

#include "dtg/binary_io.hpp"
#include "dtg/errors.hpp"
#include "dtg/rng.hpp"

namespace dtg {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<AffineLayout> stack_layouts(std::initializer_list<std::size_t> dims) {
  std::vector<AffineLayout> layers;
  std::size_t offset = 0;
  for (auto it = dims.begin(); std::next(it) != dims.end(); ++it) {
    AffineLayout l{*it, *std::next(it), offset};
    offset += l.size();
    layers.push_back(l);
  }
  return layers;
}

std::size_t total_size(const std::vector<AffineLayout>& layers) {
  return layers.empty() ? 0 : layers.back().offset + layers.back().size();
}

Vector affine_forward(const AffineLayout& l, std::span<const double> params,
                      std::span<const double> x) {
  Vector y(l.out);
  const double* w = params.data() + l.offset;
  const double* b = w + l.weight_count();
  for (std::size_t o = 0; o < l.out; ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < l.in; ++i) s += w[o * l.in + i] * x[i];
    y[o] = s;
  }
  return y;
}

// Accumulates weight/bias gradients and returns dL/dx.
Vector affine_backward(const AffineLayout& l, std::span<const double> params,
                       std::span<const double> x, std::span<const double> gy,
                       std::span<double> grad) {
  const double* w = params.data() + l.offset;
  double* gw = grad.data() + l.offset;
  double* gb = gw + l.weight_count();
  Vector gx(l.in, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = gy[o];
    gb[o] += g;
    for (std::size_t i = 0; i < l.in; ++i) {
      gw[o * l.in + i] += g * x[i];
      gx[i] += w[o * l.in + i] * g;
    }
  }
  return gx;
}

void init_uniform(const AffineLayout& l, std::span<double> params, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
  for (std::size_t i = 0; i < l.size(); ++i) {
    params[l.offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

void append_names(std::vector<std::string>& names, const std::string& prefix,
                  const AffineLayout& l) {
  for (std::size_t o = 0; o < l.out; ++o)
    for (std::size_t i = 0; i < l.in; ++i)
      names.push_back(prefix + ".w[" + std::to_string(o) + "," + std::to_string(i) + "]");
  for (std::size_t o = 0; o < l.out; ++o) names.push_back(prefix + ".b[" + std::to_string(o) + "]");
}

}  // namespace

// ---------------------------------------------------------------------------
// StudentEncoder

StudentEncoder::StudentEncoder(std::size_t frame_dim, std::size_t hidden, std::size_t embed_dim,
                               std::vector<double> params, bool normalize)
    : layers_(stack_layouts({frame_dim, hidden, hidden, embed_dim})),
      params_(std::move(params)),
      normalize_(normalize) {
  if (frame_dim == 0 || hidden == 0 || embed_dim == 0) {
    throw InvalidArgument("StudentEncoder: dimensions must be >= 1");
  }
  if (params_.size() != total_size(layers_)) {
    throw InvalidArgument("StudentEncoder: expected " + std::to_string(total_size(layers_)) +
                          " parameters, got " + std::to_string(params_.size()));
  }
  if (!all_finite(params_)) throw NumericError("StudentEncoder: non-finite parameter");
}

StudentEncoder StudentEncoder::build(std::size_t frame_dim, std::size_t hidden,
                                     std::size_t embed_dim, std::uint64_t seed, bool normalize) {
  if (frame_dim == 0 || hidden == 0 || embed_dim == 0) {
    throw InvalidArgument("StudentEncoder: dimensions must be >= 1");
  }
  const auto layers = stack_layouts({frame_dim, hidden, hidden, embed_dim});
  std::vector<double> params(total_size(layers));
  Rng rng = Rng::stream(seed, "student.init");
  for (const auto& l : layers) init_uniform(l, params, rng);
  return {frame_dim, hidden, embed_dim, std::move(params), normalize};
}

std::vector<std::string> StudentEncoder::parameter_names() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    append_names(names, "layer" + std::to_string(i), layers_[i]);
  }
  return names;
}

StudentActivations StudentEncoder::forward(const Matrix& frames) const {
  if (frames.cols() != frame_dim()) {
    throw InvalidArgument("StudentEncoder: frame width " + std::to_string(frames.cols()) +
                          " does not match encoder input " + std::to_string(frame_dim()));
  }
  StudentActivations acts;
  acts.pooled = mean_frame(frames);
  std::span<const double> x = acts.pooled;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    acts.pre.push_back(affine_forward(layers_[i], params_, x));
    Vector h = acts.pre.back();
    for (double& v : h) v = v > 0.0 ? v : 0.0;
    acts.post.push_back(std::move(h));
    x = acts.post.back();
  }
  acts.output = affine_forward(layers_.back(), params_, x);
  acts.feature = normalize_ ? l2_normalize(acts.output) : acts.output;
  return acts;
}

void StudentEncoder::backward(const StudentActivations& acts, std::span<const double> grad_feature,
                              std::span<double> grad) const {
  if (grad.size() != params_.size() || grad_feature.size() != embed_dim()) {
    throw InvalidArgument("StudentEncoder::backward: size mismatch");
  }
  Vector g = normalize_ ? l2_normalize_backward(acts.output, grad_feature)
                        : Vector(grad_feature.begin(), grad_feature.end());
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::span<const double> input = i == 0 ? std::span<const double>(acts.pooled)
                                                 : std::span<const double>(acts.post[i - 1]);
    g = affine_backward(layers_[i], params_, input, g, grad);
    if (i > 0) {
      const Vector& pre = acts.pre[i - 1];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(pre[j] > 0.0)) g[j] = 0.0;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ClassifierHead

ClassifierHead::ClassifierHead(std::size_t embed_dim, std::size_t num_classes,
                               std::vector<double> params)
    : layout_{embed_dim, num_classes, 0}, params_(std::move(params)) {
  if (embed_dim == 0 || num_classes == 0) throw InvalidArgument("ClassifierHead: empty dims");
  if (params_.size() != layout_.size()) throw InvalidArgument("ClassifierHead: parameter count");
  if (!all_finite(params_)) throw NumericError("ClassifierHead: non-finite parameter");
}

ClassifierHead ClassifierHead::build(std::size_t embed_dim, std::size_t num_classes,
                                     std::uint64_t seed) {
  AffineLayout layout{embed_dim, num_classes, 0};
  std::vector<double> params(layout.size());
  Rng rng = Rng::stream(seed, "head.init");
  init_uniform(layout, params, rng);
  return {embed_dim, num_classes, std::move(params)};
}

Vector ClassifierHead::logits(std::span<const double> feature) const {
  if (feature.size() != layout_.in) throw InvalidArgument("ClassifierHead: feature size mismatch");
  return affine_forward(layout_, params_, feature);
}

Vector ClassifierHead::backward(std::span<const double> feature,
                                std::span<const double> grad_logits,
                                std::span<double> grad) const {
  if (grad.size() != params_.size()) throw InvalidArgument("ClassifierHead::backward: size mismatch");
  return affine_backward(layout_, params_, feature, grad_logits, grad);
}

// ---------------------------------------------------------------------------
// Teachers

Teacher::Teacher(std::string name, double rho, Matrix blend, Matrix readout, bool normalize)
    : name_(std::move(name)),
      rho_(rho),
      blend_(std::move(blend)),
      readout_(std::move(readout)),
      normalize_(normalize) {
  if (blend_.rows() != blend_.cols() || readout_.cols() != blend_.rows()) {
    throw InvalidArgument("Teacher: inconsistent blend/readout shapes");
  }
}

Vector Teacher::embed(const Matrix& frames) const {
  if (frames.cols() != frame_dim()) {
    throw InvalidArgument("Teacher: frame width " + std::to_string(frames.cols()) +
                          " does not match " + std::to_string(frame_dim()));
  }
  const Vector feature = matvec(readout_, matvec(blend_, mean_frame(frames)));
  return normalize_ ? l2_normalize(feature) : feature;
}

std::vector<std::uint8_t> Teacher::parameter_bytes() const {
  io::ByteWriter w;
  w.f64(rho_);
  w.f64s(blend_.data());
  w.f64s(readout_.data());
  return w.take();
}

Teacher build_teacher(const Matrix& signal_basis, const Matrix& nuisance_basis, double rho,
                      std::size_t embed_dim, std::uint64_t seed, std::string name,
                      bool normalize) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("build_teacher: rho must lie in [0, 1]");
  if (embed_dim == 0) throw InvalidArgument("build_teacher: embed_dim must be >= 1");
  if (signal_basis.cols() != nuisance_basis.cols() && !signal_basis.empty() &&
      !nuisance_basis.empty()) {
    throw InvalidArgument("build_teacher: basis widths differ");
  }
  const std::size_t D = signal_basis.empty() ? nuisance_basis.cols() : signal_basis.cols();

  // blend = rho * SᵀS + (1 - rho) * NᵀN
  Matrix blend(D, D);
  auto add_projector = [&](const Matrix& basis, double weight) {
    for (std::size_t r = 0; r < basis.rows(); ++r) {
      const auto b = basis.row(r);
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) blend(i, j) += weight * b[i] * b[j];
    }
  };
  add_projector(signal_basis, rho);
  add_projector(nuisance_basis, 1.0 - rho);

  Matrix readout(embed_dim, D);
  Rng rng = Rng::stream(seed, "teacher.readout");
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  for (double& x : readout.data()) x = scale * rng.normal();

  if (name.empty()) name = "rho=" + std::to_string(rho);
  return {std::move(name), rho, std::move(blend), std::move(readout), normalize};
}

TeacherBank::TeacherBank(std::vector<Teacher> teachers) : teachers_(std::move(teachers)) {
  if (teachers_.empty()) throw InvalidArgument("TeacherBank: at least one teacher required");
  for (const auto& t : teachers_) {
    if (t.embed_dim() != teachers_.front().embed_dim()) {
      throw InvalidArgument("TeacherBank: teachers must share the output dimension");
    }
  }
}

const Teacher& TeacherBank::operator[](std::size_t k) const {
  if (k >= teachers_.size()) {
    throw InvalidArgument("TeacherBank: teacher index " + std::to_string(k) + " out of range");
  }
  return teachers_[k];
}

Vector embed_student(const StudentEncoder& enc, const Matrix& frames) { return enc.embed(frames); }

Vector embed_teacher(const TeacherBank& bank, std::size_t k, const Matrix& frames) {
  return bank[k].embed(frames);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.string(ckpt.metadata);
  w.u8(ckpt.student.normalizes() ? 1 : 0);
  w.u64(ckpt.student.frame_dim());
  w.u64(ckpt.student.hidden_dim());
  w.u64(ckpt.student.embed_dim());
  w.f64s(ckpt.student.params());
  w.u8(ckpt.head ? 1 : 0);
  if (ckpt.head) {
    w.u64(ckpt.head->embed_dim());
    w.u64(ckpt.head->num_classes());
    w.f64s(ckpt.head->params());
  }
  io::write_framed_file(path, "DTGM", kCheckpointVersion, w.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto payload = io::read_framed_file(path, "DTGM", kCheckpointVersion);
  io::ByteReader r(payload);
  Checkpoint ckpt;
  ckpt.metadata = r.string();
  const bool normalize = r.u8() != 0;
  const auto D = r.u64();
  const auto h = r.u64();
  const auto d = r.u64();
  const auto count = (D * h + h) + (h * h + h) + (h * d + d);
  try {
    ckpt.student = StudentEncoder(D, h, d, r.f64s(count), normalize);
    if (r.u8() != 0) {
      const auto in = r.u64();
      const auto classes = r.u64();
      ckpt.head = ClassifierHead(in, classes, r.f64s(in * classes + classes));
    }
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  r.expect_end();
  return ckpt;
}

}  // namespace dtg
