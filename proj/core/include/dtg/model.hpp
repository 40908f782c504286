#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtg/corpus.hpp"
#include "dtg/numerics.hpp"

namespace dtg {

/// Dense layer view into a flat parameter vector: weights (out x in,
/// row-major) followed by the bias.
struct AffineLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weight_count() const noexcept { return in * out; }
  std::size_t size() const noexcept { return in * out + out; }
  bool operator==(const AffineLayout&) const = default;
};

/// Intermediate values of one student forward pass, kept for backward.
struct StudentActivations {
  Vector pooled;
  std::vector<Vector> pre;   // pre-activation of each layer
  std::vector<Vector> post;  // post-ReLU hidden activations
  Vector output;             // last affine output (before normalization)
  Vector feature;            // anchor feature
};

/// Trainable encoder: mean-pool over frames, two affine+ReLU layers, an
/// affine projection to d, then optional L2 normalization.
class StudentEncoder {
 public:
  StudentEncoder() = default;
  StudentEncoder(std::size_t frame_dim, std::size_t hidden, std::size_t embed_dim,
                 std::vector<double> params, bool normalize = true);

  /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static StudentEncoder build(std::size_t frame_dim, std::size_t hidden, std::size_t embed_dim,
                              std::uint64_t seed, bool normalize = true);

  std::size_t frame_dim() const noexcept { return layers_.front().in; }
  std::size_t hidden_dim() const noexcept { return layers_.front().out; }
  std::size_t embed_dim() const noexcept { return layers_.back().out; }
  bool normalizes() const noexcept { return normalize_; }
  const std::vector<AffineLayout>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }
  std::vector<std::string> parameter_names() const;

  StudentActivations forward(const Matrix& frames) const;
  Vector embed(const Matrix& frames) const { return forward(frames).feature; }

  /// Accumulates dL/dθ into `grad` (size parameter_count()) given dL/d(feature).
  void backward(const StudentActivations& acts, std::span<const double> grad_feature,
                std::span<double> grad) const;

  bool operator==(const StudentEncoder&) const = default;

 private:
  std::vector<AffineLayout> layers_;
  std::vector<double> params_;
  bool normalize_ = true;
};

/// Single affine layer from the anchor feature to class logits.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(std::size_t embed_dim, std::size_t num_classes, std::vector<double> params);
  static ClassifierHead build(std::size_t embed_dim, std::size_t num_classes, std::uint64_t seed);

  std::size_t embed_dim() const noexcept { return layout_.in; }
  std::size_t num_classes() const noexcept { return layout_.out; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  Vector logits(std::span<const double> feature) const;
  /// Accumulates dL/dθ into `grad` and returns dL/d(feature).
  Vector backward(std::span<const double> feature, std::span<const double> grad_logits,
                  std::span<double> grad) const;

  bool operator==(const ClassifierHead&) const = default;

 private:
  AffineLayout layout_;
  std::vector<double> params_;
};

/// Frozen guidance encoder. Reads the mean frame through a blend of the
/// corpus signal projection (weight rho) and nuisance projection (weight
/// 1 - rho), then a fixed random linear read-out to d and normalization.
class Teacher {
 public:
  Teacher(std::string name, double rho, Matrix blend, Matrix readout, bool normalize = true);

  const std::string& name() const noexcept { return name_; }
  double rho() const noexcept { return rho_; }
  std::size_t embed_dim() const noexcept { return readout_.rows(); }
  std::size_t frame_dim() const noexcept { return readout_.cols(); }

  Vector embed(const Matrix& frames) const;
  /// Raw bytes of every frozen parameter, for immutability checks.
  std::vector<std::uint8_t> parameter_bytes() const;

 private:
  std::string name_;
  double rho_;
  Matrix blend_;    // D x D
  Matrix readout_;  // d x D
  bool normalize_;
};

Teacher build_teacher(const Matrix& signal_basis, const Matrix& nuisance_basis, double rho,
                      std::size_t embed_dim, std::uint64_t seed, std::string name = {},
                      bool normalize = true);

class TeacherBank {
 public:
  explicit TeacherBank(std::vector<Teacher> teachers);

  std::size_t size() const noexcept { return teachers_.size(); }
  std::size_t embed_dim() const noexcept { return teachers_.front().embed_dim(); }
  const Teacher& operator[](std::size_t k) const;
  const std::vector<Teacher>& teachers() const noexcept { return teachers_; }

 private:
  std::vector<Teacher> teachers_;
};

Vector embed_student(const StudentEncoder& enc, const Matrix& frames);
Vector embed_teacher(const TeacherBank& bank, std::size_t k, const Matrix& frames);

struct Checkpoint {
  StudentEncoder student;
  std::optional<ClassifierHead> head;
  std::string metadata;  // JSON text describing the run
};

/// `DTGM v1` header line, metadata, layer dims, row-major weights, checksum.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dtg
