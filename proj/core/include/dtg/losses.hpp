#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dtg/numerics.hpp"

namespace dtg {

struct InfoNceResult {
  double loss = 0.0;
  Vector grad_anchor;          // dL/da
  Vector probabilities;        // softmax over [positive, negatives...]
  Vector similarities;         // raw dot products, positive first
  double positive_coefficient = 0.0;  // (p_pos - 1) / tau, coefficient of g_pos in dL/da
  Vector negative_coefficients;       // p_j / tau, coefficient of each negative in dL/da
};

/// Temperature-scaled InfoNCE of one anchor against its positive guidance
/// feature and K negatives (rows of `negatives`):
///
///   L = -log( exp(a·g⁺/τ) / Σ_{j=0..K} exp(a·g_j/τ) ),   dL/da = (Σ_j p_j g_j - g⁺) / τ
///
/// With `require_unit_norm` all inputs must have norm 1 within 1e-10.
InfoNceResult info_nce(std::span<const double> anchor, std::span<const double> positive,
                       const Matrix& negatives, double tau, bool require_unit_norm = true);

struct WeightScheme {
  enum class Kind { Uniform, Offline, Online1, Online2 };

  Kind kind = Kind::Uniform;
  std::vector<double> offline;  // raw offline weights, used when kind == Offline

  static WeightScheme uniform() { return {Kind::Uniform, {}}; }
  static WeightScheme offline_weights(std::vector<double> w) { return {Kind::Offline, std::move(w)}; }
  static WeightScheme online1() { return {Kind::Online1, {}}; }
  static WeightScheme online2() { return {Kind::Online2, {}}; }

  /// True when weights can differ between samples.
  bool per_sample() const noexcept { return kind == Kind::Online1 || kind == Kind::Online2; }
};

std::string_view to_string(WeightScheme::Kind kind);
/// Accepts "uniform", "offline", "online1", "online2".
WeightScheme::Kind parse_weight_scheme(std::string_view name);

/// Per-teacher similarity lists for one sample: entry k holds teacher k's
/// positive similarity followed by its K negative similarities.
using SimilarityLists = std::vector<Vector>;

/// Teacher weights for one sample; always nonnegative and summing to 1.
///
/// - Uniform: 1/N.
/// - Offline: the supplied weights divided by their sum.
/// - Online1: softmax of the positive similarities (unit temperature).
/// - Online2: rank r_k of the positive among teacher k's K+1 similarities
///   (1 = largest; ties go to the positive), score K+2-r_k, normalized.
Vector teacher_weights(const WeightScheme& scheme, const SimilarityLists& similarities);
/// Convenience overload for Uniform/Offline, which need no similarities.
Vector teacher_weights(const WeightScheme& scheme, std::size_t num_teachers);

/// Offline weights from single-teacher top-1 accuracies given in percent:
/// the softmax of the accuracy values.
Vector offline_weights_from_accuracies(std::span<const double> top1_percent);

enum class FusionLevel { Loss, Feature };
std::string_view to_string(FusionLevel level);
/// Accepts "loss", "feature".
FusionLevel parse_fusion_level(std::string_view name);

struct ContrastiveOptions {
  double tau = 0.07;
  WeightScheme scheme = WeightScheme::uniform();
  FusionLevel fusion = FusionLevel::Loss;
  bool normalized = true;
};

struct ContrastiveOutcome {
  double loss = 0.0;
  Vector per_teacher_loss;
  Vector weights;
  Vector positive_similarity;
  Vector grad_anchor;
};

/// Multi-teacher contrastive loss for one anchor.
///
/// Loss fusion: L = Σ_k w_k · InfoNCE(a, g⁺_k, Q_k). Feature fusion: one
/// InfoNCE against g̃ = normalize(Σ_k w_k g⁺_k) with negatives fused row-wise
/// the same way across the (lockstep) queues. Weights are computed from the
/// current similarities and treated as constants for the gradient.
ContrastiveOutcome fused_contrastive(std::span<const double> anchor,
                                     const std::vector<Vector>& positives,
                                     const std::vector<Matrix>& negatives,
                                     const ContrastiveOptions& options);

/// The same loss with caller-supplied weights (no scheme evaluation).
ContrastiveOutcome fused_contrastive_with_weights(std::span<const double> anchor,
                                                  const std::vector<Vector>& positives,
                                                  const std::vector<Matrix>& negatives,
                                                  std::span<const double> weights,
                                                  const ContrastiveOptions& options);

struct CrossEntropyResult {
  double loss = 0.0;
  Vector grad_logits;
};

/// -log softmax(logits)[label]; gradient softmax - one_hot(label).
CrossEntropyResult cross_entropy(std::span<const double> logits, std::size_t label);

/// alpha · L_ct + beta · L_ce.
double joint_loss(double contrastive, double cross_entropy, double alpha, double beta);

}  // namespace dtg
