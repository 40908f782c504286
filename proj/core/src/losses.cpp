#include "dtg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dtg/errors.hpp"

namespace dtg {

namespace {

void require_unit(std::span<const double> v, const char* what) {
  if (std::abs(norm(v) - 1.0) > 1e-10) {
    throw InvalidArgument(std::string("info_nce: ") + what + " is not unit-norm");
  }
}

// Summing in sorted order makes the result independent of the negatives' order.
double sorted_sum(Vector terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

Vector normalized_weights(std::span<const double> raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  Vector w(raw.begin(), raw.end());
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

InfoNceResult info_nce(std::span<const double> anchor, std::span<const double> positive,
                       const Matrix& negatives, double tau, bool require_unit_norm) {
  if (!(tau > 0.0)) throw InvalidArgument("info_nce: tau must be positive");
  if (negatives.rows() == 0) throw InvalidArgument("info_nce: need at least one negative");
  const std::size_t d = anchor.size();
  if (positive.size() != d || negatives.cols() != d) {
    throw InvalidArgument("info_nce: dimension mismatch");
  }
  if (require_unit_norm) {
    require_unit(anchor, "anchor");
    require_unit(positive, "positive");
    for (std::size_t i = 0; i < negatives.rows(); ++i) require_unit(negatives.row(i), "negative");
  }

  const std::size_t K = negatives.rows();
  InfoNceResult r;
  r.similarities.resize(K + 1);
  r.similarities[0] = dot(anchor, positive);
  for (std::size_t i = 0; i < K; ++i) r.similarities[i + 1] = dot(anchor, negatives.row(i));

  Vector logits(K + 1);
  for (std::size_t j = 0; j <= K; ++j) logits[j] = r.similarities[j] / tau;
  r.probabilities = softmax(logits);

  const double top = *std::max_element(logits.begin(), logits.end());
  if (logits[0] == top) {
    // log(1 + Σ exp(l_j - l_0)) keeps full relative precision for tiny losses.
    Vector tail(K);
    for (std::size_t j = 1; j <= K; ++j) tail[j - 1] = std::exp(logits[j] - logits[0]);
    r.loss = std::log1p(sorted_sum(std::move(tail)));
  } else {
    Vector terms(K + 1);
    for (std::size_t j = 0; j <= K; ++j) terms[j] = std::exp(logits[j] - top);
    r.loss = top + std::log(sorted_sum(std::move(terms))) - logits[0];
  }

  // p_pos - 1 == -Σ_{j>=1} p_j, which avoids cancellation when p_pos ≈ 1.
  double neg_mass = 0.0;
  for (std::size_t j = 1; j <= K; ++j) neg_mass += r.probabilities[j];
  r.positive_coefficient = -neg_mass / tau;
  r.negative_coefficients.resize(K);
  r.grad_anchor.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) r.grad_anchor[c] = r.positive_coefficient * positive[c];
  for (std::size_t i = 0; i < K; ++i) {
    const double coeff = r.probabilities[i + 1] / tau;
    r.negative_coefficients[i] = coeff;
    const auto row = negatives.row(i);
    for (std::size_t c = 0; c < d; ++c) r.grad_anchor[c] += coeff * row[c];
  }
  return r;
}

std::string_view to_string(WeightScheme::Kind kind) {
  switch (kind) {
    case WeightScheme::Kind::Uniform: return "uniform";
    case WeightScheme::Kind::Offline: return "offline";
    case WeightScheme::Kind::Online1: return "online1";
    case WeightScheme::Kind::Online2: return "online2";
  }
  return "unknown";
}

WeightScheme::Kind parse_weight_scheme(std::string_view name) {
  using K = WeightScheme::Kind;
  for (K k : {K::Uniform, K::Offline, K::Online1, K::Online2}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown weight scheme '" + std::string(name) + "'");
}

Vector teacher_weights(const WeightScheme& scheme, const SimilarityLists& similarities) {
  const std::size_t n = similarities.size();
  if (n == 0) throw InvalidArgument("teacher_weights: empty teacher list");

  switch (scheme.kind) {
    case WeightScheme::Kind::Uniform:
      return Vector(n, 1.0 / static_cast<double>(n));

    case WeightScheme::Kind::Offline: {
      if (scheme.offline.size() != n) {
        throw InvalidArgument("teacher_weights: " + std::to_string(scheme.offline.size()) +
                              " offline weights for " + std::to_string(n) + " teachers");
      }
      double total = 0.0;
      for (double w : scheme.offline) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw InvalidArgument("teacher_weights: offline weights must be finite and nonnegative");
        }
        total += w;
      }
      if (!(total > 0.0)) throw InvalidArgument("teacher_weights: offline weights are all zero");
      return normalized_weights(scheme.offline);
    }

    case WeightScheme::Kind::Online1: {
      Vector positives(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (similarities[k].empty()) throw InvalidArgument("teacher_weights: missing similarities");
        positives[k] = similarities[k][0];
      }
      return softmax(positives);
    }

    case WeightScheme::Kind::Online2: {
      Vector scores(n);
      for (std::size_t k = 0; k < n; ++k) {
        const Vector& s = similarities[k];
        if (s.empty()) throw InvalidArgument("teacher_weights: missing similarities");
        const std::size_t K = s.size() - 1;
        const auto above = static_cast<std::size_t>(
            std::count_if(s.begin() + 1, s.end(), [&](double x) { return x > s[0]; }));
        const std::size_t rank = 1 + above;
        scores[k] = static_cast<double>(K + 2 - rank);
      }
      return normalized_weights(scores);
    }
  }
  throw InvalidArgument("teacher_weights: unknown scheme");
}

Vector teacher_weights(const WeightScheme& scheme, std::size_t num_teachers) {
  if (scheme.per_sample()) {
    throw InvalidArgument("teacher_weights: online schemes need the sample's similarities");
  }
  return teacher_weights(scheme, SimilarityLists(num_teachers));
}

Vector offline_weights_from_accuracies(std::span<const double> top1_percent) {
  return softmax(top1_percent);
}

std::string_view to_string(FusionLevel level) {
  return level == FusionLevel::Loss ? "loss" : "feature";
}

FusionLevel parse_fusion_level(std::string_view name) {
  if (name == "loss") return FusionLevel::Loss;
  if (name == "feature") return FusionLevel::Feature;
  throw InvalidArgument("unknown fusion level '" + std::string(name) + "'");
}

namespace {

void check_teacher_inputs(std::span<const double> anchor, const std::vector<Vector>& positives,
                          const std::vector<Matrix>& negatives) {
  if (positives.empty()) throw InvalidArgument("fused_contrastive: no teachers");
  if (positives.size() != negatives.size()) {
    throw InvalidArgument("fused_contrastive: " + std::to_string(positives.size()) +
                          " positives but " + std::to_string(negatives.size()) + " queues");
  }
  for (std::size_t k = 0; k < positives.size(); ++k) {
    if (positives[k].size() != anchor.size() || negatives[k].cols() != anchor.size()) {
      throw InvalidArgument("fused_contrastive: dimension mismatch for teacher " +
                            std::to_string(k));
    }
    if (negatives[k].rows() == 0) {
      throw ColdQueueError("fused_contrastive: teacher " + std::to_string(k) +
                           " has no negatives");
    }
  }
}

}  // namespace

ContrastiveOutcome fused_contrastive_with_weights(std::span<const double> anchor,
                                                  const std::vector<Vector>& positives,
                                                  const std::vector<Matrix>& negatives,
                                                  std::span<const double> weights,
                                                  const ContrastiveOptions& options) {
  check_teacher_inputs(anchor, positives, negatives);
  const std::size_t n = positives.size();
  if (weights.size() != n) throw InvalidArgument("fused_contrastive: weight count mismatch");

  ContrastiveOutcome out;
  out.weights.assign(weights.begin(), weights.end());
  out.per_teacher_loss.resize(n);
  out.positive_similarity.resize(n);

  std::vector<InfoNceResult> per_teacher;
  per_teacher.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    per_teacher.push_back(info_nce(anchor, positives[k], negatives[k], options.tau,
                                   options.normalized));
    out.per_teacher_loss[k] = per_teacher.back().loss;
    out.positive_similarity[k] = per_teacher.back().similarities[0];
  }

  if (options.fusion == FusionLevel::Loss) {
    out.grad_anchor.assign(anchor.size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      out.loss += weights[k] * per_teacher[k].loss;
      for (std::size_t c = 0; c < anchor.size(); ++c) {
        out.grad_anchor[c] += weights[k] * per_teacher[k].grad_anchor[c];
      }
    }
    return out;
  }

  const std::size_t K = negatives.front().rows();
  for (const Matrix& q : negatives) {
    if (q.rows() != K) throw InvalidArgument("fused_contrastive: feature fusion needs equal queue sizes");
  }
  const std::size_t d = anchor.size();
  auto fuse = [&](auto&& row_of) {
    Vector g(d, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto src = row_of(k);
      for (std::size_t c = 0; c < d; ++c) g[c] += weights[k] * src[c];
    }
    return options.normalized ? l2_normalize(g) : g;
  };
  const Vector fused_positive = fuse([&](std::size_t k) { return std::span<const double>(positives[k]); });
  Matrix fused_negatives(K, d);
  for (std::size_t i = 0; i < K; ++i) {
    const Vector row = fuse([&](std::size_t k) { return negatives[k].row(i); });
    std::copy(row.begin(), row.end(), fused_negatives.row(i).begin());
  }
  InfoNceResult fused = info_nce(anchor, fused_positive, fused_negatives, options.tau,
                                 options.normalized);
  out.loss = fused.loss;
  out.grad_anchor = std::move(fused.grad_anchor);
  return out;
}

ContrastiveOutcome fused_contrastive(std::span<const double> anchor,
                                     const std::vector<Vector>& positives,
                                     const std::vector<Matrix>& negatives,
                                     const ContrastiveOptions& options) {
  check_teacher_inputs(anchor, positives, negatives);
  Vector weights;
  if (options.scheme.per_sample()) {
    SimilarityLists sims(positives.size());
    for (std::size_t k = 0; k < positives.size(); ++k) {
      sims[k].reserve(negatives[k].rows() + 1);
      sims[k].push_back(dot(anchor, positives[k]));
      for (std::size_t i = 0; i < negatives[k].rows(); ++i) {
        sims[k].push_back(dot(anchor, negatives[k].row(i)));
      }
    }
    weights = teacher_weights(options.scheme, sims);
  } else {
    weights = teacher_weights(options.scheme, positives.size());
  }
  return fused_contrastive_with_weights(anchor, positives, negatives, weights, options);
}

CrossEntropyResult cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InvalidArgument("cross_entropy: label " + std::to_string(label) + " out of range for " +
                          std::to_string(logits.size()) + " classes");
  }
  CrossEntropyResult r;
  r.grad_logits = softmax(logits);
  r.loss = log_sum_exp(logits) - logits[label];
  r.grad_logits[label] -= 1.0;
  return r;
}

double joint_loss(double contrastive, double cross_entropy, double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw InvalidArgument("joint_loss: alpha and beta must be nonnegative");
  }
  return alpha * contrastive + beta * cross_entropy;
}

}  // namespace dtg
