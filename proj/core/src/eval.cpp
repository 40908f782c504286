#include "dtg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "dtg/errors.hpp"
#include "dtg/losses.hpp"
#include "dtg/rng.hpp"
#include "dtg/sampling.hpp"

namespace dtg {

namespace {

template <typename Encoder>
Matrix embed_all(const Encoder& enc, std::span<const Video> videos, std::size_t num_segments) {
  if (videos.empty()) return {};
  std::vector<Vector> rows;
  rows.reserve(videos.size());
  for (const Video& v : videos) rows.push_back(enc.embed(center_clip(v, num_segments).features));
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

std::size_t class_count(std::span<const std::uint32_t> labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void check_rows(const Matrix& features, std::span<const std::uint32_t> labels, const char* what) {
  if (features.rows() != labels.size()) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(features.rows()) +
                          " feature rows but " + std::to_string(labels.size()) + " labels");
  }
  if (!all_finite(features.data())) throw NumericError(std::string(what) + ": non-finite feature");
}

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Symmetric eigen-decomposition of the covariance of `rows` (sorted by
// decreasing eigenvalue) together with the mean.
struct Covariance {
  Vector mean;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // columns
};

Covariance covariance_eigen(const Matrix& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  const double n = static_cast<double>(rows.size());
  Covariance c;
  c.mean.assign(d, 0.0);
  for (std::size_t r : rows)
    for (std::size_t j = 0; j < d; ++j) c.mean[j] += x(r, j);
  for (double& m : c.mean) m /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t r : rows) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) v[static_cast<Eigen::Index>(j)] = x(r, j) - c.mean[j];
    cov.noalias() += v * v.transpose();
  }
  cov /= n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigen returns ascending order.
  c.eigenvalues = solver.eigenvalues().reverse();
  c.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return c;
}

}  // namespace

Matrix embed_videos(const StudentEncoder& student, std::span<const Video> videos,
                    std::size_t num_segments) {
  return embed_all(student, videos, num_segments);
}

Matrix embed_videos(const Teacher& teacher, std::span<const Video> videos,
                    std::size_t num_segments) {
  return embed_all(teacher, videos, num_segments);
}

std::vector<std::uint32_t> labels_of(std::span<const Video> videos) {
  std::vector<std::uint32_t> labels;
  labels.reserve(videos.size());
  for (const Video& v : videos) labels.push_back(v.label);
  return labels;
}

Split stratified_split(std::span<const std::uint32_t> labels, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw InvalidArgument("stratified_split: train fraction must lie in (0, 1)");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split split;
  for (auto& [label, idx] : by_class) {
    Rng rng = Rng::stream(seed, "split", {label});
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    const auto n_train = static_cast<std::size_t>(std::lround(train_frac * static_cast<double>(idx.size())));
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ProbeResult linear_probe(const Matrix& features, std::span<const std::uint32_t> labels,
                         const ProbeConfig& config) {
  check_rows(features, labels, "linear_probe");
  const std::size_t C = class_count(labels);
  if (features.rows() < C) throw InvalidArgument("linear_probe: fewer samples than classes");
  if (config.epochs == 0 || !(config.lr > 0.0)) throw InvalidArgument("linear_probe: bad probe config");

  const Split split = stratified_split(labels, config.split_frac, config.seed);
  std::vector<bool> seen(C, false);
  for (std::size_t i : split.train) seen[labels[i]] = true;
  for (std::size_t c = 0; c < C; ++c) {
    if (!seen[c]) {
      throw InvalidArgument("linear_probe: class " + std::to_string(c) + " is absent from the train split");
    }
  }

  // Whitening from train statistics.
  const Covariance cov = covariance_eigen(features, split.train);
  const double top = std::max(cov.eigenvalues.size() ? cov.eigenvalues[0] : 0.0, 0.0);
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(cov.eigenvalues.size()) &&
         cov.eigenvalues[static_cast<Eigen::Index>(rank)] > 1e-10 * top && top > 0.0) {
    ++rank;
  }
  const std::size_t d = features.cols();
  auto whiten = [&](std::size_t row) {
    Vector z(rank, 0.0);
    for (std::size_t r = 0; r < rank; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        s += cov.eigenvectors(static_cast<Eigen::Index>(j), ri) * (features(row, j) - cov.mean[j]);
      }
      z[r] = s / std::sqrt(cov.eigenvalues[ri]);
    }
    return z;
  };
  std::vector<Vector> train_z, test_z;
  for (std::size_t i : split.train) train_z.push_back(whiten(i));
  for (std::size_t i : split.test) test_z.push_back(whiten(i));

  // Affine softmax classifier, zero-initialized.
  Matrix w(C, rank, 0.0);
  Vector b(C, 0.0);
  auto logits_of = [&](const Vector& z) {
    Vector l(b);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t r = 0; r < rank; ++r) l[c] += w(c, r) * z[r];
    return l;
  };
  std::vector<std::size_t> order(train_z.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(config.seed, "probe.order", {epoch});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t idx : order) {
      const Vector& z = train_z[idx];
      const CrossEntropyResult ce = cross_entropy(logits_of(z), labels[split.train[idx]]);
      for (std::size_t c = 0; c < C; ++c) {
        const double g = config.lr * ce.grad_logits[c];
        b[c] -= g;
        for (std::size_t r = 0; r < rank; ++r) w(c, r) -= g * z[r];
      }
    }
  }

  ProbeResult result;
  result.split_seed = config.seed;
  result.train_size = split.train.size();
  result.test_size = split.test.size();
  result.per_class_accuracy.assign(C, 0.0);
  result.per_class_count.assign(C, 0);
  std::vector<std::size_t> correct(C, 0);
  std::size_t total_correct = 0;
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    const Vector l = logits_of(test_z[t]);
    const auto pred = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    const std::uint32_t truth = labels[split.test[t]];
    ++result.per_class_count[truth];
    if (pred == truth) {
      ++correct[truth];
      ++total_correct;
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (result.per_class_count[c] > 0) {
      result.per_class_accuracy[c] =
          static_cast<double>(correct[c]) / static_cast<double>(result.per_class_count[c]);
    }
  }
  result.top1 = split.test.empty() ? 0.0
                                   : static_cast<double>(total_correct) /
                                         static_cast<double>(split.test.size());
  return result;
}

double knn_top1(const Matrix& features, std::span<const std::uint32_t> labels, std::size_t k) {
  check_rows(features, labels, "knn_top1");
  const std::size_t M = features.rows();
  if (k == 0 || k >= M) throw InvalidArgument("knn_top1: need 1 <= k < number of samples");
  std::vector<Vector> unit;
  unit.reserve(M);
  for (std::size_t i = 0; i < M; ++i) unit.push_back(l2_normalize(features.row(i)));

  const std::size_t C = class_count(labels);
  std::size_t correct = 0;
  std::vector<std::pair<double, std::size_t>> sims;
  std::vector<std::size_t> votes(C);
  for (std::size_t i = 0; i < M; ++i) {
    sims.clear();
    for (std::size_t j = 0; j < M; ++j) {
      if (j != i) sims.emplace_back(dot(unit[i], unit[j]), j);
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t n = 0; n < k; ++n) ++votes[labels[sims[n].second]];
    const auto pred = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    if (pred == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(M);
}

double class_overlap(const Matrix& features, std::span<const std::uint32_t> labels) {
  check_rows(features, labels, "class_overlap");
  std::map<std::uint32_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  if (counts.size() < 2) throw InvalidArgument("class_overlap: need at least two classes");
  for (const auto& [label, n] : counts) {
    if (n < 2) throw InvalidArgument("class_overlap: class " + std::to_string(label) + " has fewer than two points");
  }
  const std::size_t M = features.rows();
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = i + 1; j < M; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < features.cols(); ++c) {
        const double diff = features(i, c) - features(j, c);
        sq += diff * diff;
      }
      const double dist = std::sqrt(sq);
      if (labels[i] == labels[j]) {
        intra += dist;
        ++n_intra;
      } else {
        inter += dist;
        ++n_inter;
      }
    }
  }
  const double mean_inter = inter / static_cast<double>(n_inter);
  if (!(mean_inter > 0.0)) throw DegenerateInput("class_overlap: all points are identical");
  return (intra / static_cast<double>(n_intra)) / mean_inter;
}

Projection project_2d(const Matrix& features) {
  const std::size_t M = features.rows();
  const std::size_t d = features.cols();
  if (M < 2) throw InvalidArgument("project_2d: need at least two points");
  if (!all_finite(features.data())) throw NumericError("project_2d: non-finite feature");

  std::vector<std::size_t> all(M);
  std::iota(all.begin(), all.end(), 0);
  const Covariance cov = covariance_eigen(features, all);
  if (!(cov.eigenvalues.size() > 0 && cov.eigenvalues[0] > 0.0)) {
    throw DegenerateInput("project_2d: data has rank 0");
  }

  Projection p;
  p.components = Matrix(2, d);
  p.variances.assign(2, 0.0);
  for (std::size_t c = 0; c < 2 && c < d; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    std::size_t arg = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(cov.eigenvectors(static_cast<Eigen::Index>(j), ci)) >
          std::abs(cov.eigenvectors(static_cast<Eigen::Index>(arg), ci))) {
        arg = j;
      }
    }
    const double sign = cov.eigenvectors(static_cast<Eigen::Index>(arg), ci) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      p.components(c, j) = sign * cov.eigenvectors(static_cast<Eigen::Index>(j), ci);
    }
    p.variances[c] = std::max(0.0, cov.eigenvalues[ci]);
  }

  p.coords = Matrix(M, 2);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += p.components(c, j) * (features(i, j) - cov.mean[j]);
      p.coords(i, c) = s;
    }
  }
  return p;
}

}  // namespace dtg
