// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion 6   run one
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtg/binary_io.hpp"
#include "dtg/cli.hpp"
#include "dtg/errors.hpp"
#include "dtg/experiment.hpp"
#include "dtg/losses.hpp"
#include "dtg/queue.hpp"
#include "dtg/sampling.hpp"
#include "test_support.hpp"

namespace {

using namespace dtg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

fs::path g_config_dir = DTG_CONFIG_DIR;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExperimentConfig reference_config(std::uint64_t seed) {
  ExperimentConfig c = load_experiment_config(g_config_dir / "reference.json");
  override_seed(c, seed);
  c.train.threads = 1;
  return c;
}

// Loss-fusion and feature-fusion targets with the weights held fixed.
double fused_oracle(std::span<const double> a, const std::vector<Vector>& pos,
                    const std::vector<Matrix>& negs, const Vector& w, double tau, FusionLevel level) {
  if (level == FusionLevel::Loss) {
    double total = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) total += w[k] * info_nce(a, pos[k], negs[k], tau, false).loss;
    return total;
  }
  const std::size_t d = a.size(), K = negs.front().rows();
  auto fuse = [&](auto&& row_of) {
    Vector g(d, 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const auto src = row_of(k);
      for (std::size_t i = 0; i < d; ++i) g[i] += w[k] * src[i];
    }
    return l2_normalize(g);
  };
  const Vector fp = fuse([&](std::size_t k) { return std::span<const double>(pos[k]); });
  Matrix fn(K, d);
  for (std::size_t j = 0; j < K; ++j) {
    const Vector row = fuse([&](std::size_t k) { return negs[k].row(j); });
    std::copy(row.begin(), row.end(), fn.row(j).begin());
  }
  return info_nce(a, fp, fn, tau, false).loss;
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  const std::vector<std::size_t> dims{4, 8, 32}, sizes{1, 8, 64};
  const std::vector<double> taus{0.07, 0.1, 0.2, 0.5, 1.0};
  constexpr int kReps = 6;  // 3 x 3 grid x 6 = 54 instances per family
  std::ostringstream worst;
  bool ok = true;
  auto record = [&](const std::string& family, double err, int n) {
    worst << ' ' << family << '=' << fmt("%.1e", err) << "(n=" << n << ')';
    ok = ok && err <= 1e-5 && n >= 50;
  };

  {
    double err = 0.0;
    int n = 0;
    for (std::size_t d : dims)
      for (std::size_t K : sizes)
        for (int r = 0; r < kReps; ++r, ++n) {
          const double tau = taus[gen() % taus.size()];
          const Vector a = testing::random_unit(gen, d), pos = testing::random_unit(gen, d);
          const Matrix negs = testing::random_unit_rows(gen, K, d);
          const InfoNceResult res = info_nce(a, pos, negs, tau);
          auto f = [&](std::span<const double> x) { return info_nce(x, pos, negs, tau, false).loss; };
          err = std::max(err, finite_diff_check(f, a, res.grad_anchor).max_rel_error);
        }
    record("info_nce", err, n);
  }

  const std::vector<WeightScheme> schemes{WeightScheme::uniform(), WeightScheme::offline_weights({0.2, 0.5, 0.3, 0.9}),
                                          WeightScheme::online1(), WeightScheme::online2()};
  for (FusionLevel level : {FusionLevel::Loss, FusionLevel::Feature}) {
    for (const WeightScheme& base : schemes) {
      double err = 0.0;
      int n = 0;
      for (std::size_t d : dims)
        for (std::size_t K : sizes)
          for (int r = 0; r < kReps; ++r, ++n) {
            const std::size_t N = 2 + gen() % 3;
            WeightScheme scheme = base;
            if (scheme.kind == WeightScheme::Kind::Offline) scheme.offline.resize(N);
            std::vector<Vector> pos;
            std::vector<Matrix> negs;
            for (std::size_t k = 0; k < N; ++k) {
              pos.push_back(testing::random_unit(gen, d));
              negs.push_back(testing::random_unit_rows(gen, K, d));
            }
            const Vector a = testing::random_unit(gen, d);
            ContrastiveOptions opt;
            opt.tau = taus[gen() % taus.size()];
            opt.scheme = scheme;
            opt.fusion = level;
            const ContrastiveOutcome out = fused_contrastive(a, pos, negs, opt);
            auto f = [&](std::span<const double> x) {
              return fused_oracle(x, pos, negs, out.weights, opt.tau, level);
            };
            err = std::max(err, finite_diff_check(f, a, out.grad_anchor).max_rel_error);
          }
      record(std::string("fused/") + std::string(to_string(level)) + "/" + std::string(to_string(base.kind)),
             err, n);
    }
  }

  {
    double err = 0.0;
    int n = 0;
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int i = 0; i < 54; ++i, ++n) {
      Vector logits(2 + gen() % 19);
      for (double& x : logits) x = normal(gen);
      const std::size_t label = gen() % logits.size();
      const CrossEntropyResult r = cross_entropy(logits, label);
      auto f = [&](std::span<const double> x) { return cross_entropy(x, label).loss; };
      err = std::max(err, finite_diff_check(f, logits, r.grad_logits).max_rel_error);
    }
    record("cross_entropy", err, n);
  }

  // Joint objective and end-to-end student gradients through evaluate_batch.
  CorpusSpec spec;
  spec.num_classes = 4;
  spec.videos_per_class = 6;
  spec.frames_per_video = 12;
  spec.frame_dim = 8;
  spec.signal_dim = 4;
  spec.seed = 17;
  const Corpus corpus = generate_corpus(spec);
  double joint_err = 0.0, student_err = 0.0;
  int joint_n = 0, student_n = 0;
  for (std::size_t d : dims)
    for (std::size_t K : sizes)
      for (int r = 0; r < kReps; ++r) {
        const std::uint64_t seed = gen();
        const std::size_t N = 1 + seed % 2;
        std::vector<Teacher> teachers;
        for (std::size_t k = 0; k < N; ++k) {
          teachers.push_back(build_teacher(corpus.signal_basis, corpus.nuisance_basis, 0.3 + 0.3 * k, d, seed + k));
        }
        const TeacherBank bank(std::move(teachers));
        std::vector<Matrix> negs;
        for (std::size_t k = 0; k < N; ++k) negs.push_back(testing::random_unit_rows(gen, K, d));
        std::vector<const Video*> batch;
        for (int i = 0; i < 3; ++i) batch.push_back(&corpus.videos[gen() % corpus.videos.size()]);

        TrainConfig cfg;
        cfg.embed_dim = d;
        cfg.hidden_dim = 12;
        cfg.seed = seed;
        cfg.tau = taus[gen() % taus.size()];
        cfg.fusion = (r % 2 == 0) ? FusionLevel::Loss : FusionLevel::Feature;
        cfg.pair_mode = static_cast<PairMode>(r % 4);
        if (r % 3 == 0) cfg.weight_scheme = WeightScheme::offline_weights(std::vector<double>(N, 1.0 + r));
        cfg.alpha = 0.05 + 0.5 * std::uniform_real_distribution<double>()(gen);
        cfg.beta = 0.5 + std::uniform_real_distribution<double>()(gen);

        const StudentEncoder student = StudentEncoder::build(spec.frame_dim, cfg.hidden_dim, d, seed);
        const ClassifierHead head = ClassifierHead::build(d, spec.num_classes, seed + 1);

        const BatchOutcome ssl = evaluate_batch(cfg, student, nullptr, bank, batch, negs, r);
        auto fs_ssl = [&](std::span<const double> p) {
          const StudentEncoder s(spec.frame_dim, cfg.hidden_dim, d, std::vector<double>(p.begin(), p.end()));
          return evaluate_batch(cfg, s, nullptr, bank, batch, negs, r).contrastive_loss;
        };
        student_err = std::max(student_err, finite_diff_check(fs_ssl, student.params(), ssl.student_grad, 1e-6).max_rel_error);
        ++student_n;

        const BatchOutcome joint = evaluate_batch(cfg, student, &head, bank, batch, negs, r);
        auto objective = [&](const StudentEncoder& s, const ClassifierHead& h) {
          const BatchOutcome o = evaluate_batch(cfg, s, &h, bank, batch, negs, r);
          return joint_loss(o.contrastive_loss, o.ce_loss, cfg.alpha, cfg.beta);
        };
        auto fs_joint = [&](std::span<const double> p) {
          return objective(StudentEncoder(spec.frame_dim, cfg.hidden_dim, d, std::vector<double>(p.begin(), p.end())), head);
        };
        auto fh_joint = [&](std::span<const double> p) {
          return objective(student, ClassifierHead(d, spec.num_classes, std::vector<double>(p.begin(), p.end())));
        };
        joint_err = std::max({joint_err,
                              finite_diff_check(fs_joint, student.params(), joint.student_grad, 1e-6).max_rel_error,
                              finite_diff_check(fh_joint, head.params(), joint.head_grad).max_rel_error});
        ++joint_n;
      }
  record("joint", joint_err, joint_n);
  record("student", student_err, student_n);

  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, fmt("max rel error <= 1e-5 per family, runtime %.1f s (< 60 s);", secs) + worst.str()};
}

Outcome criterion_2() {
  double worst = 0.0;
  for (std::size_t K = 1; K <= 64; ++K) {
    Matrix negs(K, 4);
    Vector e(4, 0.0);
    e[0] = 1.0;
    for (std::size_t j = 0; j < K; ++j) negs(j, 0) = 1.0;
    worst = std::max(worst, std::abs(info_nce(e, e, negs, 0.07).loss - std::log(static_cast<double>(K + 1))));
  }
  // Unit vectors with prescribed cosines to e0.
  auto cosine = [](double s, std::size_t axis) {
    Vector v(6, 0.0);
    v[0] = s;
    v[axis] = std::sqrt(1.0 - s * s);
    return v;
  };
  Matrix one(1, 6);
  one.row(0)[1] = 1.0;
  const double l1 = info_nce(cosine(1.0, 1), cosine(1.0, 1), one, 1.0).loss;
  Matrix three(3, 6);
  for (std::size_t j = 0; j < 3; ++j) {
    const Vector v = cosine(std::vector<double>{0.1, -0.2, 0.0}[j], 2 + j);
    std::copy(v.begin(), v.end(), three.row(j).begin());
  }
  const double l2 = info_nce(cosine(1.0, 1), cosine(0.9, 1), three, 0.07).loss;
  // Oracles evaluated at 50 digits: ln(1 + e^-1) and the tau = 0.07 example.
  const double e1 = std::abs(l1 - 0.31326168751822283405);
  const double e2 = std::abs(l2 - 1.363723604490329796e-5);
  const bool ok = worst <= 1e-12 && e1 <= 1e-9 && e2 <= 1e-9;
  return {ok, fmt("ln(K+1) for K=1..64 max error %.1e (<= 1e-12); ln(1+e^-1) error %.1e, "
                  "tau=0.07 example %.6e error %.1e (<= 1e-9)",
                  worst, e1, l2, e2)};
}

Outcome criterion_3() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> sim(-1.0, 1.0), raw(0.0, 5.0);
  double worst_sum = 0.0;
  bool nonneg = true;
  int n = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t N = 1 + gen() % 6, K = 1 + gen() % 64;
    SimilarityLists sims(N, Vector(K + 1));
    for (auto& s : sims)
      for (double& x : s) x = sim(gen);
    std::vector<double> off(N);
    for (double& x : off) x = raw(gen);
    for (const WeightScheme& scheme : {WeightScheme::uniform(), WeightScheme::offline_weights(off),
                                       WeightScheme::online1(), WeightScheme::online2()}) {
      const Vector w = teacher_weights(scheme, sims);
      double sum = 0.0;
      for (double x : w) {
        nonneg = nonneg && x >= 0.0;
        sum += x;
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      ++n;
    }
  }
  const Vector published{0.067, 3.0e-6, 0.51, 0.43};
  const Vector w = teacher_weights(WeightScheme::offline_weights(published), 4);
  double renorm_err = 0.0;
  for (std::size_t k = 0; k < 4; ++k) renorm_err = std::max(renorm_err, std::abs(w[k] - published[k] / 1.007003));
  const Vector r = teacher_weights(WeightScheme::online2(),
                                   SimilarityLists{{0.9, 0.1, 0.2, 0.3, 0.4}, {0.5, 0.8, 0.7, 0.1, 0.2}});
  const double rank_err = std::max(std::abs(r[0] - 0.625), std::abs(r[1] - 0.375));
  const bool ok = nonneg && worst_sum <= 1e-12 && renorm_err <= 1e-12 && rank_err <= 1e-12;
  return {ok, fmt("%d weight vectors nonnegative=%s, max |sum-1| %.1e (<= 1e-12); offline (%.6f, %.3e, %.6f, %.6f) "
                  "error %.1e; online2 (%.3f, %.3f)",
                  n, nonneg ? "yes" : "no", worst_sum, w[0], w[1], w[2], w[3], renorm_err, r[0], r[1])};
}

Outcome criterion_4() {
  std::mt19937_64 gen(404);
  const std::vector<std::size_t> dims{4, 8, 32}, sizes{1, 8, 64};
  const std::vector<double> taus{0.07, 0.1, 0.2, 0.5, 1.0};
  int sign_ok = 0, decreased = 0, recon_ok = 0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t d = dims[gen() % 3], K = sizes[gen() % 3];
    const double tau = taus[gen() % taus.size()];
    const Vector a = testing::random_unit(gen, d), pos = testing::random_unit(gen, d);
    const Matrix negs = testing::random_unit_rows(gen, K, d);
    const InfoNceResult r = info_nce(a, pos, negs, tau);

    // -dL/da = -c⁺ g⁺ - Σ c_j g_j: attraction needs -c⁺ > 0, repulsion -c_j < 0.
    bool signs = -r.positive_coefficient > 0.0;
    for (double c : r.negative_coefficients) signs = signs && -c < 0.0;
    sign_ok += signs;

    double recon = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double g = r.positive_coefficient * pos[i];
      for (std::size_t j = 0; j < K; ++j) g += r.negative_coefficients[j] * negs(j, i);
      recon = std::max(recon, std::abs(g - r.grad_anchor[i]));
      scale = std::max(scale, std::abs(r.grad_anchor[i]));
    }
    recon_ok += recon <= 1e-12 * std::max(1.0, scale);

    Vector b = a;
    for (std::size_t i = 0; i < d; ++i) b[i] -= 1e-4 * r.grad_anchor[i];
    decreased += info_nce(b, pos, negs, tau, false).loss < r.loss;
  }
  const double frac = static_cast<double>(decreased) / kTrials;
  const bool ok = sign_ok == kTrials && recon_ok == kTrials && frac >= 0.999;
  return {ok, fmt("%d/%d instances with attraction on g_pos and repulsion on every negative; %d/%d decompositions "
                  "reconstruct dL/da; step 1e-4 decreased the loss in %.1f%% (>= 99.9%%)",
                  sign_ok, kTrials, recon_ok, kTrials, 100.0 * frac)};
}

Outcome criterion_5() {
  std::mt19937_64 gen(505);
  std::normal_distribution<double> normal;
  constexpr int kSequences = 10000;
  int matched = 0;
  long ops = 0;
  for (int s = 0; s < kSequences; ++s) {
    const std::size_t cap = 1 + gen() % 10, dim = 1 + gen() % 4;
    GuidanceQueue q(cap, dim);
    std::deque<Vector> model;
    bool same = true;
    auto unit = [&] { return testing::random_unit(gen, dim); };
    const int steps = 1 + static_cast<int>(gen() % 40);
    for (int step = 0; step < steps && same; ++step, ++ops) {
      const int op = static_cast<int>(gen() % 8);
      if (op < 4) {
        const Vector v = unit();
        q.enqueue(v);
        model.push_back(v);
      } else if (op < 7) {
        const std::size_t rows = gen() % (2 * cap + 2);
        Matrix m(rows, dim);
        for (std::size_t r = 0; r < rows; ++r) {
          const Vector v = unit();
          std::copy(v.begin(), v.end(), m.row(r).begin());
          model.push_back(v);
        }
        q.enqueue_batch(m);
      } else {
        // Invalid batch: one bad row must leave the queue untouched.
        Matrix m(2, dim);
        const Vector v = unit();
        std::copy(v.begin(), v.end(), m.row(0).begin());
        for (std::size_t i = 0; i < dim; ++i) m.row(1)[i] = 2.0 * v[i];
        bool threw = false;
        try {
          q.enqueue_batch(m);
        } catch (const InvalidArgument&) {
          threw = true;
        }
        same = same && threw;
      }
      while (model.size() > cap) model.pop_front();

      same = same && q.size() == model.size() && q.warm() == (model.size() == cap);
      for (std::size_t i = 0; same && i < model.size(); ++i) {
        const auto e = q.entry(i);
        same = std::equal(e.begin(), e.end(), model[i].begin(), model[i].end());
      }
      if (same && q.warm()) {
        const Matrix snap = q.negatives();
        for (std::size_t i = 0; i < cap; ++i) {
          same = same && std::equal(snap.row(i).begin(), snap.row(i).end(), model[i].begin());
        }
      } else if (same) {
        bool cold = false;
        try {
          (void)q.negatives();
        } catch (const ColdQueueError&) {
          cold = true;
        }
        same = cold;
      }
    }
    matched += same;
  }
  return {matched == kSequences,
          fmt("%d/%d random sequences (%ld operations) match the reference FIFO model exactly", matched, kSequences, ops)};
}

// Probe top1 of a student on the config's corpus, probe only.
double probe_top1(ExperimentConfig c, const Corpus& corpus, const StudentEncoder& student) {
  c.eval.knn = c.eval.overlap = c.eval.projection = false;
  c.eval.probe = true;
  return evaluate_representation(c, corpus, student).probe.top1;
}

Outcome criterion_6() {
  const auto t0 = Clock::now();
  double dtg = 0.0, rnd = 0.0;
  std::ostringstream per_seed;
  for (int s = 1; s <= kSeeds; ++s) {
    const ExperimentConfig c = reference_config(s);
    const Corpus corpus = obtain_corpus(c);
    const TeacherBank bank = build_bank(c, corpus);
    const PretrainResult r = pretrain(c.train, corpus.videos, bank);
    const double a = probe_top1(c, corpus, r.student);
    const double b = probe_top1(c, corpus, initial_joint_model(c.train, corpus.spec.frame_dim, corpus.spec.num_classes).student);
    per_seed << fmt(" %.3f/%.3f", a, b);
    dtg += a / kSeeds;
    rnd += b / kSeeds;
  }
  const double secs = seconds_since(t0);
  const double gain = 100.0 * (dtg - rnd);
  return {gain >= 10.0 && secs < 600.0,
          fmt("probe top1 pretrained %.3f vs random-init %.3f: +%.1f points (need >= 10), %.0f s; per seed:", dtg, rnd,
              gain, secs) + per_seed.str()};
}

Outcome criterion_7() {
  const auto t0 = Clock::now();
  const std::vector<double> rhos{0.9, 0.7, 0.3, 0.1};
  double uniform = 0.0, offline = 0.0;
  Vector online_loss(4, 0.0), online_feature(4, 0.0);

  // Mean over seeds of each epoch-averaged Online1 weight.
  auto mean_weights = [](const RunReport& rep) {
    Vector w(4, 0.0);
    std::size_t n = 0;
    for (const EpochRecord& e : rep.epochs) {
      if (e.updates == 0 || e.mean_weights.size() != 4) continue;
      for (std::size_t k = 0; k < 4; ++k) w[k] += e.mean_weights[k];
      ++n;
    }
    for (double& x : w) x /= static_cast<double>(std::max<std::size_t>(n, 1));
    return w;
  };

  for (int s = 1; s <= kSeeds; ++s) {
    ExperimentConfig c = reference_config(s);
    c.teachers.clear();
    for (std::size_t k = 0; k < rhos.size(); ++k) {
      c.teachers.push_back({"rho" + std::to_string(k), rhos[k], std::nullopt, std::nullopt});
    }
    const Corpus corpus = obtain_corpus(c);
    const TeacherBank bank = build_bank(c, corpus);

    // Offline weights: softmax of single-teacher probe accuracies in percent.
    std::vector<double> acc;
    for (std::size_t k = 0; k < bank.size(); ++k) {
      const PretrainResult r = pretrain(c.train, corpus.videos, TeacherBank({bank[k]}));
      acc.push_back(100.0 * probe_top1(c, corpus, r.student));
    }
    TrainConfig tc = c.train;
    tc.weight_scheme = WeightScheme::uniform();
    uniform += probe_top1(c, corpus, pretrain(tc, corpus.videos, bank).student) / kSeeds;
    tc.weight_scheme = WeightScheme::offline_weights(offline_weights_from_accuracies(acc));
    offline += probe_top1(c, corpus, pretrain(tc, corpus.videos, bank).student) / kSeeds;

    tc.weight_scheme = WeightScheme::online1();
    tc.fusion = FusionLevel::Loss;
    const Vector wl = mean_weights(pretrain(tc, corpus.videos, bank).report);
    tc.fusion = FusionLevel::Feature;
    const Vector wf = mean_weights(pretrain(tc, corpus.videos, bank).report);
    for (std::size_t k = 0; k < 4; ++k) {
      online_loss[k] += wl[k] / kSeeds;
      online_feature[k] += wf[k] / kSeeds;
    }
  }
  auto ordered = [](const Vector& w) { return w[0] > w[1] && w[1] > w[2] && w[2] > w[3]; };
  const bool offline_ok = offline >= uniform;
  const bool order_ok = ordered(online_loss);
  return {offline_ok && order_ok,
          fmt("offline %.3f vs uniform %.3f (%s); online1 mean weights by rho 0.9/0.7/0.3/0.1 at loss fusion "
              "%.4f %.4f %.4f %.4f (%s); feature fusion diagnostic %.4f %.4f %.4f %.4f (%s); %.0f s",
              offline, uniform, offline_ok ? "ok" : "not met", online_loss[0], online_loss[1], online_loss[2],
              online_loss[3], order_ok ? "ordered" : "not ordered", online_feature[0], online_feature[1],
              online_feature[2], online_feature[3], ordered(online_feature) ? "ordered" : "not ordered",
              seconds_since(t0))};
}

Outcome criterion_8() {
  const auto t0 = Clock::now();
  double overlap[2] = {0, 0}, top1[2] = {0, 0};
  for (int s = 1; s <= kSeeds; ++s) {
    ExperimentConfig c = reference_config(s);
    c.eval.probe = c.eval.knn = c.eval.projection = false;
    c.eval.overlap = true;
    const Corpus corpus = obtain_corpus(c);
    const TeacherBank bank = build_bank(c, corpus);
    const VideoSplit split = split_videos(corpus, c.eval.split_frac, split_seed(c));
    for (int arm = 0; arm < 2; ++arm) {
      TrainConfig tc = c.train;
      tc.alpha = arm == 0 ? 0.1 : 0.0;
      tc.beta = 1.0;
      const JointResult r = train_joint(tc, split.train, bank,
                                        initial_joint_model(tc, corpus.spec.frame_dim, corpus.spec.num_classes));
      const EvalSummary e = evaluate_representation(c, corpus, r.model.student, &r.model.head);
      overlap[arm] += *e.class_overlap / kSeeds;
      top1[arm] += *e.head_top1 / kSeeds;
    }
  }
  const bool overlap_ok = overlap[0] < overlap[1];
  const bool top1_ok = top1[0] >= top1[1] - 0.01;
  return {overlap_ok && top1_ok,
          fmt("held-out class overlap alpha=0.1 %.4f vs alpha=0 %.4f (need strictly lower: %s); top1 %.3f vs %.3f "
              "(need >= baseline - 0.01: %s); %.0f s",
              overlap[0], overlap[1], overlap_ok ? "ok" : "not met", top1[0], top1[1], top1_ok ? "ok" : "not met",
              seconds_since(t0))};
}

// Every file of a run directory except wall-clock timing.
std::vector<std::pair<std::string, std::string>> artifacts(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name == artifact::kTiming) continue;
    out.emplace_back(name, io::read_text_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion_9() {
  testing::TempDir tmp("acceptance_det");
  const std::string cfg = (g_config_dir / "reference.json").string();
  auto run_all = [&](const std::string& tag, const char* threads) {
    ::setenv("DTG_THREADS", threads, 1);
    const fs::path pre = tmp.path() / tag / "pretrain", joint = tmp.path() / tag / "joint";
    int rc = 0;
    rc |= run_cli({"pretrain", "--config", cfg, "--seed", "11", "--out", pre.string(), "--quiet"});
    rc |= run_cli({"probe", "--config", cfg, "--seed", "11", "--out", pre.string(), "--quiet"});
    rc |= run_cli({"train-joint", "--config", cfg, "--seed", "11", "--out", joint.string(), "--quiet"});
    rc |= run_cli({"probe", "--config", cfg, "--seed", "11", "--out", joint.string(), "--quiet"});
    ::unsetenv("DTG_THREADS");
    if (rc != 0) throw Error("cli run failed for " + tag);
    auto files = artifacts(pre);
    for (auto& f : artifacts(joint)) files.emplace_back("joint/" + f.first, std::move(f.second));
    return files;
  };
  const auto a = run_all("serial_a", "1");
  const auto b = run_all("serial_b", "1");
  const auto p = run_all("threads_4", "4");
  const bool repeat_ok = a == b;
  const bool threads_ok = a == p;
  const bool complete = a.size() >= 12;
  return {repeat_ok && threads_ok && complete,
          fmt("%zu artifacts (checkpoints, run reports, epoch logs, probe, overlap, projection); two serial runs "
              "byte-identical: %s; DTG_THREADS=4 identical to serial: %s",
              a.size(), repeat_ok ? "yes" : "no", threads_ok ? "yes" : "no")};
}

Outcome criterion_10() {
  const auto t0 = Clock::now();
  std::ostringstream table;
  bool all_ran = true;
  for (PairMode mode : {PairMode::ImgImg, PairMode::ImgSeq, PairMode::SeqSeqOverlap, PairMode::SeqSeqDisjoint}) {
    ExperimentConfig c = reference_config(1);
    c.train.pair_mode = mode;
    c.eval.overlap = c.eval.projection = false;
    try {
      const Corpus corpus = obtain_corpus(c);
      const PretrainResult r = pretrain(c.train, corpus.videos, build_bank(c, corpus));
      const EvalSummary e = evaluate_representation(c, corpus, r.student);
      const bool sane = e.probe.top1 >= 0.0 && e.probe.top1 <= 1.0 && e.knn_top1 && std::isfinite(*e.knn_top1);
      all_ran = all_ran && sane;
      table << ' ' << to_string(mode) << fmt(" probe %.3f knn %.3f;", e.probe.top1, *e.knn_top1);
    } catch (const std::exception& ex) {
      all_ran = false;
      table << ' ' << to_string(mode) << " failed: " << ex.what() << ';';
    }
  }

  std::mt19937_64 gen(1010);
  constexpr int kPairs = 10000;
  int disjoint = 0;
  for (int i = 0; i < kPairs; ++i) {
    const std::size_t T = 1 + gen() % 8;
    const std::size_t L = 2 * T + gen() % 64;
    Video v{Matrix(L, 3), 0, static_cast<std::uint32_t>(i)};
    Rng rng(gen());
    const ContrastivePair p = make_pair(v, PairMode::SeqSeqDisjoint, T, rng, AugmentConfig{0.1, 0.25});
    const std::set<std::size_t> anchor(p.anchor_input.frame_indices.begin(), p.anchor_input.frame_indices.end());
    bool ok = p.anchor_input.frame_indices.size() == T && p.guidance_input.frame_indices.size() == T;
    for (std::size_t f : p.guidance_input.frame_indices) ok = ok && !anchor.contains(f) && f < L;
    disjoint += ok;
  }
  return {all_ran && disjoint == kPairs,
          fmt("all four pair modes trained and probed (%.0f s):", seconds_since(t0)) + table.str() +
              fmt(" seq-seq-disjoint shared no frame index in %d/%d pairs", disjoint, kPairs)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "gradient correctness", criterion_1},
      {2, "closed-form loss values", criterion_2},
      {3, "weighting contract", criterion_3},
      {4, "two-force property", criterion_4},
      {5, "queue model-based test", criterion_5},
      {6, "self-supervised effectiveness", criterion_6},
      {7, "differentiated weighting", criterion_7},
      {8, "joint training", criterion_8},
      {9, "determinism", criterion_9},
      {10, "input-mode harness", criterion_10},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  std::string config_dir = g_config_dir.string();
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--config-dir", config_dir, "directory holding reference.json");
  CLI11_PARSE(app, argc, argv);
  g_config_dir = config_dir;

  bool all_pass = true;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d %s: %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
