#include "dtg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtg/errors.hpp"
#include "dtg/parallel.hpp"

namespace dtg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate(std::size_t num_videos, std::size_t num_teachers) const {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (!(lr0 > 0.0)) fail("lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be nonnegative");
  if (!(decay > 0.0)) fail("decay must be positive");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (i > 0 && milestones[i] <= milestones[i - 1]) fail("milestones must be strictly increasing");
    if (epochs > 0 && milestones[i] >= epochs) fail("milestones must be < epochs");
  }
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (queue_size == 0) fail("queue_size must be >= 1");
  if (queue_size >= num_videos) {
    fail("queue_size (" + std::to_string(queue_size) + ") must be smaller than the number of " +
         "training videos (" + std::to_string(num_videos) + "); the queues could never warm up");
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0)) fail("alpha and beta must be nonnegative");
  if (num_segments == 0) fail("num_segments must be >= 1");
  if (!(augment.jitter >= 0.0)) fail("augment jitter must be nonnegative");
  if (!(augment.mask_frac >= 0.0 && augment.mask_frac < 1.0)) fail("mask_frac must lie in [0, 1)");
  if (embed_dim == 0 || hidden_dim == 0) fail("embed_dim and hidden_dim must be >= 1");
  if (num_teachers == 0) fail("at least one teacher is required");
  if (weight_scheme.kind == WeightScheme::Kind::Offline) {
    if (weight_scheme.offline.size() != num_teachers) {
      fail("offline weights must list one value per teacher");
    }
    double total = 0.0;
    for (double w : weight_scheme.offline) {
      if (!(w >= 0.0) || !std::isfinite(w)) fail("offline weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) fail("offline weights are all zero");
  }
}

json to_json(const TrainConfig& c) {
  json j;
  j["lr0"] = c.lr0;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["milestones"] = c.milestones;
  j["decay"] = c.decay;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["tau"] = c.tau;
  j["queue_size"] = c.queue_size;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["pair_mode"] = std::string(to_string(c.pair_mode));
  j["num_segments"] = c.num_segments;
  j["augment"] = {{"jitter", c.augment.jitter}, {"mask_frac", c.augment.mask_frac}};
  j["weight_scheme"] = std::string(to_string(c.weight_scheme.kind));
  if (c.weight_scheme.kind == WeightScheme::Kind::Offline) {
    j["offline_weights"] = c.weight_scheme.offline;
  }
  j["fusion"] = std::string(to_string(c.fusion));
  j["normalize"] = c.normalize;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lr0") c.lr0 = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "milestones") c.milestones = value.get<std::vector<std::size_t>>();
      else if (key == "decay") c.decay = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "queue_size") c.queue_size = value.get<std::size_t>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "pair_mode") c.pair_mode = parse_pair_mode(value.get<std::string>());
      else if (key == "num_segments") c.num_segments = value.get<std::size_t>();
      else if (key == "augment") {
        c.augment.jitter = value.value("jitter", c.augment.jitter);
        c.augment.mask_frac = value.value("mask_frac", c.augment.mask_frac);
      } else if (key == "weight_scheme") c.weight_scheme.kind = parse_weight_scheme(value.get<std::string>());
      else if (key == "offline_weights") c.weight_scheme.offline = value.get<std::vector<double>>();
      else if (key == "fusion") c.fusion = parse_fusion_level(value.get<std::string>());
      else if (key == "normalize") c.normalize = value.get<bool>();
      else if (key == "embed_dim") c.embed_dim = value.get<std::size_t>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ConfigError("train config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (c.weight_scheme.kind != WeightScheme::Kind::Offline && !c.weight_scheme.offline.empty()) {
    throw ConfigError("train config: offline_weights given but weight_scheme is not 'offline'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Optimizer

double lr_at(const TrainConfig& config, std::size_t epoch) {
  double lr = config.lr0;
  for (std::size_t m : config.milestones) {
    if (m <= epoch) lr *= config.decay;
  }
  return lr;
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw InvalidArgument("sgd_step: params/grads/velocity sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("sgd_step: non-finite gradient at parameter " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i] + weight_decay * params[i];
    params[i] -= lr * velocity[i];
  }
}

// ---------------------------------------------------------------------------
// Batches

Rng pair_rng(std::uint64_t seed, std::uint32_t video_id, std::size_t epoch) {
  return Rng::stream(seed, "pair", {video_id, epoch});
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t count) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng = Rng::stream(seed, "shuffle", {epoch});
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

namespace {

struct SampleResult {
  std::vector<Vector> guidance;  // per teacher
  Vector student_grad;
  Vector head_grad;
  double contrastive_loss = 0.0;
  double ce_loss = 0.0;
  Vector weights;
};

ContrastiveOptions contrastive_options(const TrainConfig& c) {
  return {c.tau, c.weight_scheme, c.fusion, c.normalize};
}

}  // namespace

BatchOutcome evaluate_batch(const TrainConfig& config, const StudentEncoder& student,
                            const ClassifierHead* head, const TeacherBank& bank,
                            std::span<const Video* const> batch,
                            const std::vector<Matrix>& negatives, std::size_t epoch) {
  const bool joint = head != nullptr;
  const bool contrastive = !negatives.empty() && (!joint || config.alpha > 0.0);
  if (!negatives.empty() && negatives.size() != bank.size()) {
    throw InvalidArgument("evaluate_batch: one negative snapshot per teacher required");
  }
  const ContrastiveOptions options = contrastive_options(config);
  const std::size_t n = batch.size();
  std::vector<SampleResult> samples(n);

  parallel_for(n, config.threads, [&](std::size_t i) {
    const Video& video = *batch[i];
    Rng rng = pair_rng(config.seed, video.video_id, epoch);
    const ContrastivePair pair =
        make_pair(video, config.pair_mode, config.num_segments, rng, config.augment);

    SampleResult& s = samples[i];
    s.guidance.reserve(bank.size());
    for (std::size_t k = 0; k < bank.size(); ++k) {
      s.guidance.push_back(bank[k].embed(pair.guidance_input.features));
    }
    if (!contrastive && !joint) return;

    const StudentActivations acts = student.forward(pair.anchor_input.features);
    Vector grad_feature(acts.feature.size(), 0.0);
    if (contrastive) {
      ContrastiveOutcome out = fused_contrastive(acts.feature, s.guidance, negatives, options);
      s.contrastive_loss = out.loss;
      s.weights = std::move(out.weights);
      const double scale = joint ? config.alpha : 1.0;
      for (std::size_t c = 0; c < grad_feature.size(); ++c) grad_feature[c] = scale * out.grad_anchor[c];
    }
    if (joint) {
      const Vector logits = head->logits(acts.feature);
      CrossEntropyResult ce = cross_entropy(logits, video.label);
      s.ce_loss = ce.loss;
      for (double& g : ce.grad_logits) g *= config.beta;
      s.head_grad.assign(head->params().size(), 0.0);
      const Vector g_feat = head->backward(acts.feature, ce.grad_logits, s.head_grad);
      for (std::size_t c = 0; c < grad_feature.size(); ++c) grad_feature[c] += g_feat[c];
    }
    s.student_grad.assign(student.parameter_count(), 0.0);
    student.backward(acts, grad_feature, s.student_grad);
  });

  BatchOutcome out;
  out.contrastive_active = contrastive;
  out.guidance.assign(bank.size(), Matrix(n, bank.embed_dim()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < bank.size(); ++k) {
      std::copy(samples[i].guidance[k].begin(), samples[i].guidance[k].end(),
                out.guidance[k].row(i).begin());
    }
  }
  if (!contrastive && !joint) return out;

  // Fixed-order reduction over samples.
  const double inv = 1.0 / static_cast<double>(n);
  out.student_grad.assign(student.parameter_count(), 0.0);
  if (joint) out.head_grad.assign(head->params().size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const SampleResult& s = samples[i];
    for (std::size_t p = 0; p < s.student_grad.size(); ++p) out.student_grad[p] += s.student_grad[p];
    for (std::size_t p = 0; p < s.head_grad.size(); ++p) out.head_grad[p] += s.head_grad[p];
    out.contrastive_loss += s.contrastive_loss;
    out.ce_loss += s.ce_loss;
    if (contrastive) out.weights.push_back(s.weights);
  }
  for (double& g : out.student_grad) g *= inv;
  for (double& g : out.head_grad) g *= inv;
  out.contrastive_loss *= inv;
  out.ce_loss *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

std::vector<GuidanceQueue> make_queues(const TrainConfig& config, const TeacherBank& bank) {
  std::vector<GuidanceQueue> queues;
  queues.reserve(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    queues.emplace_back(config.queue_size, bank.embed_dim(), config.normalize);
  }
  return queues;
}

bool all_warm(const std::vector<GuidanceQueue>& queues) {
  return std::all_of(queues.begin(), queues.end(), [](const auto& q) { return q.warm(); });
}

std::vector<Matrix> snapshots(const std::vector<GuidanceQueue>& queues) {
  std::vector<Matrix> out;
  if (!all_warm(queues)) return out;
  out.reserve(queues.size());
  for (const auto& q : queues) out.push_back(q.negatives());
  return out;
}

// Accumulates per-sample teacher weights into an epoch's mean and spread.
struct WeightStats {
  explicit WeightStats(std::size_t n) : sum(n, 0.0), sum_sq(n, 0.0) {}

  void add(const std::vector<Vector>& per_sample) {
    for (const Vector& w : per_sample) {
      for (std::size_t k = 0; k < w.size(); ++k) {
        sum[k] += w[k];
        sum_sq[k] += w[k] * w[k];
      }
      ++count;
    }
  }

  void finish(EpochRecord& rec) const {
    if (count == 0) return;
    const double c = static_cast<double>(count);
    rec.mean_weights.resize(sum.size());
    rec.weight_std.resize(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) {
      const double mean = sum[k] / c;
      rec.mean_weights[k] = mean;
      rec.weight_std[k] = std::sqrt(std::max(0.0, sum_sq[k] / c - mean * mean));
    }
  }

  Vector sum, sum_sq;
  std::size_t count = 0;
};

void check_videos(std::span<const Video> videos, const TeacherBank& bank) {
  if (videos.empty()) throw ConfigError("training set is empty");
  const std::size_t D = videos.front().frames.cols();
  for (const auto& t : bank.teachers()) {
    if (t.frame_dim() != D) throw ConfigError("teacher input width does not match the corpus");
  }
}

std::vector<std::string> teacher_names(const TeacherBank& bank) {
  std::vector<std::string> names;
  for (const auto& t : bank.teachers()) names.push_back(t.name());
  return names;
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + " became non-finite");
}

// Runs one batch, attaching its position to any numeric failure.
template <class F>
void run_batch(std::size_t epoch, std::size_t batch, F&& body) {
  try {
    body();
  } catch (const NumericError& e) {
    throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch) + ": " + e.what());
  }
}

}  // namespace

PretrainResult pretrain(const TrainConfig& config, std::span<const Video> videos,
                        const TeacherBank& bank) {
  check_videos(videos, bank);
  return pretrain_from(config, videos, bank,
                       StudentEncoder::build(videos.front().frames.cols(), config.hidden_dim,
                                             config.embed_dim, config.seed, config.normalize));
}

PretrainResult pretrain_from(const TrainConfig& config, std::span<const Video> videos,
                             const TeacherBank& bank, StudentEncoder init) {
  check_videos(videos, bank);
  config.validate(videos.size(), bank.size());
  if (init.embed_dim() != bank.embed_dim()) {
    throw ConfigError("student and teachers must share the embedding dimension");
  }

  PretrainResult result{std::move(init), {}};
  result.report.mode = "pretrain";
  result.report.seed = config.seed;
  result.report.teacher_names = teacher_names(bank);

  StudentEncoder& student = result.student;
  std::vector<double> velocity(student.parameter_count(), 0.0);
  std::vector<GuidanceQueue> queues = make_queues(config, bank);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at(config, epoch);
    WeightStats stats(bank.size());
    double loss_sum = 0.0;
    std::size_t loss_samples = 0;

    const auto order = epoch_order(config.seed, epoch, videos.size());
    for (std::size_t start = 0, batch_id = 0; start < order.size();
         start += config.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const Video*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&videos[order[i]]);

      run_batch(epoch, batch_id, [&] {
        const std::vector<Matrix> negs = snapshots(queues);
        BatchOutcome out = evaluate_batch(config, student, nullptr, bank, batch, negs, epoch);
        if (out.contrastive_active) {
          require_finite(out.contrastive_loss, "contrastive loss");
          sgd_step(student.params(), out.student_grad, velocity, rec.lr, config.momentum,
                   config.weight_decay);
          ++rec.updates;
          loss_sum += out.contrastive_loss * static_cast<double>(batch.size());
          loss_samples += batch.size();
          stats.add(out.weights);
        } else {
          ++rec.skipped_batches;
        }
        for (std::size_t k = 0; k < bank.size(); ++k) queues[k].enqueue_batch(out.guidance[k]);
      });
    }
    rec.contrastive_loss = loss_samples ? loss_sum / static_cast<double>(loss_samples) : 0.0;
    stats.finish(rec);
    result.report.epochs.push_back(std::move(rec));
  }
  return result;
}

JointModel initial_joint_model(const TrainConfig& config, std::size_t frame_dim,
                               std::size_t num_classes) {
  return {StudentEncoder::build(frame_dim, config.hidden_dim, config.embed_dim, config.seed,
                                config.normalize),
          ClassifierHead::build(config.embed_dim, num_classes, config.seed)};
}

JointResult train_joint(const TrainConfig& config, std::span<const Video> videos,
                        const TeacherBank& bank, JointModel init) {
  check_videos(videos, bank);
  config.validate(videos.size(), bank.size());
  if (init.student.embed_dim() != bank.embed_dim() ||
      init.head.embed_dim() != init.student.embed_dim()) {
    throw ConfigError("student, head and teachers must share the embedding dimension");
  }
  for (const Video& v : videos) {
    if (v.label >= init.head.num_classes()) throw ConfigError("label outside the classifier head");
  }

  JointResult result{std::move(init), {}};
  result.report.mode = "train-joint";
  result.report.seed = config.seed;
  result.report.teacher_names = teacher_names(bank);

  JointModel& model = result.model;
  std::vector<double> v_student(model.student.parameter_count(), 0.0);
  std::vector<double> v_head(model.head.params().size(), 0.0);
  std::vector<GuidanceQueue> queues = make_queues(config, bank);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at(config, epoch);
    WeightStats stats(bank.size());
    double ct_sum = 0.0, ce_sum = 0.0, joint_sum = 0.0;
    std::size_t ct_samples = 0, samples = 0;

    const auto order = epoch_order(config.seed, epoch, videos.size());
    for (std::size_t start = 0, batch_id = 0; start < order.size();
         start += config.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const Video*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&videos[order[i]]);
      const double b = static_cast<double>(batch.size());

      run_batch(epoch, batch_id, [&] {
        const std::vector<Matrix> negs = snapshots(queues);
        BatchOutcome out = evaluate_batch(config, model.student, &model.head, bank, batch, negs, epoch);
        require_finite(out.ce_loss, "cross-entropy loss");
        require_finite(out.contrastive_loss, "contrastive loss");

        sgd_step(model.student.params(), out.student_grad, v_student, rec.lr, config.momentum,
                 config.weight_decay);
        sgd_step(model.head.params(), out.head_grad, v_head, rec.lr, config.momentum,
                 config.weight_decay);
        ++rec.updates;
        if (negs.empty() && config.alpha > 0.0) ++rec.skipped_batches;

        ce_sum += out.ce_loss * b;
        samples += batch.size();
        if (out.contrastive_active) {
          ct_sum += out.contrastive_loss * b;
          ct_samples += batch.size();
          stats.add(out.weights);
        }
        joint_sum += joint_loss(out.contrastive_active ? out.contrastive_loss : 0.0, out.ce_loss,
                                config.alpha, config.beta) * b;
        for (std::size_t k = 0; k < bank.size(); ++k) queues[k].enqueue_batch(out.guidance[k]);
      });
    }
    rec.contrastive_loss = ct_samples ? ct_sum / static_cast<double>(ct_samples) : 0.0;
    rec.ce_loss = ce_sum / static_cast<double>(samples);
    rec.joint_loss = joint_sum / static_cast<double>(samples);
    stats.finish(rec);
    result.report.epochs.push_back(std::move(rec));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const RunReport& r) {
  json epochs = json::array();
  for (const EpochRecord& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"contrastive_loss", e.contrastive_loss},
                      {"ce_loss", e.ce_loss},
                      {"joint_loss", e.joint_loss},
                      {"mean_weights", e.mean_weights},
                      {"weight_std", e.weight_std},
                      {"updates", e.updates},
                      {"skipped_batches", e.skipped_batches}});
  }
  return {{"mode", r.mode},
          {"seed", r.seed},
          {"teachers", r.teacher_names},
          {"checkpoint", r.checkpoint_path},
          {"epochs", epochs}};
}

std::string epochs_csv(const RunReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,lr,contrastive_loss,ce_loss,joint_loss,updates,skipped_batches";
  for (const auto& name : r.teacher_names) out << ",w_" << name;
  out << '\n';
  for (const EpochRecord& e : r.epochs) {
    out << e.epoch << ',' << e.lr << ',' << e.contrastive_loss << ',' << e.ce_loss << ','
        << e.joint_loss << ',' << e.updates << ',' << e.skipped_batches;
    for (std::size_t k = 0; k < r.teacher_names.size(); ++k) {
      out << ',';
      if (k < e.mean_weights.size()) out << e.mean_weights[k];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dtg
