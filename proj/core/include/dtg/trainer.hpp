#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtg/corpus.hpp"
#include "dtg/losses.hpp"
#include "dtg/model.hpp"
#include "dtg/queue.hpp"
#include "dtg/sampling.hpp"

namespace dtg {

struct TrainConfig {
  // Optimizer and schedule.
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::vector<std::size_t> milestones{30, 50};
  double decay = 0.1;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;

  // Contrastive objective.
  double tau = 0.07;
  std::size_t queue_size = 256;
  double alpha = 0.1;
  double beta = 1.0;
  PairMode pair_mode = PairMode::SeqSeqOverlap;
  std::size_t num_segments = 4;
  AugmentConfig augment{0.1, 0.25};
  WeightScheme weight_scheme = WeightScheme::uniform();
  FusionLevel fusion = FusionLevel::Loss;
  bool normalize = true;

  // Student shape.
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;

  std::uint64_t seed = 0;

  /// Worker threads for per-sample evaluation. Not part of the serialized
  /// config: results are bit-identical for every value.
  std::size_t threads = 1;

  /// Throws ConfigError. `num_videos` is the training set size (queue_size must be smaller).
  void validate(std::size_t num_videos, std::size_t num_teachers) const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// lr0 · decay^(number of milestones <= epoch)
double lr_at(const TrainConfig& config, std::size_t epoch);

/// SGD with momentum and coupled weight decay:
///   v <- momentum·v + g + weight_decay·p;   p <- p - lr·v
/// Throws NumericError on a non-finite gradient and InvalidArgument on shape mismatch.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum, double weight_decay);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double contrastive_loss = 0.0;  // mean over samples that produced a loss
  double ce_loss = 0.0;           // joint mode only
  double joint_loss = 0.0;        // joint mode only
  Vector mean_weights;            // mean applied teacher weight over samples
  Vector weight_std;              // spread of the applied weights across samples
  std::size_t updates = 0;        // optimizer steps taken
  std::size_t skipped_batches = 0;  // batches without a contrastive term because the queues were cold
};

struct RunReport {
  std::string mode;  // "pretrain" or "train-joint"
  std::uint64_t seed = 0;
  std::vector<std::string> teacher_names;
  std::vector<EpochRecord> epochs;
  std::string checkpoint_path;
};

nlohmann::json to_json(const RunReport& report);
/// One row per epoch: epoch, lr, losses, updates, skipped batches, then w_<teacher> columns.
std::string epochs_csv(const RunReport& report);

struct PretrainResult {
  StudentEncoder student;
  RunReport report;
};

/// Self-supervised training of a fresh student (initialized from config.seed)
/// against the frozen teacher bank.
PretrainResult pretrain(const TrainConfig& config, std::span<const Video> videos,
                        const TeacherBank& bank);

/// Same as above, starting from a given encoder.
PretrainResult pretrain_from(const TrainConfig& config, std::span<const Video> videos,
                             const TeacherBank& bank, StudentEncoder init);

struct JointModel {
  StudentEncoder student;
  ClassifierHead head;
};

struct JointResult {
  JointModel model;
  RunReport report;
};

/// Losses, gradients and teacher features of one batch, before the optimizer step.
struct BatchOutcome {
  Vector student_grad;  // mean over the batch
  Vector head_grad;     // joint mode only
  double contrastive_loss = 0.0;  // batch mean, when contrastive_active
  double ce_loss = 0.0;           // batch mean, joint mode only
  bool contrastive_active = false;
  std::vector<Matrix> guidance;   // per teacher: batch_size x d guidance features
  std::vector<Vector> weights;    // per sample applied teacher weights
};

/// Evaluates one batch. `negatives` holds one snapshot per teacher, or is
/// empty while the queues are cold. With `head` == nullptr only the
/// contrastive term is computed (pretraining); otherwise the joint objective.
BatchOutcome evaluate_batch(const TrainConfig& config, const StudentEncoder& student,
                            const ClassifierHead* head, const TeacherBank& bank,
                            std::span<const Video* const> batch,
                            const std::vector<Matrix>& negatives, std::size_t epoch);

/// Supervised training on L_joint = alpha·L_ct + beta·L_ce. The CE term trains
/// from the first batch; the contrastive term joins once every queue is warm.
/// alpha = 0 skips the contrastive branch entirely.
JointResult train_joint(const TrainConfig& config, std::span<const Video> videos,
                        const TeacherBank& bank, JointModel init);

/// Default initial joint model for a config: student from config.seed, head
/// from a derived stream.
JointModel initial_joint_model(const TrainConfig& config, std::size_t frame_dim,
                               std::size_t num_classes);

/// Per-sample pair rng, keyed by (seed, video_id, epoch).
Rng pair_rng(std::uint64_t seed, std::uint32_t video_id, std::size_t epoch);

/// Visit order of the training videos in one epoch.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t count);

}  // namespace dtg
