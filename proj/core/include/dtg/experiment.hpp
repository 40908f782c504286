#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtg/corpus.hpp"
#include "dtg/eval.hpp"
#include "dtg/model.hpp"
#include "dtg/trainer.hpp"

namespace dtg {

struct TeacherSpec {
  std::string name;
  double rho = 1.0;
  std::optional<std::uint64_t> seed;   // derived from the run seed when absent
  std::optional<double> offline_weight;
};

struct EvalToggles {
  bool probe = true;
  bool knn = true;
  std::size_t knn_k = 5;
  bool overlap = true;
  bool projection = true;
  double split_frac = 0.8;
  std::size_t probe_epochs = 100;
  double probe_lr = 0.01;
};

/// Everything a run needs. JSON schema:
///
///   {
///     "corpus":   {"path": "..."}  or  {"num_classes": 10, ..., "seed": 3},
///     "teachers": [{"name": "t0", "rho": 0.9, "seed": 1, "offline_weight": 0.5}, ...],
///     "train":    { TrainConfig fields },
///     "eval":     {"probe": true, "knn": true, "knn_k": 5, "overlap": true,
///                  "projection": true, "split_frac": 0.8,
///                  "probe_epochs": 100, "probe_lr": 0.01},
///     "out":      "runs/example"
///   }
///
/// `offline_weight` must be present on every teacher iff train.weight_scheme
/// is "offline". A corpus spec without "seed" uses a sub-stream of the run seed.
struct ExperimentConfig {
  std::optional<std::filesystem::path> corpus_path;
  CorpusSpec corpus_spec;
  bool corpus_seed_given = false;
  std::vector<TeacherSpec> teachers;
  TrainConfig train;
  EvalToggles eval;
  std::filesystem::path out_dir = "out";
};

/// Throws ConfigError on schema violations.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
/// Throws ConfigError when the file is missing or malformed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sets the run seed, re-deriving every unpinned sub-stream from it.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

/// Fully resolved config: derived seeds and defaults made explicit.
nlohmann::json resolved_config_json(const ExperimentConfig& config);

/// Corpus spec seed and teacher seeds as they will actually be used.
std::uint64_t effective_corpus_seed(const ExperimentConfig& config);
std::uint64_t effective_teacher_seed(const ExperimentConfig& config, std::size_t k);
std::uint64_t split_seed(const ExperimentConfig& config);

Corpus obtain_corpus(const ExperimentConfig& config);
TeacherBank build_bank(const ExperimentConfig& config, const Corpus& corpus);

/// Train-split and held-out videos for supervised training and evaluation.
struct VideoSplit {
  std::vector<Video> train;
  std::vector<Video> test;
};
VideoSplit split_videos(const Corpus& corpus, double train_frac, std::uint64_t seed);

struct EvalSummary {
  ProbeResult probe;
  std::optional<double> knn_top1;
  std::optional<double> class_overlap;     // on held-out videos
  std::optional<double> head_top1;         // held-out accuracy of a trained classifier head
  std::optional<Projection> projection;
};

/// Evaluates a student (and optional head) on a corpus with the config's toggles.
EvalSummary evaluate_representation(const ExperimentConfig& config, const Corpus& corpus,
                                    const StudentEncoder& student,
                                    const ClassifierHead* head = nullptr);

// Artifact writers. Every file embeds the resolved config and seed.
void write_run_artifacts(const std::filesystem::path& dir, const nlohmann::json& resolved,
                         const RunReport& report);
void write_eval_artifacts(const std::filesystem::path& dir, const nlohmann::json& resolved,
                          const EvalSummary& summary, std::span<const Video> videos,
                          const std::string& checkpoint);

/// Aggregates run directories into CSV rows (one per arm) with mean and
/// sample standard deviation of every numeric metric. An arm is either a
/// run directory or a directory whose immediate subdirectories are runs.
std::string aggregate_runs(const std::vector<std::filesystem::path>& arms);

/// File names inside a run directory.
namespace artifact {
inline constexpr const char* kCorpus = "corpus.dtgc";
inline constexpr const char* kCheckpoint = "checkpoint.dtgm";
inline constexpr const char* kRunReport = "run_report.json";
inline constexpr const char* kEpochs = "epochs.csv";
inline constexpr const char* kProbe = "probe.json";
inline constexpr const char* kOverlap = "overlap.json";
inline constexpr const char* kProjection = "projection.csv";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kTiming = "timing.json";
}  // namespace artifact

}  // namespace dtg
