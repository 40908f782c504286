#include "dtg/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtg/binary_io.hpp"
#include "dtg/errors.hpp"
#include "dtg/experiment.hpp"

namespace dtg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

std::size_t threads_from_env() {
  const char* raw = std::getenv("DTG_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(raw, &end, 10);
  if (*end != '\0' || n == 0 || n > 1024) {
    throw ConfigError(std::string("DTG_THREADS must be an integer in [1, 1024], got '") + raw + "'");
  }
  return static_cast<std::size_t>(n);
}

// Loads the config and applies command-line overrides. Nothing is written yet.
ExperimentConfig prepare(const CommonFlags& f) {
  ExperimentConfig c = load_experiment_config(f.config);
  if (f.seed) override_seed(c, *f.seed);
  if (!f.out.empty()) c.out_dir = f.out;
  c.train.threads = threads_from_env();
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& j) { io::write_text_file(path, j.dump(2) + "\n"); }

json checkpoint_metadata(const json& resolved, const std::string& mode) {
  return {{"mode", mode}, {"seed", resolved.at("seed")}, {"config", resolved}};
}

void write_timing(const fs::path& dir, const json& resolved, const std::string& mode, double seconds,
                  std::size_t threads) {
  write_json(dir / artifact::kTiming, {{"mode", mode},
                                       {"seed", resolved.at("seed")},
                                       {"config", resolved},
                                       {"wall_seconds", seconds},
                                       {"threads", threads}});
}

std::optional<StudentEncoder> load_init(const std::string& init) {
  if (init.empty()) return std::nullopt;
  return load_checkpoint(init).student;
}

void log_epochs(const RunReport& report, bool quiet) {
  if (quiet) return;
  for (const auto& e : report.epochs) {
    std::cout << "epoch " << e.epoch << " lr " << e.lr << " contrastive " << e.contrastive_loss;
    if (report.mode == "train-joint") std::cout << " ce " << e.ce_loss << " joint " << e.joint_loss;
    std::cout << " updates " << e.updates << '\n';
  }
}

int cmd_gen_data(const CommonFlags& f) {
  const ExperimentConfig c = prepare(f);
  if (c.corpus_path) throw ConfigError("gen-data needs a generated corpus spec, not a corpus path");
  const json resolved = resolved_config_json(c);
  const Corpus corpus = obtain_corpus(c);
  ensure_dir(c.out_dir);
  save_corpus(corpus, c.out_dir / artifact::kCorpus);
  write_json(c.out_dir / "corpus.json", {{"seed", resolved.at("seed")},
                                         {"corpus_seed", corpus.spec.seed},
                                         {"config", resolved}});
  if (!f.quiet) {
    std::cout << "wrote " << corpus.videos.size() << " videos to "
              << (c.out_dir / artifact::kCorpus).string() << '\n';
  }
  return exit_code::kOk;
}

int cmd_pretrain(const CommonFlags& f, const std::string& init) {
  const ExperimentConfig c = prepare(f);
  const json resolved = resolved_config_json(c);
  const Corpus corpus = obtain_corpus(c);
  const TeacherBank bank = build_bank(c, corpus);
  auto start_student = load_init(init);

  const auto t0 = std::chrono::steady_clock::now();
  PretrainResult r = start_student ? pretrain_from(c.train, corpus.videos, bank, std::move(*start_student))
                                   : pretrain(c.train, corpus.videos, bank);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ensure_dir(c.out_dir);
  const fs::path ckpt = c.out_dir / artifact::kCheckpoint;
  r.report.checkpoint_path = artifact::kCheckpoint;
  save_checkpoint({r.student, std::nullopt, checkpoint_metadata(resolved, "pretrain").dump()}, ckpt);
  write_run_artifacts(c.out_dir, resolved, r.report);
  write_timing(c.out_dir, resolved, "pretrain", seconds, c.train.threads);
  log_epochs(r.report, f.quiet);
  if (!f.quiet) std::cout << "checkpoint " << ckpt.string() << '\n';
  return exit_code::kOk;
}

int cmd_train_joint(const CommonFlags& f, const std::string& init) {
  const ExperimentConfig c = prepare(f);
  const json resolved = resolved_config_json(c);
  const Corpus corpus = obtain_corpus(c);
  const TeacherBank bank = build_bank(c, corpus);
  const VideoSplit split = split_videos(corpus, c.eval.split_frac, split_seed(c));

  JointModel model = initial_joint_model(c.train, corpus.spec.frame_dim, corpus.spec.num_classes);
  if (auto s = load_init(init)) {
    if (s->frame_dim() != model.student.frame_dim() || s->hidden_dim() != model.student.hidden_dim() ||
        s->embed_dim() != model.student.embed_dim()) {
      throw ConfigError("--init checkpoint shape does not match the config");
    }
    model.student = std::move(*s);
  }

  const auto t0 = std::chrono::steady_clock::now();
  JointResult r = train_joint(c.train, split.train, bank, std::move(model));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ensure_dir(c.out_dir);
  const fs::path ckpt = c.out_dir / artifact::kCheckpoint;
  r.report.checkpoint_path = artifact::kCheckpoint;
  save_checkpoint({r.model.student, r.model.head, checkpoint_metadata(resolved, "train-joint").dump()}, ckpt);
  write_run_artifacts(c.out_dir, resolved, r.report);
  write_timing(c.out_dir, resolved, "train-joint", seconds, c.train.threads);
  log_epochs(r.report, f.quiet);
  if (!f.quiet) std::cout << "checkpoint " << ckpt.string() << '\n';
  return exit_code::kOk;
}

int cmd_probe(const CommonFlags& f, std::string checkpoint, bool random_init) {
  const ExperimentConfig c = prepare(f);
  const json resolved = resolved_config_json(c);
  const Corpus corpus = obtain_corpus(c);

  std::optional<Checkpoint> ckpt;
  std::string source;
  if (random_init) {
    if (!checkpoint.empty()) throw ConfigError("--checkpoint and --random-init are exclusive");
    JointModel m = initial_joint_model(c.train, corpus.spec.frame_dim, corpus.spec.num_classes);
    ckpt = Checkpoint{std::move(m.student), std::nullopt, ""};
    source = "random-init";
  } else {
    if (checkpoint.empty()) checkpoint = (c.out_dir / artifact::kCheckpoint).string();
    ckpt = load_checkpoint(checkpoint);
    source = fs::path(checkpoint).filename().string();
  }
  if (ckpt->student.frame_dim() != corpus.spec.frame_dim) {
    throw ConfigError("checkpoint frame dimension does not match the corpus");
  }

  const ClassifierHead* head = ckpt->head ? &*ckpt->head : nullptr;
  const EvalSummary s = evaluate_representation(c, corpus, ckpt->student, head);
  ensure_dir(c.out_dir);
  write_eval_artifacts(c.out_dir, resolved, s, corpus.videos, source);
  if (!f.quiet) {
    if (c.eval.probe) std::cout << "probe_top1 " << s.probe.top1 << '\n';
    if (s.knn_top1) std::cout << "knn_top1 " << *s.knn_top1 << '\n';
    if (s.class_overlap) std::cout << "class_overlap " << *s.class_overlap << '\n';
    if (s.head_top1) std::cout << "head_top1 " << *s.head_top1 << '\n';
  }
  return exit_code::kOk;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out, bool quiet) {
  std::vector<fs::path> arms(runs.begin(), runs.end());
  const std::string csv = aggregate_runs(arms);
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  ensure_dir(dir);
  io::write_text_file(dir / artifact::kReport, csv);
  if (!quiet) std::cout << csv;
  return exit_code::kOk;
}

void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
  auto* opt = sub->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) opt->required();
  sub->add_option("--seed", f.seed, "run seed; overrides the config");
  sub->add_option("--out", f.out, "output directory; overrides the config");
  sub->add_flag("--quiet", f.quiet, "suppress progress output");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Teacher-guided contrastive video representation learning on synthetic corpora", "dtg"};
  app.require_subcommand(1);

  CommonFlags gen_flags, pre_flags, joint_flags, probe_flags;
  std::string pre_init, joint_init, checkpoint, report_out;
  bool random_init = false, report_quiet = false;
  std::vector<std::string> runs;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus file");
  add_common(gen, gen_flags, true);
  auto* pre = app.add_subcommand("pretrain", "self-supervised training against the teacher bank");
  add_common(pre, pre_flags, true);
  pre->add_option("--init", pre_init, "start from the student in this checkpoint");
  auto* joint = app.add_subcommand("train-joint", "supervised training with the joint loss");
  add_common(joint, joint_flags, true);
  joint->add_option("--init", joint_init, "start from the student in this checkpoint");
  auto* probe = app.add_subcommand("probe", "evaluate a checkpoint");
  add_common(probe, probe_flags, true);
  probe->add_option("--checkpoint", checkpoint, "checkpoint to evaluate (default: <out>/checkpoint.dtgm)");
  probe->add_flag("--random-init", random_init, "evaluate an untrained student instead");
  auto* report = app.add_subcommand("report", "aggregate run directories into one CSV");
  report->add_option("--runs", runs, "arms: run directories or directories of runs")->required();
  report->add_option("--out", report_out, "output directory (default: current directory)");
  report->add_flag("--quiet", report_quiet, "do not echo the CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::kConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_flags);
    if (pre->parsed()) return cmd_pretrain(pre_flags, pre_init);
    if (joint->parsed()) return cmd_train_joint(joint_flags, joint_init);
    if (probe->parsed()) return cmd_probe(probe_flags, checkpoint, random_init);
    return cmd_report(runs, report_out, report_quiet);
  } catch (const ConfigError& e) {
    std::cerr << "dtg: config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const IoError& e) {
    std::cerr << "dtg: I/O error: " << e.what() << '\n';
    return exit_code::kIo;
  } catch (const NumericError& e) {
    std::cerr << "dtg: numeric error: " << e.what() << '\n';
    return exit_code::kNumeric;
  } catch (const Error& e) {
    std::cerr << "dtg: invalid input: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "dtg: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace dtg
