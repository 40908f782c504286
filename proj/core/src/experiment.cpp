#include "dtg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dtg/binary_io.hpp"
#include "dtg/errors.hpp"
#include "dtg/rng.hpp"

namespace dtg {

using nlohmann::json;

namespace {

CorpusSpec corpus_spec_from_json(const json& j, bool& seed_given) {
  CorpusSpec s;
  seed_given = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_classes") s.num_classes = value.get<std::size_t>();
    else if (key == "videos_per_class") s.videos_per_class = value.get<std::size_t>();
    else if (key == "frames_per_video") s.frames_per_video = value.get<std::size_t>();
    else if (key == "frame_dim") s.frame_dim = value.get<std::size_t>();
    else if (key == "signal_dim") s.signal_dim = value.get<std::size_t>();
    else if (key == "video_spread") s.video_spread = value.get<double>();
    else if (key == "frame_noise") s.frame_noise = value.get<double>();
    else if (key == "drift") s.drift = value.get<double>();
    else if (key == "seed") {
      s.seed = value.get<std::uint64_t>();
      seed_given = true;
    } else throw ConfigError("corpus: unknown key '" + key + "'");
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("corpus: ") + e.what());
  }
  return s;
}

json corpus_spec_json(const CorpusSpec& s) {
  return {{"num_classes", s.num_classes},   {"videos_per_class", s.videos_per_class},
          {"frames_per_video", s.frames_per_video}, {"frame_dim", s.frame_dim},
          {"signal_dim", s.signal_dim},     {"video_spread", s.video_spread},
          {"frame_noise", s.frame_noise},   {"drift", s.drift},
          {"seed", s.seed}};
}

EvalToggles eval_from_json(const json& j) {
  EvalToggles e;
  for (const auto& [key, value] : j.items()) {
    if (key == "probe") e.probe = value.get<bool>();
    else if (key == "knn") e.knn = value.get<bool>();
    else if (key == "knn_k") e.knn_k = value.get<std::size_t>();
    else if (key == "overlap") e.overlap = value.get<bool>();
    else if (key == "projection") e.projection = value.get<bool>();
    else if (key == "split_frac") e.split_frac = value.get<double>();
    else if (key == "probe_epochs") e.probe_epochs = value.get<std::size_t>();
    else if (key == "probe_lr") e.probe_lr = value.get<double>();
    else throw ConfigError("eval: unknown key '" + key + "'");
  }
  if (!(e.split_frac > 0.0 && e.split_frac < 1.0)) throw ConfigError("eval: split_frac must lie in (0, 1)");
  if (e.knn_k == 0) throw ConfigError("eval: knn_k must be >= 1");
  if (e.probe_epochs == 0 || !(e.probe_lr > 0.0)) throw ConfigError("eval: bad probe settings");
  return e;
}

void write_json(const std::filesystem::path& path, const json& j) {
  io::write_text_file(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string csv_preamble(const json& resolved) {
  return "# config: " + resolved.dump() + "\n";
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "corpus") {
        if (value.contains("path")) {
          if (value.size() != 1) throw ConfigError("corpus: 'path' cannot be combined with a spec");
          c.corpus_path = value.at("path").get<std::string>();
        } else {
          c.corpus_spec = corpus_spec_from_json(value, c.corpus_seed_given);
        }
      } else if (key == "teachers") {
        for (const auto& t : value) {
          TeacherSpec spec;
          for (const auto& [tk, tv] : t.items()) {
            if (tk == "name") spec.name = tv.get<std::string>();
            else if (tk == "rho") spec.rho = tv.get<double>();
            else if (tk == "seed") spec.seed = tv.get<std::uint64_t>();
            else if (tk == "offline_weight") spec.offline_weight = tv.get<double>();
            else throw ConfigError("teacher: unknown key '" + tk + "'");
          }
          if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw ConfigError("teacher: rho must lie in [0, 1]");
          c.teachers.push_back(std::move(spec));
        }
      } else if (key == "train") {
        c.train = train_config_from_json(value);
      } else if (key == "eval") {
        c.eval = eval_from_json(value);
      } else if (key == "out") {
        c.out_dir = value.get<std::string>();
      } else {
        throw ConfigError("unknown top-level key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (c.teachers.empty()) throw ConfigError("config: at least one teacher is required");
  for (std::size_t k = 0; k < c.teachers.size(); ++k) {
    if (c.teachers[k].name.empty()) c.teachers[k].name = "teacher" + std::to_string(k);
  }
  const bool offline = c.train.weight_scheme.kind == WeightScheme::Kind::Offline;
  const auto with_weight = std::count_if(c.teachers.begin(), c.teachers.end(),
                                         [](const TeacherSpec& t) { return t.offline_weight.has_value(); });
  if (offline) {
    if (static_cast<std::size_t>(with_weight) != c.teachers.size()) {
      throw ConfigError("config: scheme 'offline' needs offline_weight on every teacher");
    }
    if (!c.train.weight_scheme.offline.empty()) {
      throw ConfigError("config: give offline weights on the teachers, not in train.offline_weights");
    }
    for (const auto& t : c.teachers) c.train.weight_scheme.offline.push_back(*t.offline_weight);
  } else if (with_weight > 0) {
    throw ConfigError("config: offline_weight is only allowed with weight_scheme 'offline'");
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) { config.train.seed = seed; }

std::uint64_t effective_corpus_seed(const ExperimentConfig& c) {
  return c.corpus_seed_given ? c.corpus_spec.seed : derive_seed(c.train.seed, {stream_tag("corpus")});
}

std::uint64_t effective_teacher_seed(const ExperimentConfig& c, std::size_t k) {
  const auto& t = c.teachers.at(k);
  return t.seed ? *t.seed : derive_seed(c.train.seed, {stream_tag("teacher"), k});
}

std::uint64_t split_seed(const ExperimentConfig& c) {
  return derive_seed(c.train.seed, {stream_tag("split")});
}

json resolved_config_json(const ExperimentConfig& c) {
  json j;
  if (c.corpus_path) {
    j["corpus"] = {{"path", c.corpus_path->string()}};
  } else {
    CorpusSpec s = c.corpus_spec;
    s.seed = effective_corpus_seed(c);
    j["corpus"] = corpus_spec_json(s);
  }
  json teachers = json::array();
  for (std::size_t k = 0; k < c.teachers.size(); ++k) {
    json t = {{"name", c.teachers[k].name}, {"rho", c.teachers[k].rho}, {"seed", effective_teacher_seed(c, k)}};
    if (c.teachers[k].offline_weight) t["offline_weight"] = *c.teachers[k].offline_weight;
    teachers.push_back(t);
  }
  j["teachers"] = teachers;
  json train = to_json(c.train);
  train.erase("offline_weights");  // carried by the teachers
  j["train"] = train;
  j["eval"] = {{"probe", c.eval.probe},           {"knn", c.eval.knn},
               {"knn_k", c.eval.knn_k},           {"overlap", c.eval.overlap},
               {"projection", c.eval.projection}, {"split_frac", c.eval.split_frac},
               {"probe_epochs", c.eval.probe_epochs}, {"probe_lr", c.eval.probe_lr}};
  j["seed"] = c.train.seed;
  return j;
}

Corpus obtain_corpus(const ExperimentConfig& c) {
  if (c.corpus_path) return load_corpus(*c.corpus_path);
  CorpusSpec s = c.corpus_spec;
  s.seed = effective_corpus_seed(c);
  return generate_corpus(s);
}

TeacherBank build_bank(const ExperimentConfig& c, const Corpus& corpus) {
  std::vector<Teacher> teachers;
  for (std::size_t k = 0; k < c.teachers.size(); ++k) {
    teachers.push_back(build_teacher(corpus.signal_basis, corpus.nuisance_basis, c.teachers[k].rho,
                                     c.train.embed_dim, effective_teacher_seed(c, k),
                                     c.teachers[k].name, c.train.normalize));
  }
  return TeacherBank(std::move(teachers));
}

VideoSplit split_videos(const Corpus& corpus, double train_frac, std::uint64_t seed) {
  const auto labels = labels_of(corpus.videos);
  const Split split = stratified_split(labels, train_frac, seed);
  VideoSplit out;
  for (std::size_t i : split.train) out.train.push_back(corpus.videos[i]);
  for (std::size_t i : split.test) out.test.push_back(corpus.videos[i]);
  return out;
}

EvalSummary evaluate_representation(const ExperimentConfig& c, const Corpus& corpus,
                                    const StudentEncoder& student, const ClassifierHead* head) {
  const std::size_t T = c.train.num_segments;
  const Matrix features = embed_videos(student, corpus.videos, T);
  const auto labels = labels_of(corpus.videos);
  const std::uint64_t seed = split_seed(c);

  EvalSummary s;
  if (c.eval.probe) {
    s.probe = linear_probe(features, labels,
                           {c.eval.split_frac, c.eval.probe_epochs, c.eval.probe_lr, seed});
  }
  if (c.eval.knn) s.knn_top1 = knn_top1(features, labels, c.eval.knn_k);

  const Split split = stratified_split(labels, c.eval.split_frac, seed);
  if (c.eval.overlap) {
    Matrix held(split.test.size(), features.cols());
    std::vector<std::uint32_t> held_labels;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      std::copy(features.row(split.test[i]).begin(), features.row(split.test[i]).end(), held.row(i).begin());
      held_labels.push_back(labels[split.test[i]]);
    }
    s.class_overlap = class_overlap(held, held_labels);
  }
  if (head != nullptr) {
    std::size_t correct = 0;
    for (std::size_t i : split.test) {
      const Vector l = head->logits(features.row(i));
      if (static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin()) == labels[i]) ++correct;
    }
    s.head_top1 = split.test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(split.test.size());
  }
  if (c.eval.projection) s.projection = project_2d(features);
  return s;
}

void write_run_artifacts(const std::filesystem::path& dir, const json& resolved, const RunReport& report) {
  json j = to_json(report);
  j["config"] = resolved;
  write_json(dir / artifact::kRunReport, j);
  io::write_text_file(dir / artifact::kEpochs, csv_preamble(resolved) + epochs_csv(report));
}

void write_eval_artifacts(const std::filesystem::path& dir, const json& resolved,
                          const EvalSummary& s, std::span<const Video> videos,
                          const std::string& checkpoint) {
  const auto seed = resolved.at("seed");
  json probe = {{"config", resolved}, {"seed", seed}, {"checkpoint", checkpoint}};
  probe["probe"] = {{"top1", s.probe.top1},
                    {"per_class_accuracy", s.probe.per_class_accuracy},
                    {"per_class_count", s.probe.per_class_count},
                    {"split_seed", s.probe.split_seed},
                    {"train_size", s.probe.train_size},
                    {"test_size", s.probe.test_size}};
  if (s.knn_top1) probe["knn_top1"] = *s.knn_top1;
  if (s.head_top1) probe["head_top1"] = *s.head_top1;
  write_json(dir / artifact::kProbe, probe);

  if (s.class_overlap) {
    write_json(dir / artifact::kOverlap, {{"config", resolved},
                                          {"seed", seed},
                                          {"checkpoint", checkpoint},
                                          {"split", "held-out"},
                                          {"class_overlap", *s.class_overlap}});
  }
  if (s.projection) {
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_preamble(resolved) << "video_id,label,x,y\n";
    for (std::size_t i = 0; i < videos.size(); ++i) {
      csv << videos[i].video_id << ',' << videos[i].label << ',' << s.projection->coords(i, 0) << ','
          << s.projection->coords(i, 1) << '\n';
    }
    io::write_text_file(dir / artifact::kProjection, csv.str());
  }
}

namespace {

bool is_run_dir(const std::filesystem::path& p) {
  return std::filesystem::exists(p / artifact::kProbe) || std::filesystem::exists(p / artifact::kRunReport);
}

std::map<std::string, double> run_metrics(const std::filesystem::path& dir) {
  std::map<std::string, double> m;
  if (std::filesystem::exists(dir / artifact::kProbe)) {
    const json j = read_json(dir / artifact::kProbe);
    if (j.contains("probe")) m["probe_top1"] = j["probe"].at("top1").get<double>();
    if (j.contains("knn_top1")) m["knn_top1"] = j["knn_top1"].get<double>();
    if (j.contains("head_top1")) m["head_top1"] = j["head_top1"].get<double>();
  }
  if (std::filesystem::exists(dir / artifact::kOverlap)) {
    m["class_overlap"] = read_json(dir / artifact::kOverlap).at("class_overlap").get<double>();
  }
  if (std::filesystem::exists(dir / artifact::kRunReport)) {
    const json j = read_json(dir / artifact::kRunReport);
    const auto& epochs = j.at("epochs");
    if (!epochs.empty()) {
      const auto& last = epochs.back();
      m["final_contrastive_loss"] = last.at("contrastive_loss").get<double>();
      if (j.at("mode") == "train-joint") {
        m["final_ce_loss"] = last.at("ce_loss").get<double>();
        m["final_joint_loss"] = last.at("joint_loss").get<double>();
      }
    }
  }
  return m;
}

}  // namespace

std::string aggregate_runs(const std::vector<std::filesystem::path>& arms) {
  if (arms.empty()) throw ConfigError("report: no runs given");
  struct Arm {
    std::string name;
    std::vector<std::map<std::string, double>> runs;
  };
  std::vector<Arm> rows;
  std::set<std::string> metric_names;
  for (const auto& arm : arms) {
    if (!std::filesystem::is_directory(arm)) throw IoError("report: " + arm.string() + " is not a directory");
    Arm row{arm.filename().empty() ? arm.parent_path().filename().string() : arm.filename().string(), {}};
    std::vector<std::filesystem::path> runs;
    if (is_run_dir(arm)) {
      runs.push_back(arm);
    } else {
      for (const auto& entry : std::filesystem::directory_iterator(arm)) {
        if (entry.is_directory() && is_run_dir(entry.path())) runs.push_back(entry.path());
      }
      std::sort(runs.begin(), runs.end());
    }
    if (runs.empty()) throw IoError("report: no run outputs under " + arm.string());
    for (const auto& r : runs) {
      row.runs.push_back(run_metrics(r));
      for (const auto& [k, v] : row.runs.back()) metric_names.insert(k);
    }
    rows.push_back(std::move(row));
  }

  std::ostringstream out;
  out.precision(17);
  out << "arm,n_runs";
  for (const auto& m : metric_names) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (const Arm& arm : rows) {
    out << arm.name << ',' << arm.runs.size();
    for (const auto& m : metric_names) {
      std::vector<double> values;
      for (const auto& r : arm.runs) {
        if (auto it = r.find(m); it != r.end()) values.push_back(it->second);
      }
      if (values.empty()) {
        out << ",,";
        continue;
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
      out << ',' << mean << ',' << sd;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dtg
