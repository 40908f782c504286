#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dtg/experiment.hpp"
#include "dtg/losses.hpp"
#include "dtg/trainer.hpp"

namespace {

using namespace dtg;

Vector unit(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> n;
  Vector v(d);
  for (double& x : v) x = n(gen);
  return l2_normalize(v);
}

Matrix unit_rows(std::mt19937_64& gen, std::size_t rows, std::size_t d) {
  Matrix m(rows, d);
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector v = unit(gen, d);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

void BM_InfoNce(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(1);
  const Vector a = unit(gen, 16), pos = unit(gen, 16);
  const Matrix negs = unit_rows(gen, K, 16);
  for (auto _ : state) benchmark::DoNotOptimize(info_nce(a, pos, negs, 0.07));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_InfoNce)->Arg(8)->Arg(64)->Arg(256);

void BM_FusedContrastive(benchmark::State& state) {
  std::mt19937_64 gen(2);
  const Vector a = unit(gen, 16);
  std::vector<Vector> pos;
  std::vector<Matrix> negs;
  for (int k = 0; k < 4; ++k) {
    pos.push_back(unit(gen, 16));
    negs.push_back(unit_rows(gen, 256, 16));
  }
  ContrastiveOptions opt;
  opt.scheme = WeightScheme::online1();
  opt.fusion = state.range(0) == 0 ? FusionLevel::Loss : FusionLevel::Feature;
  for (auto _ : state) benchmark::DoNotOptimize(fused_contrastive(a, pos, negs, opt));
}
BENCHMARK(BM_FusedContrastive)->Arg(0)->Arg(1);

void BM_StudentBatch(benchmark::State& state) {
  CorpusSpec spec;
  spec.seed = 3;
  const Corpus corpus = generate_corpus(spec);
  const TeacherBank bank({build_teacher(corpus.signal_basis, corpus.nuisance_basis, 0.9, 16, 4)});
  TrainConfig cfg;
  const StudentEncoder student = StudentEncoder::build(spec.frame_dim, cfg.hidden_dim, cfg.embed_dim, 5);
  std::mt19937_64 gen(6);
  const std::vector<Matrix> negs{unit_rows(gen, cfg.queue_size, cfg.embed_dim)};
  std::vector<const Video*> batch;
  for (std::size_t i = 0; i < cfg.batch_size; ++i) batch.push_back(&corpus.videos[i * 7 % corpus.videos.size()]);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(cfg, student, nullptr, bank, batch, negs, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_StudentBatch)->Unit(benchmark::kMicrosecond);

void BM_PretrainEpoch(benchmark::State& state) {
  CorpusSpec spec;
  spec.seed = 7;
  const Corpus corpus = generate_corpus(spec);
  const TeacherBank bank({build_teacher(corpus.signal_basis, corpus.nuisance_basis, 0.9, 16, 8)});
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.milestones = {};
  cfg.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pretrain(cfg, corpus.videos, bank));
}
BENCHMARK(BM_PretrainEpoch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
