#include <benchmark/benchmark.h>

#include "ragopt/corpus.hpp"
#include "ragopt/evolve.hpp"
#include "ragopt/index.hpp"
#include "ragopt/metrics.hpp"
#include "ragopt/pipeline.hpp"
#include "ragopt/searchspace.hpp"
#include "ragopt/stub_gateway.hpp"

using namespace ragopt;

namespace {

RetrievalJudgment bench_judgment() {
  RetrievalJudgment j;
  for (int i = 0; i < 20; ++i) j.ranked.push_back("d" + std::to_string(i));
  j.ranked[2] = "g0";
  j.ranked[7] = "g1";
  j.ranked[11] = "g2";
  j.gold = {"g0", "g1", "g2", "g3"};
  return j;
}

const Corpus& bench_corpus() {
  static const Corpus corpus = load_corpus(RAGOPT_TEST_DATA_DIR "/toy_corpus.jsonl");
  return corpus;
}

const IndexBundle& bench_bundle() {
  static StubGateway gateway;
  static const TemplateSet templates = TemplateSet::builtin();
  static const IndexBundle bundle = build_indexes(bench_corpus(), "none", gateway, templates);
  return bundle;
}

}  // namespace

static void BM_metric_kernels(benchmark::State& state) {
  const RetrievalJudgment j = bench_judgment();
  for (auto _ : state) {
    benchmark::DoNotOptimize(recall_at_k(j, 5));
    benchmark::DoNotOptimize(mean_average_precision(j));
    benchmark::DoNotOptimize(ndcg_at_k(j, 5));
    benchmark::DoNotOptimize(mrr(j));
  }
}
BENCHMARK(BM_metric_kernels);

static void BM_bm25_top_n(benchmark::State& state) {
  const IndexBundle& bundle = bench_bundle();
  const std::vector<std::string> query = {"fourier", "transform", "frequency", "signal"};
  for (auto _ : state) {
    benchmark::DoNotOptimize(bundle.bm25.top_n(query, 20));
  }
}
BENCHMARK(BM_bm25_top_n);

static void BM_vector_top_n(benchmark::State& state) {
  const IndexBundle& bundle = bench_bundle();
  const auto query = StubGateway::stub_embedding("what maps every term to the list of documents");
  for (auto _ : state) {
    benchmark::DoNotOptimize(bundle.vectors.top_n(query, 20));
  }
}
BENCHMARK(BM_vector_top_n);

static void BM_stub_embedding(benchmark::State& state) {
  const std::string text =
      "The Fast Fourier Transform is an algorithm that computes the Discrete Fourier "
      "Transform in n log n operations.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(StubGateway::stub_embedding(text));
  }
}
BENCHMARK(BM_stub_embedding);

static void BM_rrf_fuse(benchmark::State& state) {
  std::vector<std::vector<RankedPassage>> lists(3);
  for (int l = 0; l < 3; ++l) {
    for (int i = 0; i < 20; ++i) {
      lists[l].push_back({"c" + std::to_string((i * (l + 3)) % 25), "", 20.0 - i, i + 1, "bench"});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(rrf_fuse(lists, 60.0));
  }
}
BENCHMARK(BM_rrf_fuse);

static void BM_crossover_mutate(benchmark::State& state) {
  const SearchSpace space = build_default_space();
  Rng rng(1);
  const Genome a = random_genome(space, rng);
  const Genome b = random_genome(space, rng);
  const MutationSpec spec{MutationMethod::adaptive, 0.08, 0.01, 0.2};
  for (auto _ : state) {
    auto [c1, c2] = crossover(a, b, CrossoverMethod::uniform, 0.6, rng, space);
    benchmark::DoNotOptimize(mutate(c1, spec, 0.5, rng, space));
    benchmark::DoNotOptimize(mutate(c2, spec, 0.5, rng, space));
  }
}
BENCHMARK(BM_crossover_mutate);

static void BM_run_search_synthetic(benchmark::State& state) {
  const SearchSpace space = build_default_space();
  const Genome argmax = {2, 5, 3, 1, 1, 2, 1, 1, 1};
  auto fitness = [&](const Genome& g) {
    double sum = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
      sum += g[i] == argmax[i] ? 1.0 : 0.1;
    }
    return EvalOutcome{sum / 9.0, false};
  };
  GAParams params;
  params.seed = 42;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_search(space, params, fitness));
  }
}
BENCHMARK(BM_run_search_synthetic);

static void BM_pipeline_baseline_question(benchmark::State& state) {
  const Corpus& corpus = bench_corpus();
  const IndexBundle& bundle = bench_bundle();
  StubGateway gateway;
  const TemplateSet templates = TemplateSet::builtin();
  const SearchSpace space = build_default_space();
  const PipelineConfig config = decode(space, baseline_genome(space));
  QAItem qa;
  qa.question_id = "bench";
  qa.question = "What maps every term to the list of documents that contain it?";
  qa.gold_answer = "An Inverted Index maps every term to the list of documents that contain it.";
  qa.gold_chunk_ids = {"se-01"};
  const PipelineParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_pipeline(qa, config, bundle, corpus, gateway, templates, params));
  }
}
BENCHMARK(BM_pipeline_baseline_question);

BENCHMARK_MAIN();
