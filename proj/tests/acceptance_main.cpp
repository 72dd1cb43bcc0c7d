// Acceptance suite: one self-contained check per release criterion, each
// printing a PASS/FAIL line with its runtime. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ragopt/config.hpp"
#include "ragopt/corpus.hpp"
#include "ragopt/evolve.hpp"
#include "ragopt/fitness.hpp"
#include "ragopt/index.hpp"
#include "ragopt/metrics.hpp"
#include "ragopt/pipeline.hpp"
#include "ragopt/report.hpp"
#include "ragopt/searchspace.hpp"
#include "ragopt/stub_gateway.hpp"
#include "test_util.hpp"

#include "json.hpp"

using namespace ragopt;
using nlohmann::json;

namespace {

struct Criterion {
  int number;
  std::string label;
  double limit_s;
  std::function<void(std::vector<std::string>&)> run;  // appends failure details
};

bool approx(double actual, double expected, double tolerance) {
  return std::fabs(actual - expected) <= tolerance;
}

void expect(std::vector<std::string>& failures, bool ok, const std::string& what) {
  if (!ok) failures.push_back(what);
}

void expect_near(std::vector<std::string>& failures, double actual, double expected, double tolerance,
                 const std::string& what) {
  if (!approx(actual, expected, tolerance)) {
    std::ostringstream msg;
    msg << what << ": got " << actual << ", expected " << expected << " +/- " << tolerance;
    failures.push_back(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Criterion 1: scalarization anchors from the published tables.

struct DomainAnchors {
  std::string name;
  // retrieval components (recall, map, ndcg, mrr) and published overall
  double best_r[4], best_r_overall;
  double base_r[4], base_r_overall;
  // generation components (llm, semantic) and published overall
  double best_g[2], best_g_overall;
  double base_g[2], base_g_overall;
};

const std::vector<DomainAnchors> kAnchors = {
    {"Finance",
     {0.895, 0.813, 0.871, 0.952}, 0.883, {0.848, 0.764, 0.800, 0.862}, 0.819,
     {0.890, 0.916}, 0.903, {0.870, 0.915}, 0.893},
    {"Law",
     {0.888, 0.828, 0.875, 0.948}, 0.885, {0.875, 0.782, 0.825, 0.877}, 0.840,
     {0.889, 0.927}, 0.908, {0.857, 0.916}, 0.887},
    {"Math",
     {0.893, 0.781, 0.844, 0.892}, 0.852, {0.845, 0.753, 0.792, 0.844}, 0.808,
     {0.871, 0.916}, 0.893, {0.810, 0.899}, 0.855},
    {"Medicine",
     {0.888, 0.828, 0.875, 0.948}, 0.885, {0.906, 0.824, 0.860, 0.914}, 0.876,
     {0.881, 0.924}, 0.903, {0.837, 0.898}, 0.867},
    {"Defense",
     {0.904, 0.810, 0.867, 0.930}, 0.878, {0.881, 0.818, 0.851, 0.919}, 0.867,
     {0.837, 0.913}, 0.875, {0.823, 0.906}, 0.865},
    {"ComputerScience",
     {0.890, 0.823, 0.873, 0.945}, 0.883, {0.837, 0.721, 0.763, 0.818}, 0.785,
     {0.887, 0.903}, 0.895, {0.860, 0.897}, 0.879},
};

void criterion_scalarization(std::vector<std::string>& failures) {
  // Finance triple at +/-0.0005: retrieval 0.883, generation 0.903, F 0.893.
  const Scalarized finance = scalarize({0.895, 0.813, 0.871, 0.952}, {0.890, 0.916});
  expect_near(failures, finance.retrieval_score, 0.883, 0.0005, "Finance best retrieval");
  expect_near(failures, finance.generation_score, 0.903, 0.0005, "Finance best generation");
  expect_near(failures, finance.fitness, 0.893, 0.0005, "Finance best overall F");

  // Every domain's Best and Baseline rows: the recomputed Overall columns
  // agree with the published ones within +/-0.001 rounding slack.
  for (const auto& domain : kAnchors) {
    const Scalarized best = scalarize({domain.best_r[0], domain.best_r[1], domain.best_r[2],
                                       domain.best_r[3]},
                                      {domain.best_g[0], domain.best_g[1]});
    const Scalarized base = scalarize({domain.base_r[0], domain.base_r[1], domain.base_r[2],
                                       domain.base_r[3]},
                                      {domain.base_g[0], domain.base_g[1]});
    expect_near(failures, best.retrieval_score, domain.best_r_overall, 0.001,
                domain.name + " best retrieval overall");
    expect_near(failures, base.retrieval_score, domain.base_r_overall, 0.001,
                domain.name + " baseline retrieval overall");
    expect_near(failures, best.generation_score, domain.best_g_overall, 0.001,
                domain.name + " best generation overall");
    expect_near(failures, base.generation_score, domain.base_g_overall, 0.001,
                domain.name + " baseline generation overall");
  }
}

// ---------------------------------------------------------------------------
// Criterion 2: search-space cardinality by exhaustive enumeration.

void criterion_cardinality(std::vector<std::string>& failures) {
  const SearchSpace space = build_default_space();
  expect(failures, cardinality(space) == 46080,
         "cardinality() reported " + std::to_string(cardinality(space)));

  // Mixed-radix enumeration of every genome.
  Genome g(space.families.size(), 0);
  std::uint64_t enumerated = 0;
  std::uint64_t feasible = 0;
  for (;;) {
    ++enumerated;
    if (is_feasible(space, g)) ++feasible;
    size_t pos = 0;
    while (pos < g.size()) {
      if (++g[pos] < static_cast<int>(space.families[pos].options.size())) break;
      g[pos] = 0;
      ++pos;
    }
    if (pos == g.size()) break;
  }
  expect(failures, enumerated == 46080, "enumerated " + std::to_string(enumerated) + " genomes");
  expect(failures, feasible == 46080,
         "feasible count " + std::to_string(feasible) + " (default space must keep the full product)");
}

// ---------------------------------------------------------------------------
// Criterion 3: metric kernels vs brute-force references on 1000 instances.

void criterion_metric_oracles(std::vector<std::string>& failures) {
  Rng rng(20260808);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const int candidates = 1 + static_cast<int>(rng.uniform_u64(20));
    const int gold_count = 1 + static_cast<int>(rng.uniform_u64(5));
    RetrievalJudgment j;
    for (int g = 0; g < gold_count; ++g) j.gold.insert("g" + std::to_string(g));
    for (int c = 0; c < candidates; ++c) {
      if (rng.bernoulli(0.4)) {
        const std::string id = "g" + std::to_string(rng.uniform_u64(5));
        if (std::find(j.ranked.begin(), j.ranked.end(), id) == j.ranked.end()) {
          j.ranked.push_back(id);
          continue;
        }
      }
      j.ranked.push_back("d" + std::to_string(c));
    }
    if (!approx(recall_at_k(j, 5), oracle::recall_at_k(j.ranked, j.gold, 5), 1e-9)) ++mismatches;
    if (!approx(mean_average_precision(j), oracle::average_precision(j.ranked, j.gold), 1e-9)) {
      ++mismatches;
    }
    if (!approx(ndcg_at_k(j, 5), oracle::ndcg_at_k(j.ranked, j.gold, 5), 1e-9)) ++mismatches;
    if (!approx(mrr(j), oracle::mrr(j.ranked, j.gold), 1e-9)) ++mismatches;
  }
  expect(failures, mismatches == 0, std::to_string(mismatches) + " metric/oracle disagreements");
}

// ---------------------------------------------------------------------------
// Criterion 4: GA correctness at desk scale.

struct DeskFitness {
  std::vector<std::vector<double>> tables;
  Genome optimum;

  explicit DeskFitness(const SearchSpace& space) {
    optimum = {2, 5, 3, 1, 1, 2, 1, 1, 1};
    for (size_t i = 0; i < space.families.size(); ++i) {
      const int d = static_cast<int>(space.families[i].options.size());
      std::vector<double> table(d);
      for (int j = 0; j < d; ++j) {
        table[j] = (j == optimum[i]) ? 1.0 : 0.1 * static_cast<double>(j + 1) / static_cast<double>(d);
      }
      tables.push_back(std::move(table));
    }
  }
  double operator()(const Genome& g) const {
    double sum = 0.0;
    for (size_t i = 0; i < g.size(); ++i) sum += tables[i][g[i]];
    return sum / static_cast<double>(g.size());
  }
};

void criterion_ga_desk_scale(std::vector<std::string>& failures) {
  const SearchSpace space = build_default_space();
  const DeskFitness fitness(space);

  GAParams params;  // P=16, T=20, k=5, uniform crossover 0.6, adaptive [0.01,0.2]
  params.seed = 42;

  auto evaluate = [&](const Genome& g) { return EvalOutcome{fitness(g), false}; };
  const SearchResult first = run_search(space, params, evaluate);
  const SearchResult second = run_search(space, params, evaluate);

  expect(failures, first.best_genome == fitness.optimum,
         "best genome " + genome_key(first.best_genome) + " is not the per-gene argmax " +
             genome_key(fitness.optimum));
  for (size_t i = 1; i < first.stats.trace.size(); ++i) {
    expect(failures,
           first.stats.trace[i].best_fitness >= first.stats.trace[i - 1].best_fitness,
           "best-so-far decreased at generation " + std::to_string(i));
  }
  expect(failures, first.best_genome == second.best_genome && first.best_fitness == second.best_fitness,
         "two identical runs disagreed");
  expect(failures, first.stats.evaluations_total == second.stats.evaluations_total,
         "evaluation counts differ between identical runs");
}

// ---------------------------------------------------------------------------
// Shared toy-world plumbing for criteria 5 and 6.

struct ToyWorld {
  testutil::TempDir tmp;
  Corpus corpus;
  std::vector<QAItem> qa;
  StubGateway gateway;
  TemplateSet templates = TemplateSet::builtin();
  SearchSpace space = build_default_space();
  std::string fingerprint;
  IndexManager indexes;
  GenomeEvaluator evaluator;

  ToyWorld()
      : corpus(load_corpus(testutil::data_path("toy_corpus.jsonl"))),
        qa(load_qa(testutil::data_path("toy_qa.jsonl"), corpus)),
        fingerprint(dataset_fingerprint(testutil::data_path("toy_corpus.jsonl"),
                                        testutil::data_path("toy_qa.jsonl"))),
        indexes(corpus, gateway, templates, tmp.path / "indexes", fingerprint),
        evaluator(space, corpus, qa, gateway, templates, indexes, PipelineParams{}, MetricParams{},
                  fingerprint) {}
};

// Criterion 5: the cache eliminates redundant evaluations.

void criterion_cache(std::vector<std::string>& failures) {
  ToyWorld world;
  FitnessCache cache(world.tmp.file("fitness_cache.jsonl"));

  // Instrumented evaluator behind the cache.
  long inner_evaluations = 0;
  struct CountingEvaluator {
    const GenomeEvaluator& inner;
    long& count;
    FitnessCache& cache;
    std::string fingerprint;

    EvalOutcome operator()(const Genome& g) {
      const std::string key = genome_key(g);
      if (auto hit = cache.get(key, fingerprint, "stub")) return {hit->fitness, true};
      ++count;
      FitnessRecord fresh = inner.evaluate(g);
      cache.put(fresh);
      return {fresh.fitness, false};
    }
  };
  CountingEvaluator counting{world.evaluator, inner_evaluations, cache, world.fingerprint};

  // A proposal stream of 120 offspring of which 30 are repeats.
  Rng rng(7);
  std::vector<Genome> distinct;
  std::set<std::string> seen;
  while (distinct.size() < 90) {
    Genome g = random_genome(world.space, rng);
    if (seen.insert(genome_key(g)).second) distinct.push_back(std::move(g));
  }
  std::vector<Genome> proposals = distinct;
  for (int i = 0; i < 30; ++i) proposals.push_back(distinct[i]);

  std::vector<double> first_scores;
  for (const auto& genome : proposals) first_scores.push_back(counting(genome).fitness);
  expect(failures, inner_evaluations == 90,
         "expected exactly 90 evaluator invocations, got " + std::to_string(inner_evaluations));

  // Second full run against the warm cache: zero invocations, same results.
  inner_evaluations = 0;
  world.gateway.reset_counts();
  std::vector<double> second_scores;
  for (const auto& genome : proposals) second_scores.push_back(counting(genome).fitness);
  expect(failures, inner_evaluations == 0,
         "warm cache still ran " + std::to_string(inner_evaluations) + " evaluations");
  expect(failures, first_scores == second_scores, "warm-cache scores differ from the first run");
  const CallCounts counts = world.gateway.counts();
  expect(failures, counts.chat_total() + counts.embed + counts.rerank == 0,
         "warm cache made provider calls");
}

// ---------------------------------------------------------------------------
// Criterion 6: end-to-end determinism through the CLI with stubs.

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files[std::filesystem::relative(entry.path(), dir).string()] = testutil::slurp(entry.path());
    }
  }
  return files;
}

void criterion_cli_determinism(std::vector<std::string>& failures) {
  ToyWorld world;

  // Baseline call contract, measured per question on a prebuilt index.
  {
    const PipelineConfig config = decode(world.space, baseline_genome(world.space));
    const IndexBundle& bundle = world.indexes.get("none");
    world.gateway.reset_counts();
    for (const auto& qa : world.qa) {
      run_pipeline(qa, config, bundle, world.corpus, world.gateway, world.templates, PipelineParams{});
    }
    const CallCounts counts = world.gateway.counts();
    const long n = static_cast<long>(world.qa.size());
    expect(failures, counts.embed == n,
           "baseline made " + std::to_string(counts.embed) + " embedding calls for " +
               std::to_string(n) + " questions");
    expect(failures, counts.chat_generator == n,
           "baseline made " + std::to_string(counts.chat_generator) + " chat calls for " +
               std::to_string(n) + " questions");
    expect(failures, counts.rerank == 0 && counts.chat_judge == 0,
           "baseline touched rerank or judge endpoints");
  }

  // Two CLI invocations of `search --offline` must produce byte-identical
  // run directories (the second rides the warm cache).
  testutil::TempDir scratch;
  const json config = {
      {"corpus", testutil::data_path("toy_corpus.jsonl").string()},
      {"qa", testutil::data_path("toy_qa.jsonl").string()},
      {"offline", true},
      {"cache_path", (scratch.path / "fitness_cache.jsonl").string()},
      {"output_dir", (scratch.path / "unused").string()},
      {"ga", {{"seed", 42}}},
  };
  testutil::spit(scratch.file("config.json"), config.dump(2));

  auto run_cli = [&](const std::string& out_dir) {
    const std::string command = std::string(RAGOPT_CLI_PATH) + " search --config " +
                                (scratch.path / "config.json").string() + " --offline --out " +
                                out_dir + " > " + out_dir + ".stdout.txt 2>&1";
    return std::system(command.c_str());
  };

  const int rc1 = run_cli((scratch.path / "runA").string());
  const int rc2 = run_cli((scratch.path / "runB").string());
  expect(failures, rc1 == 0, "first search invocation failed");
  expect(failures, rc2 == 0, "second search invocation failed");
  if (rc1 == 0 && rc2 == 0) {
    const auto a = read_dir(scratch.path / "runA");
    const auto b = read_dir(scratch.path / "runB");
    expect(failures, !a.empty(), "run directory is empty");
    expect(failures, a == b, "run directories are not byte-identical");
  }
}

// ---------------------------------------------------------------------------
// Criterion 7: report fidelity against the published tables.

void criterion_report(std::vector<std::string>& failures) {
  // Overall table: six domains, average row renders +3.8%.
  const std::vector<std::tuple<std::string, double, double>> rows = {
      {"Finance", 0.893, 0.855},  {"Law", 0.893, 0.863},     {"Mathematics", 0.873, 0.831},
      {"Medicine", 0.889, 0.872}, {"Defense", 0.876, 0.866}, {"ComputerScience", 0.889, 0.832}};
  std::vector<ReportEntry> entries;
  for (const auto& [name, best, baseline] : rows) {
    ReportEntry entry;
    entry.dataset = name;
    entry.best.fitness = best;
    entry.baseline.fitness = baseline;
    entries.push_back(std::move(entry));
  }
  const ComparisonReport report = build_report(entries);
  expect(failures, report.has_average, "no average row for six domains");
  const std::string average = format_delta_pct(report.average.delta_pct);
  expect(failures, average == "+3.8%", "average delta rendered as " + average);

  // Finance retrieval row deltas.
  const std::vector<std::pair<double, double>> finance = {
      {0.883, 0.819}, {0.895, 0.848}, {0.813, 0.764}, {0.871, 0.800}, {0.952, 0.862}};
  const std::vector<std::string> expected = {"+7.8%", "+5.5%", "+6.4%", "+8.9%", "+10.4%"};
  for (size_t i = 0; i < finance.size(); ++i) {
    const std::string rendered = format_delta_pct(relative_delta_pct(finance[i].first, finance[i].second));
    expect(failures, rendered == expected[i],
           "Finance retrieval delta " + std::to_string(i) + " rendered as " + rendered + ", expected " +
               expected[i]);
  }
}

// ---------------------------------------------------------------------------
// Criterion 8: statement of scope.

void criterion_statement(std::vector<std::string>&) {
  std::puts(
      "  note: absolute per-domain score improvements reported for the source experiments depend on\n"
      "  the six full-size corpora and the production chat/judge/embedding/reranker models; they are\n"
      "  not reproducible at desk scale. Criteria 1-7 pin the arithmetic anchors, oracle equivalence,\n"
      "  and determinism properties instead.");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "scalarization anchors (published tables)", 1.0, criterion_scalarization},
      {2, "search-space cardinality 46080 by exhaustive enumeration", 5.0, criterion_cardinality},
      {3, "metric kernels match brute-force oracles to 1e-9 on 1000 instances", 10.0,
       criterion_metric_oracles},
      {4, "GA finds the separable optimum with seed 42 defaults", 2.0, criterion_ga_desk_scale},
      {5, "cache: 120 proposals / 30 repeats -> 90 evaluations; warm rerun -> 0", 0.0, criterion_cache},
      {6, "CLI search --offline: byte-identical run dirs, baseline 1+1 calls/question", 60.0,
       criterion_cli_determinism},
      {7, "report renders the published +3.8% average and Finance delta row", 0.0, criterion_report},
      {8, "non-reproducibility scope statement", 0.0, criterion_statement},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    std::vector<std::string> failures;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(failures);
    } catch (const std::exception& e) {
      failures.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.limit_s > 0 && elapsed > criterion.limit_s) {
      std::ostringstream msg;
      msg << "runtime " << elapsed << "s exceeds the " << criterion.limit_s << "s limit";
      failures.push_back(msg.str());
    }
    if (failures.empty()) {
      std::printf("PASS criterion %d: %s (%.2fs)\n", criterion.number, criterion.label.c_str(), elapsed);
    } else {
      ++failed;
      std::printf("FAIL criterion %d: %s (%.2fs)\n", criterion.number, criterion.label.c_str(), elapsed);
      for (const auto& failure : failures) std::printf("      - %s\n", failure.c_str());
    }
  }
  if (failed == 0) {
    std::puts("all acceptance criteria passed");
  } else {
    std::printf("%d criterion(s) failed\n", failed);
  }
  return failed;
}
