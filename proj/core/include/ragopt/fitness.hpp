#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ragopt/corpus.hpp"
#include "ragopt/evolve.hpp"
#include "ragopt/gateway.hpp"
#include "ragopt/index.hpp"
#include "ragopt/metrics.hpp"
#include "ragopt/pipeline.hpp"
#include "ragopt/searchspace.hpp"

#include "json.hpp"

namespace ragopt {

struct FitnessRecord {
  std::string genome;  // canonical "[i,...]" form
  double fitness = 0.0;
  double retrieval_score = 0.0;
  double generation_score = 0.0;
  double recall_at_k = 0.0;
  double map = 0.0;
  double ndcg_at_k = 0.0;
  double mrr = 0.0;
  double llm_judge = 0.0;
  double semantic = 0.0;
  int question_count = 0;
  std::string dataset_fingerprint;
  std::string provider_profile;
  std::string timestamp;  // ISO-8601 UTC, set at evaluation time

  nlohmann::json to_json() const;
  static FitnessRecord from_json(const nlohmann::json& j);
};

/// Append-only JSONL store (one record per line). The last record for a
/// (genome, fingerprint, profile) key wins; corrupt lines are skipped with a
/// warning. Reads are lock-free after load; appends are serialized.
class FitnessCache {
 public:
  explicit FitnessCache(std::filesystem::path file);

  std::optional<FitnessRecord> get(const std::string& genome, const std::string& fingerprint,
                                   const std::string& profile) const;
  void put(const FitnessRecord& record);

  std::size_t size() const;
  long corrupt_lines() const { return corrupt_; }
  const std::filesystem::path& path() const { return file_; }

  /// Removes every entry and truncates the file.
  void clear();

 private:
  static std::string key_of(const std::string& genome, const std::string& fingerprint,
                            const std::string& profile);

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::string, FitnessRecord> entries_;
  long corrupt_ = 0;
};

/// Runs the decoded pipeline over every question and aggregates the metric
/// means into a FitnessRecord (Recall@k, mAP, nDCG@k, MRR on the retrieval
/// side; judge and semantic similarity on the generation side).
class GenomeEvaluator {
 public:
  GenomeEvaluator(const SearchSpace& space, const Corpus& corpus, std::vector<QAItem> qa,
                  Gateway& gateway, const TemplateSet& templates, IndexManager& indexes,
                  PipelineParams pipeline_params, MetricParams metric_params,
                  std::string dataset_fingerprint, int parallelism = 1);

  FitnessRecord evaluate(const Genome& genome) const;

  /// Per-question traces of the most recent evaluate() call (kept only when
  /// collect_traces(true) was set; not thread-safe across calls).
  void collect_traces(bool on) { collect_traces_ = on; }
  const std::vector<StageTrace>& traces() const { return traces_; }

  const std::string& dataset_fingerprint() const { return fingerprint_; }
  std::string provider_profile() const { return gateway_.profile_id(); }
  const std::vector<QAItem>& questions() const { return qa_; }

 private:
  const SearchSpace& space_;
  const Corpus& corpus_;
  std::vector<QAItem> qa_;
  Gateway& gateway_;
  const TemplateSet& templates_;
  IndexManager& indexes_;
  PipelineParams pipeline_params_;
  MetricParams metric_params_;
  std::string fingerprint_;
  int parallelism_;
  bool collect_traces_ = false;
  mutable std::vector<StageTrace> traces_;
};

/// Memoizing front of a GenomeEvaluator; the call operator plugs directly
/// into run_search as its fitness handle.
class CachedEvaluator {
 public:
  CachedEvaluator(const GenomeEvaluator& evaluator, FitnessCache& cache);

  EvalOutcome operator()(const Genome& genome);

  /// Full record through the same cache path.
  FitnessRecord record(const Genome& genome);

  long evaluations() const { return evaluations_; }
  long hits() const { return hits_; }

 private:
  FitnessRecord lookup(const Genome& genome, bool* hit);

  const GenomeEvaluator& evaluator_;
  FitnessCache& cache_;
  long evaluations_ = 0;
  long hits_ = 0;
};

std::string iso8601_utc_now();

}  // namespace ragopt
