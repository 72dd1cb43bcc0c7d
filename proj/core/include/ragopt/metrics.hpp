#pragma once

#include <set>
#include <string>
#include <vector>

namespace ragopt {

struct MetricParams {
  int k = 5;
};

/// Ranked chunk ids as they stand after reranking and passage filtering,
/// paired with the question's gold chunk-id set.
struct RetrievalJudgment {
  std::vector<std::string> ranked;
  std::set<std::string> gold;
};

struct GenerationJudgment {
  double llm_judge_score = 0.0;
  double semantic_score = 0.0;
};

/// |gold ∩ top-k| / |gold|.
double recall_at_k(const RetrievalJudgment& j, int k);

/// Mean over gold items of precision at each relevant rank; gold items not
/// retrieved contribute zero terms against the |gold| divisor.
double mean_average_precision(const RetrievalJudgment& j);

/// Binary-gain DCG@k over ideal DCG@k, discount 1/log2(rank+1).
double ndcg_at_k(const RetrievalJudgment& j, int k);

/// Reciprocal rank of the first gold item in the full list; 0 when absent.
double mrr(const RetrievalJudgment& j);

struct RetrievalMeans {
  double recall = 0.0;
  double map = 0.0;
  double ndcg = 0.0;
  double mrr = 0.0;
};

struct GenerationMeans {
  double llm = 0.0;
  double semantic = 0.0;
};

struct Scalarized {
  double retrieval_score = 0.0;
  double generation_score = 0.0;
  double fitness = 0.0;
};

/// retrieval = mean of four retrieval metrics, generation = mean of the two
/// generation metrics, fitness = mean of those two scores.
Scalarized scalarize(const RetrievalMeans& retrieval, const GenerationMeans& generation);

}  // namespace ragopt
