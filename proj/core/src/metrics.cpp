#include "ragopt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

void validate(const RetrievalJudgment& j) {
  if (j.gold.empty()) throw EmptyGold("retrieval judgment has an empty gold set");
  std::unordered_set<std::string> seen;
  for (const auto& id : j.ranked) {
    if (!seen.insert(id).second) throw Error("ranked list contains duplicate id '" + id + "'");
  }
}

}  // namespace

double recall_at_k(const RetrievalJudgment& j, int k) {
  validate(j);
  const size_t top = std::min<size_t>(j.ranked.size(), static_cast<size_t>(std::max(k, 0)));
  long hits = 0;
  for (size_t i = 0; i < top; ++i) {
    if (j.gold.count(j.ranked[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(j.gold.size());
}

double mean_average_precision(const RetrievalJudgment& j) {
  validate(j);
  double sum = 0.0;
  long relevant_seen = 0;
  for (size_t i = 0; i < j.ranked.size(); ++i) {
    if (j.gold.count(j.ranked[i])) {
      ++relevant_seen;
      sum += static_cast<double>(relevant_seen) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(j.gold.size());
}

double ndcg_at_k(const RetrievalJudgment& j, int k) {
  validate(j);
  const size_t top = std::min<size_t>(j.ranked.size(), static_cast<size_t>(std::max(k, 0)));
  double dcg = 0.0;
  for (size_t i = 0; i < top; ++i) {
    if (j.gold.count(j.ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  const size_t ideal = std::min<size_t>(j.gold.size(), static_cast<size_t>(std::max(k, 0)));
  double idcg = 0.0;
  for (size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  if (idcg <= 0.0) return 0.0;
  return dcg / idcg;
}

double mrr(const RetrievalJudgment& j) {
  validate(j);
  for (size_t i = 0; i < j.ranked.size(); ++i) {
    if (j.gold.count(j.ranked[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

Scalarized scalarize(const RetrievalMeans& retrieval, const GenerationMeans& generation) {
  Scalarized s;
  s.retrieval_score = (retrieval.recall + retrieval.map + retrieval.ndcg + retrieval.mrr) / 4.0;
  s.generation_score = (generation.llm + generation.semantic) / 2.0;
  s.fitness = (s.retrieval_score + s.generation_score) / 2.0;
  return s;
}

}  // namespace ragopt
