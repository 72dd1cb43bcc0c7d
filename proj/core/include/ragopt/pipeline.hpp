#pragma once

#include <map>
#include <string>
#include <vector>

#include "ragopt/corpus.hpp"
#include "ragopt/gateway.hpp"
#include "ragopt/index.hpp"
#include "ragopt/metrics.hpp"
#include "ragopt/searchspace.hpp"
#include "ragopt/templates.hpp"

#include "json.hpp"

namespace ragopt {

struct PipelineParams {
  int n_retrieve = 20;           // candidates per query
  int m_expansions = 3;          // expanded-query count
  int top_k_filter = 5;          // simple_threshold cutoff
  double similarity_threshold = 0.7;  // on min-max normalized scores
  double rrf_k = 60.0;
  double rse_decay = 0.5;        // neighbor-inclusion fraction for RSE
  int compression_batch = 4;

  void validate() const;
};

struct RankedPassage {
  std::string id;    // chunk id, or a synthetic id for merged segments
  std::string text;
  double score = 0.0;
  int rank = 0;
  std::string stage;  // stage that attributed the score
};

struct StageRecord {
  std::string stage;
  std::string technique;
  int in_count = 0;
  int out_count = 0;
  std::vector<std::string> ids;
  std::vector<double> scores;
  double ms = 0.0;
  std::vector<std::string> notes;
};

struct StageTrace {
  std::string question_id;
  std::vector<StageRecord> stages;
  // Provider-call deltas for this question; exact under sequential
  // evaluation (counters are process-wide, so concurrent questions blur the
  // per-question split).
  CallCounts calls;

  nlohmann::json to_json(bool include_timings = true) const;
};

/// One retrieval query; vector search embeds embed_text (HyDE swaps in the
/// hypothetical answer there while lexical stages keep the original text).
struct QueryRep {
  std::string text;
  std::string embed_text;
};

std::vector<QueryRep> expand_query(const std::string& question, const std::string& technique,
                                   Gateway& gateway, const TemplateSet& templates,
                                   const GraphIndex* graph, const PipelineParams& params,
                                   std::vector<std::string>* warnings = nullptr);

/// Per-query ranked candidate lists, each of at most n_retrieve passages.
/// A query that matches nothing under the configured technique degrades to
/// BM25 and finally to a zero-scored corpus prefix, so retrieval always
/// yields candidates on a non-empty corpus.
std::vector<std::vector<RankedPassage>> retrieve(const std::vector<QueryRep>& queries,
                                                 const std::string& technique, const IndexBundle& bundle,
                                                 const Corpus& corpus, Gateway& gateway,
                                                 const PipelineParams& params,
                                                 std::vector<std::string>* warnings = nullptr);

/// score(c) = sum over lists containing c of 1/(rrf_k + rank). Ties by id.
std::vector<RankedPassage> rrf_fuse(const std::vector<std::vector<RankedPassage>>& lists, double rrf_k);

std::vector<RankedPassage> rerank(const std::string& question, const std::vector<RankedPassage>& candidates,
                                  const std::string& technique, Gateway& gateway,
                                  const TemplateSet& templates,
                                  std::vector<std::string>* warnings = nullptr);

std::vector<RankedPassage> filter_passages(const std::vector<RankedPassage>& ranked,
                                           const std::string& technique, const PipelineParams& params);

/// Retrieval scores of chunks that were ranked before filtering; RSE consults
/// it when deciding whether to bridge a one-chunk gap.
using ScoreLookup = std::map<std::string, double>;

std::vector<RankedPassage> augment_passages(const std::vector<RankedPassage>& kept,
                                            const std::string& technique, const Corpus& corpus,
                                            const ScoreLookup& retrieval_scores,
                                            const PipelineParams& params);

std::vector<RankedPassage> compress_passages(const std::vector<RankedPassage>& passages,
                                             const std::string& technique, const std::string& question,
                                             Gateway& gateway, const TemplateSet& templates, int batch);

std::string make_prompt(const std::string& question, const std::vector<RankedPassage>& passages,
                        const std::string& technique, const TemplateSet& templates);

/// Layout order for long_context_reorder: ranks [1,3,5,...] then [...,6,4,2],
/// best at both extremes and worst in the middle.
std::vector<int> long_context_layout(int n);

std::string generate(const std::string& prompt, Gateway& gateway);

std::string post_generate(const std::string& question, const std::string& answer,
                          const std::string& context, const std::string& technique, Gateway& gateway,
                          const TemplateSet& templates);

struct PipelineResult {
  RetrievalJudgment judgment;  // captured after filtering, before augmentation
  std::string answer;
  StageTrace trace;
};

PipelineResult run_pipeline(const QAItem& qa, const PipelineConfig& config, const IndexBundle& bundle,
                            const Corpus& corpus, Gateway& gateway, const TemplateSet& templates,
                            const PipelineParams& params);

}  // namespace ragopt
