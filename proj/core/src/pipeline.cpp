#include "ragopt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <set>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

namespace ragopt {

using nlohmann::json;

void PipelineParams::validate() const {
  if (n_retrieve < 1 || m_expansions < 1 || top_k_filter < 1 || compression_batch < 1) {
    throw ConfigError("pipeline counts must be positive");
  }
  if (similarity_threshold < 0.0 || similarity_threshold > 1.0) {
    throw ConfigError("similarity_threshold must be in [0,1]");
  }
  if (rrf_k <= 0.0 || rse_decay < 0.0) throw ConfigError("rrf_k must be positive, rse_decay non-negative");
}

namespace {

/// Sort by score descending, id ascending; assign ranks 1..n.
void finalize_ranks(std::vector<RankedPassage>& list) {
  std::sort(list.begin(), list.end(), [](const RankedPassage& a, const RankedPassage& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (size_t i = 0; i < list.size(); ++i) list[i].rank = static_cast<int>(i + 1);
}

void renumber(std::vector<RankedPassage>& list) {
  for (size_t i = 0; i < list.size(); ++i) list[i].rank = static_cast<int>(i + 1);
}

RankedPassage make_passage(const Corpus& corpus, std::uint32_t chunk, double score,
                           const std::string& stage) {
  const Chunk& c = corpus.at(chunk);
  return {c.chunk_id, c.text, score, 0, stage};
}

std::vector<RankedPassage> from_scored(const Corpus& corpus,
                                       const std::vector<std::pair<double, std::uint32_t>>& scored,
                                       const std::string& stage) {
  std::vector<RankedPassage> out;
  out.reserve(scored.size());
  for (const auto& [score, chunk] : scored) out.push_back(make_passage(corpus, chunk, score, stage));
  finalize_ranks(out);
  return out;
}

std::string numbered_block(const std::vector<RankedPassage>& passages) {
  std::string out;
  for (size_t i = 0; i < passages.size(); ++i) {
    if (i) out += "\n";
    out += "[" + std::to_string(i + 1) + "] " + passages[i].text;
  }
  return out;
}

std::vector<std::string> llm_variants(const std::string& question, const std::string& template_name,
                                      Gateway& gateway, const TemplateSet& templates, int m) {
  const std::string prompt = templates.render(
      template_name, {{"question", question}, {"m", std::to_string(m)}});
  const std::string reply = gateway.chat(ChatRole::generator, {{"user", prompt}});
  std::vector<std::string> variants;
  for (const auto& line : split_lines(reply)) {
    const std::string v = trim(line);
    if (!v.empty()) variants.push_back(v);
    if (static_cast<int>(variants.size()) >= m) break;
  }
  return variants;
}

}  // namespace

std::vector<QueryRep> expand_query(const std::string& question, const std::string& technique,
                                   Gateway& gateway, const TemplateSet& templates,
                                   const GraphIndex* graph, const PipelineParams& params,
                                   std::vector<std::string>* warnings) {
  std::vector<QueryRep> queries = {{question, question}};

  if (technique == "none") {
    return queries;
  }
  if (technique == "multi_query" || technique == "rag_fusion" || technique == "decomposition") {
    for (auto& variant : llm_variants(question, technique, gateway, templates, params.m_expansions)) {
      queries.push_back({variant, variant});
    }
    return queries;
  }
  if (technique == "step_back") {
    const std::string prompt = templates.render("step_back", {{"question", question}});
    const std::string abstract = trim(gateway.chat(ChatRole::generator, {{"user", prompt}}));
    queries.push_back({abstract, abstract});
    return queries;
  }
  if (technique == "hyde") {
    const std::string prompt = templates.render("hyde", {{"question", question}});
    const std::string hypothetical = trim(gateway.chat(ChatRole::generator, {{"user", prompt}}));
    // Lexical matching keeps the question; the vector query becomes the
    // hypothetical answer.
    return {{question, hypothetical}};
  }
  if (technique == "query_rewriting") {
    const std::string prompt = templates.render("query_rewriting", {{"question", question}});
    const std::string rewritten = trim(gateway.chat(ChatRole::generator, {{"user", prompt}}));
    return {{rewritten, rewritten}};
  }
  if (technique == "graph_expansion") {
    if (graph == nullptr || graph->empty()) {
      if (warnings) warnings->push_back("graph_expansion: graph index is empty, using the raw query");
      return queries;
    }
    const auto phrases = graph->relation_phrases(question, params.m_expansions);
    if (phrases.empty() && warnings) {
      warnings->push_back("graph_expansion: no entities matched, using the raw query");
    }
    for (const auto& phrase : phrases) queries.push_back({phrase, phrase});
    return queries;
  }
  throw PipelineFailure("", "query_expansion", "unknown technique '" + technique + "'");
}

std::vector<std::vector<RankedPassage>> retrieve(const std::vector<QueryRep>& queries,
                                                 const std::string& technique, const IndexBundle& bundle,
                                                 const Corpus& corpus, Gateway& gateway,
                                                 const PipelineParams& params,
                                                 std::vector<std::string>* warnings) {
  const size_t n = static_cast<size_t>(params.n_retrieve);
  const bool needs_vectors =
      technique == "vector_retrieval" || technique == "hybrid" || technique == "complete_hybrid";

  // One batched embedding call covers all query representations.
  std::vector<std::vector<double>> query_vectors;
  if (needs_vectors) {
    std::vector<std::string> embed_texts;
    embed_texts.reserve(queries.size());
    for (const auto& query : queries) embed_texts.push_back(query.embed_text);
    query_vectors = gateway.embed(embed_texts);
  }

  auto expand_parents = [&](std::vector<RankedPassage> list) {
    if (bundle.parent_siblings.empty()) return list;
    std::set<std::string> present;
    for (const auto& passage : list) present.insert(passage.id);
    const size_t seeds = list.size();
    for (size_t i = 0; i < seeds; ++i) {
      const auto ordinal = static_cast<std::uint32_t>(corpus.ordinal_of(list[i].id));
      auto it = bundle.parent_siblings.find(ordinal);
      if (it == bundle.parent_siblings.end()) continue;
      for (std::uint32_t sibling : it->second) {
        const std::string& sid = corpus.at(sibling).chunk_id;
        if (present.insert(sid).second) {
          list.push_back(make_passage(corpus, sibling, list[i].score, list[i].stage));
        }
      }
    }
    finalize_ranks(list);
    if (list.size() > n) list.resize(n);
    return list;
  };

  std::vector<std::vector<RankedPassage>> results;
  results.reserve(queries.size());
  for (size_t q = 0; q < queries.size(); ++q) {
    std::vector<RankedPassage> list;
    if (technique == "vector_retrieval") {
      list = from_scored(corpus, bundle.vectors.top_n(query_vectors[q], n), "retrieval:vector");
    } else if (technique == "bm25") {
      list = from_scored(corpus, bundle.bm25.top_n(tokenize(queries[q].text), n), "retrieval:bm25");
    } else if (technique == "hybrid") {
      auto vec = from_scored(corpus, bundle.vectors.top_n(query_vectors[q], n), "retrieval:vector");
      auto lex = from_scored(corpus, bundle.bm25.top_n(tokenize(queries[q].text), n), "retrieval:bm25");
      list = rrf_fuse({vec, lex}, params.rrf_k);
      if (list.size() > n) {
        list.resize(n);
      }
    } else if (technique == "graph_retrieval") {
      list = from_scored(corpus, bundle.graph.score_chunks(queries[q].text, n), "retrieval:graph");
    } else if (technique == "complete_hybrid") {
      auto vec = from_scored(corpus, bundle.vectors.top_n(query_vectors[q], n), "retrieval:vector");
      auto lex = from_scored(corpus, bundle.bm25.top_n(tokenize(queries[q].text), n), "retrieval:bm25");
      auto gph = from_scored(corpus, bundle.graph.score_chunks(queries[q].text, n), "retrieval:graph");
      std::vector<std::vector<RankedPassage>> lists = {vec, lex};
      if (!gph.empty()) lists.push_back(gph);
      list = rrf_fuse(lists, params.rrf_k);
      if (list.size() > n) list.resize(n);
    } else {
      throw PipelineFailure("", "retrieval", "unknown technique '" + technique + "'");
    }
    if (list.empty() && technique != "bm25") {
      list = from_scored(corpus, bundle.bm25.top_n(tokenize(queries[q].text), n), "retrieval:bm25_fallback");
      if (!list.empty() && warnings) {
        warnings->push_back(technique + ": no candidates for query " + std::to_string(q + 1) +
                            ", fell back to bm25");
      }
    }
    if (list.empty()) {
      for (std::uint32_t chunk = 0; chunk < corpus.size() && list.size() < n; ++chunk) {
        list.push_back(make_passage(corpus, chunk, 0.0, "retrieval:corpus_prefix"));
      }
      finalize_ranks(list);
      if (warnings) {
        warnings->push_back(technique + ": query " + std::to_string(q + 1) +
                            " matched nothing, using a corpus prefix");
      }
    }
    results.push_back(expand_parents(std::move(list)));
  }
  return results;
}

std::vector<RankedPassage> rrf_fuse(const std::vector<std::vector<RankedPassage>>& lists, double rrf_k) {
  std::map<std::string, double> scores;
  std::map<std::string, const RankedPassage*> sample;
  for (const auto& list : lists) {
    for (const auto& passage : list) {
      scores[passage.id] += 1.0 / (rrf_k + static_cast<double>(passage.rank));
      sample.emplace(passage.id, &passage);
    }
  }
  std::vector<RankedPassage> fused;
  fused.reserve(scores.size());
  for (const auto& [id, score] : scores) {
    RankedPassage passage = *sample[id];
    passage.score = score;
    passage.stage = "fusion:rrf";
    fused.push_back(std::move(passage));
  }
  finalize_ranks(fused);
  return fused;
}

std::vector<RankedPassage> rerank(const std::string& question, const std::vector<RankedPassage>& candidates,
                                  const std::string& technique, Gateway& gateway,
                                  const TemplateSet& templates, std::vector<std::string>* warnings) {
  if (technique == "none" || candidates.empty()) return candidates;

  auto cross_encode = [&](const std::vector<RankedPassage>& input) {
    std::vector<std::string> texts;
    texts.reserve(input.size());
    for (const auto& passage : input) texts.push_back(passage.text);
    const auto scores = gateway.rerank_score(question, texts);
    std::vector<RankedPassage> out = input;
    for (size_t i = 0; i < out.size(); ++i) {
      out[i].score = scores[i];
      out[i].stage = "rerank:cross_encoder";
    }
    finalize_ranks(out);
    return out;
  };

  // LLM ordering of the given candidates; unparseable or missing ids keep
  // their prior relative order at the tail.
  auto llm_order = [&](const std::vector<RankedPassage>& input) {
    const std::string prompt = templates.render(
        "llm_rerank", {{"question", question}, {"passages", numbered_block(input)}});
    const std::string reply = gateway.chat(ChatRole::generator, {{"user", prompt}});
    std::vector<size_t> order;
    std::set<size_t> used;
    std::string digits;
    auto flush = [&] {
      if (digits.empty()) return;
      const long value = std::strtol(digits.c_str(), nullptr, 10);
      digits.clear();
      if (value >= 1 && value <= static_cast<long>(input.size())) {
        const size_t idx = static_cast<size_t>(value - 1);
        if (used.insert(idx).second) order.push_back(idx);
      }
    };
    for (char c : reply) {
      if (c >= '0' && c <= '9') {
        digits.push_back(c);
      } else {
        flush();
      }
    }
    flush();
    const bool malformed = order.empty();
    for (size_t i = 0; i < input.size(); ++i) {
      if (!used.count(i)) order.push_back(i);
    }
    std::vector<RankedPassage> out;
    out.reserve(input.size());
    for (size_t pos = 0; pos < order.size(); ++pos) {
      RankedPassage passage = input[order[pos]];
      passage.score = static_cast<double>(input.size() - pos);
      passage.stage = "rerank:llm";
      passage.rank = static_cast<int>(pos + 1);
      out.push_back(std::move(passage));
    }
    return std::make_pair(out, malformed);
  };

  if (technique == "cross_encoder") {
    return cross_encode(candidates);
  }
  if (technique == "llm_rerank") {
    auto [ordered, malformed] = llm_order(candidates);
    if (malformed && warnings) warnings->push_back("llm_rerank: no ids parsed, kept prior order");
    return ordered;
  }
  if (technique == "hybrid_rerank") {
    auto ce = cross_encode(candidates);
    const size_t head = (ce.size() + 1) / 2;
    std::vector<RankedPassage> top(ce.begin(), ce.begin() + head);
    auto [ordered_top, malformed] = llm_order(top);
    std::vector<RankedPassage> out;
    if (malformed) {
      if (warnings) warnings->push_back("hybrid_rerank: malformed permutation, cross-encoder order kept");
      out = std::move(ce);
    } else {
      out = std::move(ordered_top);
      out.insert(out.end(), ce.begin() + head, ce.end());
    }
    for (size_t i = 0; i < out.size(); ++i) {
      out[i].score = static_cast<double>(out.size() - i);
      out[i].stage = "rerank:hybrid";
      out[i].rank = static_cast<int>(i + 1);
    }
    return out;
  }
  throw PipelineFailure("", "reranking", "unknown technique '" + technique + "'");
}

std::vector<RankedPassage> filter_passages(const std::vector<RankedPassage>& ranked,
                                           const std::string& technique, const PipelineParams& params) {
  if (ranked.empty()) throw PipelineFailure("", "passage_filter", "empty candidate list");
  if (technique == "simple_threshold") {
    std::vector<RankedPassage> kept(
        ranked.begin(), ranked.begin() + std::min<size_t>(ranked.size(), params.top_k_filter));
    renumber(kept);
    return kept;
  }
  if (technique == "similarity_threshold") {
    double lo = ranked.front().score, hi = ranked.front().score;
    for (const auto& passage : ranked) {
      lo = std::min(lo, passage.score);
      hi = std::max(hi, passage.score);
    }
    std::vector<RankedPassage> kept;
    for (const auto& passage : ranked) {
      const double normalized = hi > lo ? (passage.score - lo) / (hi - lo) : 1.0;
      if (normalized >= params.similarity_threshold) kept.push_back(passage);
    }
    if (kept.empty()) kept.push_back(ranked.front());
    renumber(kept);
    return kept;
  }
  throw PipelineFailure("", "passage_filter", "unknown technique '" + technique + "'");
}

std::vector<RankedPassage> augment_passages(const std::vector<RankedPassage>& kept,
                                            const std::string& technique, const Corpus& corpus,
                                            const ScoreLookup& retrieval_scores,
                                            const PipelineParams& params) {
  if (technique == "none") return kept;

  if (technique == "prev_next") {
    std::set<std::string> emitted;
    std::vector<RankedPassage> out;
    for (const auto& seed : kept) {
      const Chunk* chunk = corpus.find(seed.id);
      if (chunk == nullptr) {
        // Synthetic segment ids have no neighbors.
        if (emitted.insert(seed.id).second) out.push_back(seed);
        continue;
      }
      // Neighborhood in document order: prev, seed, next.
      std::vector<const Chunk*> hood;
      if (chunk->prev_chunk_id) hood.push_back(corpus.find(*chunk->prev_chunk_id));
      hood.push_back(chunk);
      if (chunk->next_chunk_id) hood.push_back(corpus.find(*chunk->next_chunk_id));
      for (const Chunk* member : hood) {
        if (member == nullptr) continue;
        if (!emitted.insert(member->chunk_id).second) continue;
        if (member == chunk) {
          out.push_back(seed);
        } else {
          out.push_back({member->chunk_id, member->text, 0.0, 0, "augment:prev_next"});
        }
      }
    }
    renumber(out);
    return out;
  }

  if (technique == "relevant_segment_extraction") {
    struct Seed {
      const Chunk* chunk;
      double score;
    };
    std::map<std::string, std::vector<Seed>> by_doc;
    for (const auto& passage : kept) {
      const Chunk* chunk = corpus.find(passage.id);
      if (chunk == nullptr) continue;
      by_doc[chunk->doc_id].push_back({chunk, passage.score});
    }

    auto chunk_at = [&](const std::string& doc_id, int position) -> const Chunk* {
      for (const auto& chunk : corpus.chunks()) {
        if (chunk.doc_id == doc_id && chunk.position == position) return &chunk;
      }
      return nullptr;
    };

    struct Segment {
      std::vector<const Chunk*> chunks;
      double max_seed_score = 0.0;
    };

    std::vector<Segment> segments;
    for (const auto& [doc_id, seeds_unsorted] : by_doc) {
      std::vector<Seed> seeds = seeds_unsorted;
      std::sort(seeds.begin(), seeds.end(),
                [](const Seed& a, const Seed& b) { return a.chunk->position < b.chunk->position; });
      Segment current;
      for (const auto& seed : seeds) {
        if (current.chunks.empty()) {
          current = {{seed.chunk}, seed.score};
          continue;
        }
        const int tail = current.chunks.back()->position;
        const int pos = seed.chunk->position;
        if (pos == tail) continue;
        if (pos == tail + 1) {
          current.chunks.push_back(seed.chunk);
          current.max_seed_score = std::max(current.max_seed_score, seed.score);
          continue;
        }
        if (pos == tail + 2) {
          const Chunk* gap = chunk_at(doc_id, tail + 1);
          double gap_score = 0.0;
          if (gap != nullptr) {
            auto it = retrieval_scores.find(gap->chunk_id);
            if (it != retrieval_scores.end()) gap_score = it->second;
          }
          if (gap != nullptr && gap_score >= params.rse_decay * current.max_seed_score) {
            current.chunks.push_back(gap);
            current.chunks.push_back(seed.chunk);
            current.max_seed_score = std::max(current.max_seed_score, seed.score);
            continue;
          }
        }
        segments.push_back(std::move(current));
        current = {{seed.chunk}, seed.score};
      }
      if (!current.chunks.empty()) segments.push_back(std::move(current));
    }

    std::vector<RankedPassage> out;
    for (const auto& segment : segments) {
      std::string id = segment.chunks.front()->chunk_id;
      if (segment.chunks.size() > 1) id += ".." + segment.chunks.back()->chunk_id;
      std::string text;
      for (const auto* chunk : segment.chunks) {
        if (!text.empty()) text += "\n";
        text += chunk->text;
      }
      out.push_back({id, text, segment.max_seed_score, 0, "augment:rse"});
    }
    finalize_ranks(out);
    return out;
  }

  throw PipelineFailure("", "passage_augmentation", "unknown technique '" + technique + "'");
}

std::vector<RankedPassage> compress_passages(const std::vector<RankedPassage>& passages,
                                             const std::string& technique, const std::string& question,
                                             Gateway& gateway, const TemplateSet& templates, int batch) {
  if (technique == "none") return passages;
  if (passages.empty()) throw PipelineFailure("", "passage_compression", "no passages to compress");

  if (technique == "tree_summarize") {
    auto summarize = [&](const std::vector<RankedPassage>& group) {
      const std::string prompt = templates.render(
          "tree_summarize", {{"question", question}, {"passages", numbered_block(group)}});
      return trim(gateway.chat(ChatRole::generator, {{"user", prompt}}));
    };
    std::vector<RankedPassage> level = passages;
    for (;;) {
      std::vector<RankedPassage> next;
      for (size_t i = 0; i < level.size(); i += batch) {
        std::vector<RankedPassage> group(level.begin() + i,
                                         level.begin() + std::min(level.size(), i + batch));
        next.push_back({"synthesis", summarize(group), 1.0, 1, "compress:tree_summarize"});
      }
      if (next.size() == 1) {
        renumber(next);
        return next;
      }
      level = std::move(next);
    }
  }

  if (technique == "llm_refine") {
    const std::string draft_prompt = templates.render(
        "refine_draft", {{"question", question}, {"passage", passages.front().text}});
    std::string draft = trim(gateway.chat(ChatRole::generator, {{"user", draft_prompt}}));
    for (size_t i = 1; i < passages.size(); ++i) {
      const std::string refine_prompt = templates.render(
          "refine_step", {{"question", question}, {"draft", draft}, {"passage", passages[i].text}});
      draft = trim(gateway.chat(ChatRole::generator, {{"user", refine_prompt}}));
    }
    return {{"synthesis", draft, 1.0, 1, "compress:llm_refine"}};
  }

  throw PipelineFailure("", "passage_compression", "unknown technique '" + technique + "'");
}

std::vector<int> long_context_layout(int n) {
  std::vector<int> layout;
  for (int rank = 1; rank <= n; rank += 2) layout.push_back(rank);
  const int highest_even = n - (n % 2 == 0 ? 0 : 1);
  for (int rank = highest_even; rank >= 2; rank -= 2) layout.push_back(rank);
  return layout;
}

std::string make_prompt(const std::string& question, const std::vector<RankedPassage>& passages,
                        const std::string& technique, const TemplateSet& templates) {
  if (passages.empty()) throw PipelineFailure("", "prompt_maker", "no passages for the prompt");
  std::vector<RankedPassage> ordered = passages;
  if (technique == "long_context_reorder") {
    const auto layout = long_context_layout(static_cast<int>(passages.size()));
    ordered.clear();
    for (int rank : layout) ordered.push_back(passages[rank - 1]);
  } else if (technique != "simple_listing") {
    throw PipelineFailure("", "prompt_maker", "unknown technique '" + technique + "'");
  }
  return templates.render("answer", {{"context", numbered_block(ordered)}, {"question", question}});
}

std::string generate(const std::string& prompt, Gateway& gateway) {
  if (prompt.empty()) throw PipelineFailure("", "generation", "empty prompt");
  return trim(gateway.chat(ChatRole::generator, {{"user", prompt}}));
}

std::string post_generate(const std::string& question, const std::string& answer,
                          const std::string& context, const std::string& technique, Gateway& gateway,
                          const TemplateSet& templates) {
  if (technique == "none") return answer;
  if (technique == "reflection_revising") {
    const std::string critique_prompt = templates.render(
        "reflect_critique", {{"question", question}, {"context", context}, {"answer", answer}});
    const std::string critique = trim(gateway.chat(ChatRole::generator, {{"user", critique_prompt}}));
    const std::string revise_prompt = templates.render(
        "reflect_revise",
        {{"question", question}, {"context", context}, {"answer", answer}, {"critique", critique}});
    return trim(gateway.chat(ChatRole::generator, {{"user", revise_prompt}}));
  }
  throw PipelineFailure("", "post_generation", "unknown technique '" + technique + "'");
}

namespace {

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

StageRecord record_stage(const std::string& stage, const std::string& technique, int in_count,
                         const std::vector<RankedPassage>& out, double ms,
                         std::vector<std::string> notes = {}) {
  StageRecord rec;
  rec.stage = stage;
  rec.technique = technique;
  rec.in_count = in_count;
  rec.out_count = static_cast<int>(out.size());
  for (const auto& passage : out) {
    rec.ids.push_back(passage.id);
    rec.scores.push_back(passage.score);
  }
  rec.ms = ms;
  rec.notes = std::move(notes);
  return rec;
}

}  // namespace

PipelineResult run_pipeline(const QAItem& qa, const PipelineConfig& config, const IndexBundle& bundle,
                            const Corpus& corpus, Gateway& gateway, const TemplateSet& templates,
                            const PipelineParams& params) {
  params.validate();
  PipelineResult result;
  result.trace.question_id = qa.question_id;
  const CallCounts calls_before = gateway.counts();

  auto run_stage = [&](const std::string& stage, auto&& fn) {
    try {
      return fn();
    } catch (const PipelineFailure& e) {
      throw PipelineFailure(qa.question_id, e.stage.empty() ? stage : e.stage, e.what(),
                            e.gateway_cause);
    } catch (const GatewayError& e) {
      throw PipelineFailure(qa.question_id, stage, e.what(), /*gateway_cause=*/true);
    } catch (const std::exception& e) {
      throw PipelineFailure(qa.question_id, stage, e.what());
    }
  };

  // Pre-embedding shaped the indexes at build time; record it for the trace.
  {
    StageRecord rec;
    rec.stage = "pre_embedding";
    rec.technique = config.pre_embedding();
    rec.in_count = rec.out_count = static_cast<int>(corpus.size());
    result.trace.stages.push_back(std::move(rec));
  }

  std::vector<std::string> warnings;

  StageTimer t_expand;
  const auto queries = run_stage("query_expansion", [&] {
    return expand_query(qa.question, config.query_expansion(), gateway, templates,
                        &bundle.graph, params, &warnings);
  });
  {
    StageRecord rec;
    rec.stage = "query_expansion";
    rec.technique = config.query_expansion();
    rec.in_count = 1;
    rec.out_count = static_cast<int>(queries.size());
    for (const auto& query : queries) rec.ids.push_back(query.text);
    rec.ms = t_expand.ms();
    rec.notes = warnings;
    result.trace.stages.push_back(std::move(rec));
  }

  warnings.clear();
  StageTimer t_retrieve;
  const auto per_query = run_stage("retrieval", [&] {
    return retrieve(queries, config.retrieval(), bundle, corpus, gateway, params, &warnings);
  });
  std::vector<RankedPassage> candidates = run_stage("retrieval", [&] {
    if (per_query.size() == 1) return per_query.front();
    auto fused = rrf_fuse(per_query, params.rrf_k);
    if (fused.size() > static_cast<size_t>(params.n_retrieve)) fused.resize(params.n_retrieve);
    return fused;
  });
  result.trace.stages.push_back(record_stage("retrieval", config.retrieval(),
                                             static_cast<int>(queries.size()), candidates,
                                             t_retrieve.ms(), warnings));
  if (candidates.empty()) {
    throw PipelineFailure(qa.question_id, "retrieval", "no candidates retrieved");
  }

  warnings.clear();
  StageTimer t_rerank;
  const auto reranked = run_stage("reranking", [&] {
    return rerank(qa.question, candidates, config.reranking(), gateway, templates, &warnings);
  });
  result.trace.stages.push_back(record_stage("reranking", config.reranking(),
                                             static_cast<int>(candidates.size()), reranked,
                                             t_rerank.ms(), warnings));

  StageTimer t_filter;
  const auto kept = run_stage("passage_filter", [&] {
    return filter_passages(reranked, config.passage_filter(), params);
  });
  result.trace.stages.push_back(record_stage("passage_filter", config.passage_filter(),
                                             static_cast<int>(reranked.size()), kept, t_filter.ms()));

  // The retrieval judgment is taken here: after rerank and filter, before
  // augmentation adds unscored neighbors.
  for (const auto& passage : kept) result.judgment.ranked.push_back(passage.id);
  result.judgment.gold = qa.gold_chunk_ids;

  ScoreLookup retrieval_scores;
  for (const auto& passage : candidates) retrieval_scores.emplace(passage.id, passage.score);

  StageTimer t_augment;
  const auto augmented = run_stage("passage_augmentation", [&] {
    return augment_passages(kept, config.passage_augmentation(), corpus, retrieval_scores, params);
  });
  result.trace.stages.push_back(record_stage("passage_augmentation", config.passage_augmentation(),
                                             static_cast<int>(kept.size()), augmented, t_augment.ms()));

  StageTimer t_compress;
  const auto compressed = run_stage("passage_compression", [&] {
    return compress_passages(augmented, config.passage_compression(), qa.question, gateway, templates,
                             params.compression_batch);
  });
  result.trace.stages.push_back(record_stage("passage_compression", config.passage_compression(),
                                             static_cast<int>(augmented.size()), compressed,
                                             t_compress.ms()));

  StageTimer t_prompt;
  const std::string prompt = run_stage("prompt_maker", [&] {
    return make_prompt(qa.question, compressed, config.prompt_maker(), templates);
  });
  {
    StageRecord rec;
    rec.stage = "prompt_maker";
    rec.technique = config.prompt_maker();
    rec.in_count = static_cast<int>(compressed.size());
    rec.out_count = 1;
    rec.ms = t_prompt.ms();
    result.trace.stages.push_back(std::move(rec));
  }

  StageTimer t_generate;
  const std::string draft = run_stage("generation", [&] { return generate(prompt, gateway); });
  {
    StageRecord rec;
    rec.stage = "generation";
    rec.technique = "chat";
    rec.in_count = 1;
    rec.out_count = 1;
    rec.ms = t_generate.ms();
    result.trace.stages.push_back(std::move(rec));
  }

  StageTimer t_post;
  result.answer = run_stage("post_generation", [&] {
    return post_generate(qa.question, draft, numbered_block(compressed), config.post_generation(),
                         gateway, templates);
  });
  {
    StageRecord rec;
    rec.stage = "post_generation";
    rec.technique = config.post_generation();
    rec.in_count = 1;
    rec.out_count = 1;
    rec.ms = t_post.ms();
    result.trace.stages.push_back(std::move(rec));
  }

  const CallCounts calls_after = gateway.counts();
  result.trace.calls.chat_generator = calls_after.chat_generator - calls_before.chat_generator;
  result.trace.calls.chat_judge = calls_after.chat_judge - calls_before.chat_judge;
  result.trace.calls.embed = calls_after.embed - calls_before.embed;
  result.trace.calls.rerank = calls_after.rerank - calls_before.rerank;
  return result;
}

nlohmann::json StageTrace::to_json(bool include_timings) const {
  json stages_json = json::array();
  for (const auto& rec : stages) {
    json stage;
    stage["stage"] = rec.stage;
    stage["technique"] = rec.technique;
    stage["in"] = rec.in_count;
    stage["out"] = rec.out_count;
    stage["ids"] = rec.ids;
    stage["scores"] = rec.scores;
    if (!rec.notes.empty()) stage["notes"] = rec.notes;
    if (include_timings) stage["ms"] = rec.ms;
    stages_json.push_back(std::move(stage));
  }
  return {{"question_id", question_id},
          {"stages", stages_json},
          {"calls",
           {{"chat_generator", calls.chat_generator},
            {"chat_judge", calls.chat_judge},
            {"embed", calls.embed},
            {"rerank", calls.rerank}}}};
}

}  // namespace ragopt
