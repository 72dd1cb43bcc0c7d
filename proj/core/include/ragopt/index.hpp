#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ragopt/corpus.hpp"
#include "ragopt/gateway.hpp"

namespace ragopt {

/// Okapi BM25 over the shared tokenizer; k1=1.2, b=0.75, and the
/// always-positive idf variant ln(1 + (N - df + 0.5)/(df + 0.5)).
struct Bm25Index {
  double k1 = 1.2;
  double b = 0.75;
  std::size_t num_docs = 0;
  double avgdl = 0.0;
  std::vector<double> doc_len;                                             // per chunk ordinal
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings;  // term -> (chunk, tf)

  double score(const std::vector<std::string>& query_terms, std::uint32_t chunk) const;

  /// (score, chunk) pairs for chunks with a positive score, best first
  /// (ties by chunk ordinal).
  std::vector<std::pair<double, std::uint32_t>> top_n(const std::vector<std::string>& query_terms,
                                                      std::size_t n) const;
};

/// Unit-norm embeddings, one or more slots per chunk (several slots when the
/// pre-embedding variant indexes hypothetical questions). A chunk scores as
/// the max cosine over its slots.
struct VectorStore {
  int dim = 0;
  std::vector<std::vector<double>> vectors;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> slots;  // per chunk: [begin, end)

  double chunk_score(const std::vector<double>& query, std::uint32_t chunk) const;
  std::vector<std::pair<double, std::uint32_t>> top_n(const std::vector<double>& query,
                                                      std::size_t n) const;
};

/// Entity co-occurrence graph: nodes are extracted entities, an edge's weight
/// counts the chunks containing both endpoints, postings map entities to the
/// chunks mentioning them (with occurrence counts).
struct GraphIndex {
  std::vector<std::string> entities;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;  // (a < b) -> weight
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, double>>> postings;

  bool empty() const { return entities.empty(); }

  /// Entities whose token sequence appears contiguously in the query
  /// (case-folded).
  std::vector<std::uint32_t> match_entities(const std::string& query) const;

  /// Chunks scored by the summed posting weights of query-matched entities.
  std::vector<std::pair<double, std::uint32_t>> score_chunks(const std::string& query,
                                                             std::size_t n) const;

  /// Up to m "entity neighbor" phrases over the top-weighted edges incident
  /// to query-matched entities.
  std::vector<std::string> relation_phrases(const std::string& query, int m) const;
};

struct IndexBundle {
  std::string variant;  // pre-embedding option that shaped the indexes
  Bm25Index bm25;
  VectorStore vectors;
  GraphIndex graph;
  // chunk -> same-section siblings; populated for parent_document_retriever
  std::map<std::uint32_t, std::vector<std::uint32_t>> parent_siblings;
};

Bm25Index build_bm25(const std::vector<std::string>& texts);
GraphIndex build_graph(const std::vector<std::string>& texts);

/// Index text the pre-embedding variant derives from a chunk
/// (contextual_chunk_headers prepends the section path).
std::string index_text(const Chunk& chunk, const std::string& variant);

/// Builds the three indexes for a pre-embedding variant, issuing embedding
/// (and, for hypothetical_prompt_embedding, chat) calls through the gateway.
IndexBundle build_indexes(const Corpus& corpus, const std::string& variant, Gateway& gateway,
                          const TemplateSet& templates);

/// Builds bundles on demand and caches them in memory and on disk under
/// cache_root/<corpus-hash>/<variant>/<embedding-profile>/. A disk hit loads
/// without any gateway call.
class IndexManager {
 public:
  IndexManager(const Corpus& corpus, Gateway& gateway, const TemplateSet& templates,
               std::filesystem::path cache_root, std::string corpus_hash);

  const IndexBundle& get(const std::string& variant);

 private:
  std::filesystem::path variant_dir(const std::string& variant) const;
  bool load_from_disk(const std::string& variant, IndexBundle& bundle) const;
  void save_to_disk(const IndexBundle& bundle) const;

  const Corpus& corpus_;
  Gateway& gateway_;
  const TemplateSet& templates_;
  std::filesystem::path cache_root_;
  std::string corpus_hash_;
  std::map<std::string, std::unique_ptr<IndexBundle>> bundles_;
};

}  // namespace ragopt
