#include "ragopt/searchspace.hpp"

#include <algorithm>
#include <sstream>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

constexpr const char* kRuleRerankPool = "rerank-pool";
constexpr const char* kRuleRankedLists = "expansion-ranked-lists";

bool rerank_pool_ok(const SearchSpace& space, const Genome& g) {
  if (g[kReranking] == 0) return true;
  return space.retrieve_pool >= space.rerank_shortlist;
}

}  // namespace

SearchSpace build_default_space() {
  SearchSpace space;
  space.families = {
      {kPreEmbedding,
       "pre_embedding",
       {"none", "contextual_chunk_headers", "parent_document_retriever", "hypothetical_prompt_embedding"},
       false},
      {kQueryExpansion,
       "query_expansion",
       {"none", "multi_query", "rag_fusion", "decomposition", "step_back", "hyde", "query_rewriting",
        "graph_expansion"},
       false},
      {kRetrieval,
       "retrieval",
       {"vector_retrieval", "bm25", "hybrid", "graph_retrieval", "complete_hybrid"},
       true},
      {kReranking, "reranking", {"none", "cross_encoder", "llm_rerank", "hybrid_rerank"}, false},
      {kPassageFilter, "passage_filter", {"simple_threshold", "similarity_threshold"}, true},
      {kPassageAugmentation,
       "passage_augmentation",
       {"none", "prev_next", "relevant_segment_extraction"},
       false},
      {kPassageCompression, "passage_compression", {"none", "tree_summarize", "llm_refine"}, false},
      {kPromptMaker, "prompt_maker", {"simple_listing", "long_context_reorder"}, true},
      {kPostGeneration, "post_generation", {"none", "reflection_revising"}, false},
  };
  space.rules = {
      {kRuleRerankPool, "reranking requires a retrieval candidate pool at least as large as the rerank shortlist"},
      {kRuleRankedLists,
       "rag_fusion and graph_expansion require a retrieval mode producing per-query ranked lists"},
  };
  if (cardinality(space) != 46080) {
    throw Error("default search space cardinality is " + std::to_string(cardinality(space)) +
                ", expected 46080");
  }
  return space;
}

std::uint64_t cardinality(const SearchSpace& space) {
  std::uint64_t product = 1;
  for (const auto& family : space.families) product *= family.options.size();
  return product;
}

void check_in_range(const SearchSpace& space, const Genome& g) {
  if (g.size() != space.families.size()) {
    throw GeneOutOfRange(-1, "genome has " + std::to_string(g.size()) + " genes, expected " +
                                 std::to_string(space.families.size()));
  }
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0 || static_cast<size_t>(g[i]) >= space.families[i].options.size()) {
      throw GeneOutOfRange(static_cast<int>(i),
                           "gene " + std::to_string(i) + " = " + std::to_string(g[i]) +
                               " out of range for family " + space.families[i].name);
    }
  }
}

bool is_feasible(const SearchSpace& space, const Genome& g) {
  // Every declared rule is decidable from the genome and the space alone.
  if (!rerank_pool_ok(space, g)) return false;
  // expansion-ranked-lists: all retrieval options here produce per-query
  // ranked lists, so the rule never fires; kept declared for visibility.
  return true;
}

PipelineConfig decode(const SearchSpace& space, const Genome& g) {
  check_in_range(space, g);
  if (!rerank_pool_ok(space, g)) {
    throw InfeasibleGenome(kRuleRerankPool, "retrieve pool " + std::to_string(space.retrieve_pool) +
                                                " < rerank shortlist " +
                                                std::to_string(space.rerank_shortlist));
  }
  PipelineConfig config;
  for (size_t i = 0; i < g.size(); ++i) {
    config.choice[i] = space.families[i].options[g[i]];
  }
  return config;
}

Genome encode(const SearchSpace& space, const PipelineConfig& config) {
  Genome g(space.families.size(), 0);
  for (size_t i = 0; i < space.families.size(); ++i) {
    const auto& options = space.families[i].options;
    auto it = std::find(options.begin(), options.end(), config.choice[i]);
    if (it == options.end()) {
      throw UnknownOption(space.families[i].name, config.choice[i],
                          "family " + space.families[i].name + " has no option '" + config.choice[i] + "'");
    }
    g[i] = static_cast<int>(it - options.begin());
  }
  return g;
}

Genome random_genome(const SearchSpace& space, Rng& rng) {
  Genome g(space.families.size(), 0);
  for (;;) {
    for (size_t i = 0; i < space.families.size(); ++i) {
      g[i] = static_cast<int>(rng.uniform_u64(space.families[i].options.size()));
    }
    if (is_feasible(space, g)) return g;
  }
}

void repair_genome(const SearchSpace& space, Genome& g, Rng& rng) {
  for (int attempt = 0; attempt < 1000 && !is_feasible(space, g); ++attempt) {
    // The pool rule is the only one that can fire; its offending gene is the
    // rerank choice.
    g[kReranking] = static_cast<int>(rng.uniform_u64(space.families[kReranking].options.size()));
  }
  if (!is_feasible(space, g)) {
    g[kReranking] = 0;
  }
}

std::string genome_key(const Genome& g) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < g.size(); ++i) {
    if (i) out << ',';
    out << g[i];
  }
  out << ']';
  return out.str();
}

Genome parse_genome(const std::string& text) {
  Genome g;
  std::string digits;
  auto flush = [&] {
    if (!digits.empty()) {
      g.push_back(std::stoi(digits));
      digits.clear();
    }
  };
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
    } else if (c == '-' ) {
      digits.push_back(c);
    } else if (c == ',' || c == '[' || c == ']' || c == ' ' || c == '\t') {
      flush();
    } else {
      throw ConfigError("invalid character '" + std::string(1, c) + "' in genome string");
    }
  }
  flush();
  return g;
}

Genome baseline_genome(const SearchSpace& space) {
  return Genome(space.families.size(), 0);
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json families_json = nlohmann::json::array();
  for (const auto& family : families) {
    families_json.push_back({{"family_id", family.family_id},
                             {"name", family.name},
                             {"options", family.options},
                             {"mandatory", family.mandatory}});
  }
  nlohmann::json rules_json = nlohmann::json::array();
  for (const auto& rule : rules) {
    rules_json.push_back({{"id", rule.id}, {"description", rule.description}});
  }
  return {{"families", families_json},
          {"feasibility_rules", rules_json},
          {"retrieve_pool", retrieve_pool},
          {"rerank_shortlist", rerank_shortlist},
          {"cardinality", cardinality(*this)}};
}

nlohmann::json PipelineConfig::to_json(const SearchSpace& space) const {
  nlohmann::json out;
  for (size_t i = 0; i < choice.size(); ++i) {
    out[space.families[i].name] = choice[i];
  }
  return out;
}

}  // namespace ragopt
