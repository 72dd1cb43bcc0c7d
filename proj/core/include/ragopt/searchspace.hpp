#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ragopt/rng.hpp"

#include "json.hpp"

namespace ragopt {

/// Fixed stage order of the modular pipeline. Gene i selects an option of
/// family i.
enum Family : int {
  kPreEmbedding = 0,
  kQueryExpansion = 1,
  kRetrieval = 2,
  kReranking = 3,
  kPassageFilter = 4,
  kPassageAugmentation = 5,
  kPassageCompression = 6,
  kPromptMaker = 7,
  kPostGeneration = 8,
};

inline constexpr int kFamilyCount = 9;

struct TechniqueFamily {
  int family_id = 0;
  std::string name;
  std::vector<std::string> options;  // index 0 is "none" for optional families
  bool mandatory = false;
};

/// Flat vector of category indices, one per family.
using Genome = std::vector<int>;

struct FeasibilityRule {
  std::string id;
  std::string description;
};

struct SearchSpace {
  std::vector<TechniqueFamily> families;
  std::vector<FeasibilityRule> rules;

  // Pool sizes the rerank feasibility rule is checked against. With the
  // defaults every genome is feasible, which keeps the full product space
  // reachable.
  int retrieve_pool = 20;
  int rerank_shortlist = 10;

  nlohmann::json to_json() const;
};

/// One named technique (or "none") per family.
struct PipelineConfig {
  std::array<std::string, kFamilyCount> choice;

  const std::string& pre_embedding() const { return choice[kPreEmbedding]; }
  const std::string& query_expansion() const { return choice[kQueryExpansion]; }
  const std::string& retrieval() const { return choice[kRetrieval]; }
  const std::string& reranking() const { return choice[kReranking]; }
  const std::string& passage_filter() const { return choice[kPassageFilter]; }
  const std::string& passage_augmentation() const { return choice[kPassageAugmentation]; }
  const std::string& passage_compression() const { return choice[kPassageCompression]; }
  const std::string& prompt_maker() const { return choice[kPromptMaker]; }
  const std::string& post_generation() const { return choice[kPostGeneration]; }

  bool operator==(const PipelineConfig&) const = default;

  nlohmann::json to_json(const SearchSpace& space) const;
};

/// The nine families with option counts [4, 8, 5, 4, 2, 3, 3, 2, 2]
/// (46,080 configurations in total).
SearchSpace build_default_space();

/// Product of family cardinalities.
std::uint64_t cardinality(const SearchSpace& space);

/// Throws GeneOutOfRange when a gene does not index a family option.
void check_in_range(const SearchSpace& space, const Genome& g);

/// True iff every declared feasibility rule passes. Requires g in range.
bool is_feasible(const SearchSpace& space, const Genome& g);

/// Named configuration for an in-range, feasible genome.
/// Throws GeneOutOfRange or InfeasibleGenome.
PipelineConfig decode(const SearchSpace& space, const Genome& g);

/// Inverse of decode. Throws UnknownOption for an unrecognized technique name.
Genome encode(const SearchSpace& space, const PipelineConfig& config);

/// Uniform draw over the feasible set by rejection sampling.
Genome random_genome(const SearchSpace& space, Rng& rng);

/// Resamples genes implicated in failing rules until the genome is feasible.
void repair_genome(const SearchSpace& space, Genome& g, Rng& rng);

/// Canonical serialized form, e.g. "[0,1,0,1,1,1,0,1,1]".
std::string genome_key(const Genome& g);

/// Parses either the canonical form or a bare comma-separated list.
Genome parse_genome(const std::string& text);

/// All-zero genome: optional families disabled, mandatory families at option 0
/// (vector retrieval, simple top-k filter, simple listing prompt).
Genome baseline_genome(const SearchSpace& space);

}  // namespace ragopt
