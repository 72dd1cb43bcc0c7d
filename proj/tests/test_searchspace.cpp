#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ragopt/errors.hpp"
#include "ragopt/searchspace.hpp"

using namespace ragopt;

TEST_CASE("default space has nine families multiplying to 46080") {
  const SearchSpace space = build_default_space();
  REQUIRE(space.families.size() == 9);
  CHECK(cardinality(space) == 46080);

  const std::vector<size_t> expected_counts = {4, 8, 5, 4, 2, 3, 3, 2, 2};
  std::uint64_t product = 1;
  for (size_t i = 0; i < space.families.size(); ++i) {
    CHECK(space.families[i].options.size() == expected_counts[i]);
    product *= expected_counts[i];
  }
  CHECK(product == 46080);

  CHECK(space.families[kRetrieval].options.size() == 5);
  CHECK(space.families[kRetrieval].mandatory);
  CHECK(space.families[kPassageFilter].mandatory);
  CHECK(space.families[kPromptMaker].mandatory);

  for (const auto& family : space.families) {
    if (family.mandatory) {
      for (const auto& option : family.options) CHECK(option != "none");
    } else {
      CHECK(family.options.front() == "none");
    }
  }
}

TEST_CASE("cardinality of degenerate spaces") {
  SearchSpace space;
  space.families = {{0, "a", {"x"}, true}, {1, "b", {"y"}, true}};
  CHECK(cardinality(space) == 1);
  space.families = {{0, "a", {"x", "y"}, true}, {1, "b", {"p", "q", "r"}, true}};
  CHECK(cardinality(space) == 6);
}

TEST_CASE("decode maps the all-zero genome to the baseline config") {
  const SearchSpace space = build_default_space();
  const PipelineConfig config = decode(space, baseline_genome(space));
  CHECK(config.pre_embedding() == "none");
  CHECK(config.query_expansion() == "none");
  CHECK(config.retrieval() == "vector_retrieval");
  CHECK(config.reranking() == "none");
  CHECK(config.passage_filter() == "simple_threshold");
  CHECK(config.passage_augmentation() == "none");
  CHECK(config.passage_compression() == "none");
  CHECK(config.prompt_maker() == "simple_listing");
  CHECK(config.post_generation() == "none");
}

TEST_CASE("decode rejects out-of-range genes with the family index") {
  const SearchSpace space = build_default_space();
  Genome g = baseline_genome(space);
  g[kRetrieval] = 5;
  CHECK_THROWS_AS(decode(space, g), GeneOutOfRange);
  try {
    decode(space, g);
  } catch (const GeneOutOfRange& e) {
    CHECK(e.family == kRetrieval);
  }
  CHECK_THROWS_AS(decode(space, Genome{0, 0, 0}), GeneOutOfRange);
}

TEST_CASE("rerank pool rule fires when the candidate pool is too small") {
  SearchSpace space = build_default_space();
  Genome with_rerank = baseline_genome(space);
  with_rerank[kReranking] = 3;

  CHECK(is_feasible(space, with_rerank));

  space.retrieve_pool = 5;  // below the shortlist of 10
  CHECK_FALSE(is_feasible(space, with_rerank));
  CHECK(is_feasible(space, baseline_genome(space)));
  CHECK_THROWS_AS(decode(space, with_rerank), InfeasibleGenome);
  try {
    decode(space, with_rerank);
  } catch (const InfeasibleGenome& e) {
    CHECK(e.rule_id == "rerank-pool");
  }
}

TEST_CASE("encode inverts decode and flags unknown options") {
  const SearchSpace space = build_default_space();
  CHECK(encode(space, decode(space, baseline_genome(space))) == baseline_genome(space));

  PipelineConfig config = decode(space, baseline_genome(space));
  config.choice[kRetrieval] = "quantum_retrieval";
  CHECK_THROWS_AS(encode(space, config), UnknownOption);
}

TEST_CASE("encode(decode(g)) round-trips on 10000 random genomes") {
  const SearchSpace space = build_default_space();
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const Genome g = random_genome(space, rng);
    CHECK(encode(space, decode(space, g)) == g);
  }
}

TEST_CASE("random genomes are always feasible and deterministic per seed") {
  const SearchSpace space = build_default_space();
  {
    Rng rng(123);
    for (int i = 0; i < 10000; ++i) CHECK(is_feasible(space, random_genome(space, rng)));
  }
  Rng a(42), b(42);
  CHECK(random_genome(space, a) == random_genome(space, b));
}

TEST_CASE("random genome golden value for seed 42") {
  // Frozen at first implementation; guards the portable Rng mapping.
  const SearchSpace space = build_default_space();
  Rng rng(42);
  const Genome g = random_genome(space, rng);
  CHECK(g == Genome{2, 0, 0, 2, 1, 2, 1, 0, 0});
}

TEST_CASE("rejection sampling stays uniform over the feasible set") {
  // With the pool rule active only "none" reranking survives; the other
  // genes keep their uniform marginals.
  SearchSpace space = build_default_space();
  space.retrieve_pool = 1;
  Rng rng(99);
  std::vector<int> retrieval_counts(5, 0);
  for (int i = 0; i < 20000; ++i) {
    const Genome g = random_genome(space, rng);
    CHECK(g[kReranking] == 0);
    retrieval_counts[g[kRetrieval]] += 1;
  }
  for (int count : retrieval_counts) {
    CHECK(count > 3600);  // expected 4000 each
    CHECK(count < 4400);
  }
}

TEST_CASE("genome keys serialize and parse") {
  CHECK(genome_key({0, 1, 0, 1, 1, 1, 0, 1, 1}) == "[0,1,0,1,1,1,0,1,1]");
  CHECK(parse_genome("[0,1,0,1,1,1,0,1,1]") == Genome{0, 1, 0, 1, 1, 1, 0, 1, 1});
  CHECK(parse_genome("0, 1, 2") == Genome{0, 1, 2});
  CHECK_THROWS_AS(parse_genome("0;1"), ConfigError);
}

TEST_CASE("space serializes families and rules to JSON") {
  const auto j = build_default_space().to_json();
  CHECK(j.at("cardinality").get<std::uint64_t>() == 46080);
  CHECK(j.at("families").size() == 9);
  CHECK(j.at("feasibility_rules").size() == 2);
}
