#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "oracles.hpp"
#include "ragopt/corpus.hpp"
#include "ragopt/errors.hpp"
#include "ragopt/index.hpp"
#include "ragopt/stub_gateway.hpp"
#include "ragopt/text.hpp"
#include "test_util.hpp"

using namespace ragopt;

TEST_CASE("tokenizer folds case and splits on punctuation") {
  CHECK(tokenize("The Quick, brown-fox!") == std::vector<std::string>{"the", "quick", "brown", "fox"});
  CHECK(tokenize("x2 y-3 4z") == std::vector<std::string>{"x2", "y", "3", "4z"});
  CHECK(tokenize("") == std::vector<std::string>{});
  // Stable across repeated calls.
  CHECK(tokenize("naïve café") == tokenize("naïve café"));
}

TEST_CASE("entity extraction finds capitalized runs and 4-digit numbers") {
  const auto entities =
      extract_entities("Joseph Fourier studied heat in 1807. The theory uses the Fourier Transform. "
                       "it was not about iPhones or a cat.");
  CHECK(std::find(entities.begin(), entities.end(), "Joseph Fourier") != entities.end());
  CHECK(std::find(entities.begin(), entities.end(), "Fourier Transform") != entities.end());
  CHECK(std::find(entities.begin(), entities.end(), "1807") != entities.end());
  // "The" starts a sentence but joins the run "The" (3 chars) -> too short.
  CHECK(std::find(entities.begin(), entities.end(), "The") == entities.end());
}

TEST_CASE("bundled toy corpus loads with consistent links") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  CHECK(corpus.size() == 30);

  int docs_seen = 0;
  std::set<std::string> doc_ids;
  for (const auto& chunk : corpus.chunks()) doc_ids.insert(chunk.doc_id);
  docs_seen = static_cast<int>(doc_ids.size());
  CHECK(docs_seen == 3);

  for (const auto& chunk : corpus.chunks()) {
    if (chunk.prev_chunk_id) {
      const Chunk* prev = corpus.find(*chunk.prev_chunk_id);
      REQUIRE(prev != nullptr);
      CHECK(prev->next_chunk_id == chunk.chunk_id);
      CHECK(prev->position == chunk.position - 1);
    }
    CHECK(!chunk.section_path.empty());
  }

  const auto qa = load_qa(testutil::data_path("toy_qa.jsonl"), corpus);
  CHECK(qa.size() == 10);
  for (const auto& item : qa) {
    for (const auto& gold : item.gold_chunk_ids) CHECK(corpus.contains(gold));
  }
}

TEST_CASE("loader rejects broken inputs") {
  testutil::TempDir tmp;

  SUBCASE("empty corpus file") {
    testutil::spit(tmp.file("empty.jsonl"), "");
    CHECK_THROWS_AS(load_corpus(tmp.file("empty.jsonl")), SchemaError);
  }
  SUBCASE("garbage line") {
    testutil::spit(tmp.file("bad.jsonl"), "{not json\n");
    CHECK_THROWS_AS(load_corpus(tmp.file("bad.jsonl")), SchemaError);
  }
  SUBCASE("duplicate chunk id") {
    testutil::spit(tmp.file("dup.jsonl"),
                   R"({"doc_id":"d","chunk_id":"c1","text":"one"})"
                   "\n"
                   R"({"doc_id":"d","chunk_id":"c1","text":"two"})"
                   "\n");
    CHECK_THROWS_AS(load_corpus(tmp.file("dup.jsonl")), SchemaError);
  }
  SUBCASE("asymmetric links") {
    testutil::spit(tmp.file("asym.jsonl"),
                   R"({"doc_id":"d","chunk_id":"c1","text":"one","next_chunk_id":"c2"})"
                   "\n"
                   R"({"doc_id":"d","chunk_id":"c2","text":"two"})"
                   "\n");
    CHECK_THROWS_AS(load_corpus(tmp.file("asym.jsonl")), SchemaError);
  }
  SUBCASE("QA item citing an unknown chunk") {
    testutil::spit(tmp.file("c.jsonl"), R"({"doc_id":"d","chunk_id":"c1","text":"one"})"
                                        "\n");
    testutil::spit(tmp.file("qa.jsonl"),
                   R"({"question_id":"q1","question":"?","qtype":"factual","gold_answer":"a","gold_chunk_ids":["missing"]})"
                   "\n");
    const Corpus corpus = load_corpus(tmp.file("c.jsonl"));
    CHECK_THROWS_AS(load_qa(tmp.file("qa.jsonl"), corpus), DanglingGoldChunk);
  }
}

TEST_CASE("dataset fingerprint changes with content") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("a.jsonl"), "one");
  testutil::spit(tmp.file("b.jsonl"), "two");
  const auto f1 = dataset_fingerprint(tmp.file("a.jsonl"), tmp.file("b.jsonl"));
  testutil::spit(tmp.file("a.jsonl"), "one-changed");
  const auto f2 = dataset_fingerprint(tmp.file("a.jsonl"), tmp.file("b.jsonl"));
  CHECK(f1 != f2);
  CHECK(f1.size() == 32);
}

TEST_CASE("BM25 basics") {
  const std::vector<std::string> texts = {
      "the cat sat on the mat",
      "a dog chased the cat",
      "quantum mechanics of fields",
      "dogs and cats living together",
      "the mat was red",
  };
  const Bm25Index index = build_bm25(texts);

  SUBCASE("absent query term contributes zero") {
    CHECK(index.score({"zebra"}, 0) == doctest::Approx(0.0));
  }
  SUBCASE("vocabulary-disjoint pairs score zero, matches positive") {
    CHECK(index.score({"quantum"}, 0) == doctest::Approx(0.0));
    CHECK(index.score({"quantum"}, 2) > 0.0);
  }
  SUBCASE("scores match an independent reference to 1e-9") {
    std::vector<std::vector<std::string>> docs;
    for (const auto& text : texts) docs.push_back(oracle::simple_tokens(text));
    const std::vector<std::vector<std::string>> queries = {
        {"the", "cat"}, {"dog"}, {"quantum", "mechanics"}, {"red", "mat"}, {"cat", "mat", "dog"}};
    for (const auto& query : queries) {
      for (size_t doc = 0; doc < docs.size(); ++doc) {
        CHECK(index.score(query, static_cast<std::uint32_t>(doc)) ==
              doctest::Approx(oracle::bm25(docs, query, doc)).epsilon(1e-9));
      }
    }
  }
  SUBCASE("top_n ranks by score and never returns zero-score chunks") {
    const auto top = index.top_n({"cat", "mat"}, 10);
    REQUIRE(!top.empty());
    for (size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].first >= top[i].first);
    for (const auto& [score, chunk] : top) CHECK(score > 0.0);
  }
  SUBCASE("single-doc corpus ranks its unique term") {
    const Bm25Index solo = build_bm25({"unique marker phrase"});
    CHECK(solo.score({"marker"}, 0) > 0.0);
  }
}

TEST_CASE("graph construction and queries") {
  const std::vector<std::string> texts = {
      "The Fourier Transform decomposes signals. Joseph Fourier invented it.",
      "Applications of the Fourier Transform include audio.",
      "Completely unrelated lowercase text.",
      "Joseph Fourier lived in France.",
  };
  const GraphIndex graph = build_graph(texts);

  SUBCASE("golden edge list matches a standalone extraction pass") {
    // Reference pass: entities per chunk via the same public extractor, then
    // pairwise co-occurrence counting done independently here.
    std::map<std::string, std::set<int>> entity_chunks;
    for (int c = 0; c < static_cast<int>(texts.size()); ++c) {
      for (const auto& entity : extract_entities(texts[c])) entity_chunks[entity].insert(c);
    }
    std::map<std::pair<std::string, std::string>, int> expected_edges;
    for (auto a = entity_chunks.begin(); a != entity_chunks.end(); ++a) {
      for (auto b = std::next(a); b != entity_chunks.end(); ++b) {
        int shared = 0;
        for (int c : a->second) {
          if (b->second.count(c)) ++shared;
        }
        if (shared > 0) expected_edges[{a->first, b->first}] = shared;
      }
    }
    std::map<std::pair<std::string, std::string>, int> actual_edges;
    for (const auto& [pair, weight] : graph.edges) {
      std::string left = graph.entities[pair.first];
      std::string right = graph.entities[pair.second];
      if (left > right) std::swap(left, right);
      actual_edges[{left, right}] = static_cast<int>(weight);
    }
    CHECK(actual_edges == expected_edges);
  }

  SUBCASE("chunks sharing an entity create an edge") {
    // "Fourier Transform" appears in chunks 0 and 1; "Joseph Fourier" in 0
    // and 3; chunk 0 contains both, so the edge exists with weight >= 1.
    bool found = false;
    for (const auto& [pair, weight] : graph.edges) {
      const auto& a = graph.entities[pair.first];
      const auto& b = graph.entities[pair.second];
      if ((a == "Fourier Transform" && b == "Joseph Fourier") ||
          (b == "Fourier Transform" && a == "Joseph Fourier")) {
        found = true;
        CHECK(weight >= 1.0);
      }
    }
    CHECK(found);
  }

  SUBCASE("no shared entities means no edges") {
    const GraphIndex empty = build_graph({"all lowercase first", "all lowercase second"});
    CHECK(empty.edges.empty());
    CHECK(empty.entities.empty());
  }

  SUBCASE("query matching is case-insensitive and scores chunks") {
    const auto scored = graph.score_chunks("what is the fourier transform used for", 10);
    REQUIRE(!scored.empty());
    // Chunks 0 and 1 both mention the entity.
    std::set<std::uint32_t> chunks;
    for (const auto& [score, chunk] : scored) chunks.insert(chunk);
    CHECK(chunks.count(0));
    CHECK(chunks.count(1));
  }

  SUBCASE("relation phrases name top-weighted neighbors") {
    const auto phrases = graph.relation_phrases("tell me about the Fourier Transform", 3);
    REQUIRE(!phrases.empty());
    for (const auto& phrase : phrases) {
      CHECK(phrase.find("Fourier Transform") != std::string::npos);
    }
  }
}

TEST_CASE("index text per pre-embedding variant") {
  Chunk chunk;
  chunk.doc_id = "d";
  chunk.chunk_id = "c";
  chunk.text = "Body text.";
  chunk.section_path = {"Doc Title", "Section A"};
  CHECK(index_text(chunk, "none") == "Body text.");
  CHECK(index_text(chunk, "contextual_chunk_headers") == "Doc Title > Section A\nBody text.");
  CHECK(index_text(chunk, "parent_document_retriever") == "Body text.");
}

TEST_CASE("build_indexes covers every chunk in all three indexes") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  StubGateway gw;
  const TemplateSet templates = TemplateSet::builtin();
  const IndexBundle bundle = build_indexes(corpus, "none", gw, templates);

  CHECK(bundle.bm25.num_docs == corpus.size());
  CHECK(bundle.vectors.slots.size() == corpus.size());
  CHECK(bundle.vectors.dim == StubGateway::kDim);

  // Every chunk has bm25 length, a vector slot, and the graph posts at least
  // one entity somewhere (not necessarily per chunk).
  for (std::uint32_t c = 0; c < corpus.size(); ++c) {
    CHECK(bundle.bm25.doc_len[c] > 0);
    const auto [begin, end] = bundle.vectors.slots[c];
    CHECK(end - begin == 1);
  }
  CHECK(!bundle.graph.entities.empty());

  // Stored embedding equals the gateway's embedding of the chunk's text.
  const auto direct = StubGateway::stub_embedding(corpus.at(0).text);
  CHECK(bundle.vectors.vectors[0] == direct);
}

TEST_CASE("hypothetical prompt embedding indexes generated questions") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  StubGateway gw;
  const TemplateSet templates = TemplateSet::builtin();
  const IndexBundle bundle = build_indexes(corpus, "hypothetical_prompt_embedding", gw, templates);
  // 3 question slots per chunk.
  for (std::uint32_t c = 0; c < corpus.size(); ++c) {
    const auto [begin, end] = bundle.vectors.slots[c];
    CHECK(end - begin == 3);
  }
  CHECK(gw.counts().chat_generator == static_cast<long>(corpus.size()));
}

TEST_CASE("parent document variant records same-section siblings") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  StubGateway gw;
  const TemplateSet templates = TemplateSet::builtin();
  const IndexBundle bundle = build_indexes(corpus, "parent_document_retriever", gw, templates);
  CHECK(!bundle.parent_siblings.empty());
  for (const auto& [chunk, siblings] : bundle.parent_siblings) {
    for (const auto sibling : siblings) {
      CHECK(corpus.at(chunk).doc_id == corpus.at(sibling).doc_id);
      CHECK(corpus.at(chunk).section_path == corpus.at(sibling).section_path);
    }
  }
}

TEST_CASE("index manager caches to disk and reloads without gateway calls") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  const TemplateSet templates = TemplateSet::builtin();
  testutil::TempDir tmp;

  StubGateway gw1;
  IndexManager manager1(corpus, gw1, templates, tmp.path, "corpushash");
  const IndexBundle& built = manager1.get("contextual_chunk_headers");
  CHECK(gw1.counts().embed == 1);

  // Fresh manager, same cache dir: loads from disk, zero embedding calls.
  StubGateway gw2;
  IndexManager manager2(corpus, gw2, templates, tmp.path, "corpushash");
  const IndexBundle& loaded = manager2.get("contextual_chunk_headers");
  CHECK(gw2.counts().embed == 0);
  CHECK(gw2.counts().chat_total() == 0);

  // The loaded store round-trips the stored vectors bit-exactly.
  REQUIRE(loaded.vectors.vectors.size() == built.vectors.vectors.size());
  for (size_t i = 0; i < built.vectors.vectors.size(); ++i) {
    CHECK(loaded.vectors.vectors[i] == built.vectors.vectors[i]);
  }
  CHECK(loaded.bm25.postings.size() == built.bm25.postings.size());
  CHECK(loaded.bm25.avgdl == built.bm25.avgdl);
  CHECK(loaded.graph.entities == built.graph.entities);
  CHECK(loaded.graph.edges == built.graph.edges);

  // In-memory memoization: the same manager returns the same bundle.
  const IndexBundle& again = manager2.get("contextual_chunk_headers");
  CHECK(&again == &loaded);
  CHECK(gw2.counts().embed == 0);
}

TEST_CASE("variant changes the cache key") {
  const Corpus corpus = load_corpus(testutil::data_path("toy_corpus.jsonl"));
  const TemplateSet templates = TemplateSet::builtin();
  testutil::TempDir tmp;
  StubGateway gw;
  IndexManager manager(corpus, gw, templates, tmp.path, "corpushash");
  manager.get("none");
  CHECK(gw.counts().embed == 1);
  manager.get("contextual_chunk_headers");
  CHECK(gw.counts().embed == 2);  // different variant -> separate build
  CHECK(std::filesystem::is_directory(tmp.path / "corpushash" / "none" / "stub"));
  CHECK(std::filesystem::is_directory(tmp.path / "corpushash" / "contextual_chunk_headers" / "stub"));
}
