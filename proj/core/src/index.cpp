#include "ragopt/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

#include "json.hpp"

namespace ragopt {

using nlohmann::json;

double Bm25Index::score(const std::vector<std::string>& query_terms, std::uint32_t chunk) const {
  double total = 0.0;
  for (const auto& term : query_terms) {
    auto it = postings.find(term);
    if (it == postings.end()) continue;
    const auto& plist = it->second;
    auto hit = std::lower_bound(plist.begin(), plist.end(), chunk,
                                [](const auto& entry, std::uint32_t c) { return entry.first < c; });
    if (hit == plist.end() || hit->first != chunk) continue;
    const double tf = hit->second;
    const double df = static_cast<double>(plist.size());
    const double idf = std::log(1.0 + (static_cast<double>(num_docs) - df + 0.5) / (df + 0.5));
    const double denom = tf + k1 * (1.0 - b + b * doc_len[chunk] / avgdl);
    total += idf * tf * (k1 + 1.0) / denom;
  }
  return total;
}

std::vector<std::pair<double, std::uint32_t>> Bm25Index::top_n(
    const std::vector<std::string>& query_terms, std::size_t n) const {
  std::vector<double> acc(doc_len.size(), 0.0);
  std::vector<std::uint32_t> touched;
  for (const auto& term : query_terms) {
    auto it = postings.find(term);
    if (it == postings.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (static_cast<double>(num_docs) - df + 0.5) / (df + 0.5));
    for (const auto& [chunk, tf] : it->second) {
      const double denom = tf + k1 * (1.0 - b + b * doc_len[chunk] / avgdl);
      if (acc[chunk] == 0.0) touched.push_back(chunk);
      acc[chunk] += idf * static_cast<double>(tf) * (k1 + 1.0) / denom;
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(touched.size());
  for (std::uint32_t chunk : touched) {
    if (acc[chunk] > 0.0) scored.emplace_back(acc[chunk], chunk);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

double VectorStore::chunk_score(const std::vector<double>& query, std::uint32_t chunk) const {
  const auto [begin, end] = slots[chunk];
  double best = -1.0;
  for (std::uint32_t s = begin; s < end; ++s) {
    double dot = 0.0;
    const auto& vec = vectors[s];
    for (size_t d = 0; d < vec.size(); ++d) dot += vec[d] * query[d];
    best = std::max(best, dot);
  }
  return best;
}

std::vector<std::pair<double, std::uint32_t>> VectorStore::top_n(const std::vector<double>& query,
                                                                 std::size_t n) const {
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(slots.size());
  for (std::uint32_t chunk = 0; chunk < slots.size(); ++chunk) {
    scored.emplace_back(chunk_score(query, chunk), chunk);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

namespace {

bool is_subsequence(const std::vector<std::string>& needle, const std::vector<std::string>& haystack) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (size_t start = 0; start + needle.size() <= haystack.size(); ++start) {
    bool all = true;
    for (size_t i = 0; i < needle.size(); ++i) {
      if (haystack[start + i] != needle[i]) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

}  // namespace

std::vector<std::uint32_t> GraphIndex::match_entities(const std::string& query) const {
  const auto query_tokens = tokenize(query);
  std::vector<std::uint32_t> matched;
  for (std::uint32_t e = 0; e < entities.size(); ++e) {
    if (is_subsequence(tokenize(entities[e]), query_tokens)) matched.push_back(e);
  }
  return matched;
}

std::vector<std::pair<double, std::uint32_t>> GraphIndex::score_chunks(const std::string& query,
                                                                       std::size_t n) const {
  std::map<std::uint32_t, double> acc;
  for (std::uint32_t e : match_entities(query)) {
    auto it = postings.find(e);
    if (it == postings.end()) continue;
    for (const auto& [chunk, weight] : it->second) acc[chunk] += weight;
  }
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(acc.size());
  for (const auto& [chunk, score] : acc) scored.emplace_back(score, chunk);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

std::vector<std::string> GraphIndex::relation_phrases(const std::string& query, int m) const {
  const auto matched = match_entities(query);
  std::vector<std::tuple<double, std::string, std::string>> candidates;  // weight, entity, neighbor
  for (std::uint32_t e : matched) {
    for (const auto& [pair, weight] : edges) {
      std::uint32_t other = UINT32_MAX;
      if (pair.first == e) other = pair.second;
      if (pair.second == e) other = pair.first;
      if (other == UINT32_MAX) continue;
      candidates.emplace_back(weight, entities[e], entities[other]);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::string> phrases;
  for (const auto& [weight, entity, neighbor] : candidates) {
    const std::string phrase = entity + " " + neighbor;
    if (std::find(phrases.begin(), phrases.end(), phrase) == phrases.end()) {
      phrases.push_back(phrase);
      if (static_cast<int>(phrases.size()) >= m) break;
    }
  }
  return phrases;
}

Bm25Index build_bm25(const std::vector<std::string>& texts) {
  Bm25Index index;
  index.num_docs = texts.size();
  index.doc_len.resize(texts.size(), 0.0);
  std::map<std::string, std::map<std::uint32_t, std::uint32_t>> tf;
  for (std::uint32_t chunk = 0; chunk < texts.size(); ++chunk) {
    const auto tokens = tokenize(texts[chunk]);
    index.doc_len[chunk] = static_cast<double>(tokens.size());
    for (const auto& token : tokens) tf[token][chunk] += 1;
  }
  double total_len = 0.0;
  for (double len : index.doc_len) total_len += len;
  index.avgdl = texts.empty() ? 0.0 : std::max(1.0, total_len / static_cast<double>(texts.size()));
  for (auto& [term, by_chunk] : tf) {
    auto& plist = index.postings[term];
    plist.reserve(by_chunk.size());
    for (const auto& [chunk, count] : by_chunk) plist.emplace_back(chunk, count);
  }
  return index;
}

GraphIndex build_graph(const std::vector<std::string>& texts) {
  GraphIndex graph;
  std::map<std::string, std::uint32_t> ids;
  // Per chunk: entity -> 1.0 (presence; extract_entities dedupes per chunk).
  std::vector<std::map<std::uint32_t, double>> chunk_entities(texts.size());

  for (std::uint32_t chunk = 0; chunk < texts.size(); ++chunk) {
    for (const auto& entity : extract_entities(texts[chunk])) {
      auto [it, inserted] = ids.emplace(entity, static_cast<std::uint32_t>(ids.size()));
      chunk_entities[chunk][it->second] = 1.0;
    }
  }

  graph.entities.resize(ids.size());
  for (const auto& [entity, id] : ids) graph.entities[id] = entity;

  for (std::uint32_t chunk = 0; chunk < texts.size(); ++chunk) {
    const auto& present = chunk_entities[chunk];
    for (const auto& [eid, count] : present) {
      graph.postings[eid].emplace_back(chunk, count);
    }
    for (auto a = present.begin(); a != present.end(); ++a) {
      for (auto b = std::next(a); b != present.end(); ++b) {
        graph.edges[{a->first, b->first}] += 1.0;
      }
    }
  }
  return graph;
}

std::string index_text(const Chunk& chunk, const std::string& variant) {
  if (variant == "contextual_chunk_headers" && !chunk.section_path.empty()) {
    std::string header;
    for (const auto& part : chunk.section_path) {
      if (!header.empty()) header += " > ";
      header += part;
    }
    return header + "\n" + chunk.text;
  }
  return chunk.text;
}

IndexBundle build_indexes(const Corpus& corpus, const std::string& variant, Gateway& gateway,
                          const TemplateSet& templates) {
  IndexBundle bundle;
  bundle.variant = variant;

  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& chunk : corpus.chunks()) texts.push_back(index_text(chunk, variant));

  bundle.bm25 = build_bm25(texts);
  bundle.graph = build_graph(texts);

  // Vector side: per-chunk index text, or generated hypothetical questions.
  std::vector<std::string> embed_texts;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> slots(corpus.size());
  if (variant == "hypothetical_prompt_embedding") {
    for (std::uint32_t chunk = 0; chunk < corpus.size(); ++chunk) {
      const std::string prompt = templates.render("hype_questions", {{"passage", texts[chunk]}});
      const std::string reply = gateway.chat(ChatRole::generator, {{"user", prompt}});
      std::vector<std::string> questions;
      for (const auto& line : split_lines(reply)) {
        if (!trim(line).empty()) questions.push_back(trim(line));
        if (questions.size() == 3) break;
      }
      if (questions.empty()) questions.push_back(texts[chunk]);
      const auto begin = static_cast<std::uint32_t>(embed_texts.size());
      for (auto& question : questions) embed_texts.push_back(std::move(question));
      slots[chunk] = {begin, static_cast<std::uint32_t>(embed_texts.size())};
    }
  } else {
    for (std::uint32_t chunk = 0; chunk < corpus.size(); ++chunk) {
      slots[chunk] = {chunk, chunk + 1};
    }
    embed_texts = texts;
  }

  bundle.vectors.vectors = gateway.embed(embed_texts);
  bundle.vectors.slots = std::move(slots);
  bundle.vectors.dim = bundle.vectors.vectors.empty() ? 0 : static_cast<int>(bundle.vectors.vectors[0].size());
  for (const auto& vec : bundle.vectors.vectors) {
    if (static_cast<int>(vec.size()) != bundle.vectors.dim) {
      throw Error("embedding dimensions differ within one index build");
    }
  }

  if (variant == "parent_document_retriever") {
    // Same-document, same-section siblings.
    for (std::uint32_t a = 0; a < corpus.size(); ++a) {
      std::vector<std::uint32_t> siblings;
      for (std::uint32_t b = 0; b < corpus.size(); ++b) {
        if (a == b) continue;
        if (corpus.at(a).doc_id == corpus.at(b).doc_id &&
            corpus.at(a).section_path == corpus.at(b).section_path) {
          siblings.push_back(b);
        }
      }
      if (!siblings.empty()) bundle.parent_siblings[a] = std::move(siblings);
    }
  }

  return bundle;
}

IndexManager::IndexManager(const Corpus& corpus, Gateway& gateway, const TemplateSet& templates,
                           std::filesystem::path cache_root, std::string corpus_hash)
    : corpus_(corpus),
      gateway_(gateway),
      templates_(templates),
      cache_root_(std::move(cache_root)),
      corpus_hash_(std::move(corpus_hash)) {}

std::filesystem::path IndexManager::variant_dir(const std::string& variant) const {
  return cache_root_ / corpus_hash_ / variant / gateway_.profile_id();
}

const IndexBundle& IndexManager::get(const std::string& variant) {
  auto it = bundles_.find(variant);
  if (it != bundles_.end()) return *it->second;

  auto bundle = std::make_unique<IndexBundle>();
  if (!load_from_disk(variant, *bundle)) {
    *bundle = build_indexes(corpus_, variant, gateway_, templates_);
    save_to_disk(*bundle);
  }
  auto [inserted, ok] = bundles_.emplace(variant, std::move(bundle));
  return *inserted->second;
}

bool IndexManager::load_from_disk(const std::string& variant, IndexBundle& bundle) const {
  const auto dir = variant_dir(variant);
  std::ifstream manifest_in(dir / "manifest.json");
  if (!manifest_in) return false;
  try {
    json manifest = json::parse(manifest_in);
    if (manifest.at("chunk_count").get<size_t>() != corpus_.size()) return false;
    const auto chunk_ids = manifest.at("chunk_ids").get<std::vector<std::string>>();
    for (size_t i = 0; i < corpus_.size(); ++i) {
      if (chunk_ids[i] != corpus_.at(i).chunk_id) return false;
    }

    bundle.variant = variant;
    bundle.vectors.dim = manifest.at("dim").get<int>();
    for (const auto& slot : manifest.at("slots")) {
      bundle.vectors.slots.emplace_back(slot.at(0).get<std::uint32_t>(), slot.at(1).get<std::uint32_t>());
    }

    std::ifstream bm25_in(dir / "bm25.json");
    if (!bm25_in) return false;
    json bm25 = json::parse(bm25_in);
    bundle.bm25.num_docs = bm25.at("num_docs").get<size_t>();
    bundle.bm25.avgdl = bm25.at("avgdl").get<double>();
    bundle.bm25.doc_len = bm25.at("doc_len").get<std::vector<double>>();
    for (const auto& [term, plist] : bm25.at("postings").items()) {
      auto& entry = bundle.bm25.postings[term];
      for (const auto& p : plist) {
        entry.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>());
      }
    }

    std::ifstream graph_in(dir / "graph.json");
    if (!graph_in) return false;
    json graph = json::parse(graph_in);
    bundle.graph.entities = graph.at("entities").get<std::vector<std::string>>();
    for (const auto& edge : graph.at("edges")) {
      bundle.graph.edges[{edge.at(0).get<std::uint32_t>(), edge.at(1).get<std::uint32_t>()}] =
          edge.at(2).get<double>();
    }
    for (const auto& [eid, plist] : graph.at("postings").items()) {
      auto& entry = bundle.graph.postings[static_cast<std::uint32_t>(std::stoul(eid))];
      for (const auto& p : plist) {
        entry.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<double>());
      }
    }

    if (manifest.contains("parents")) {
      for (const auto& [chunk, siblings] : manifest.at("parents").items()) {
        bundle.parent_siblings[static_cast<std::uint32_t>(std::stoul(chunk))] =
            siblings.get<std::vector<std::uint32_t>>();
      }
    }

    std::ifstream vec_in(dir / "embeddings.txt");
    if (!vec_in) return false;
    std::string line;
    while (std::getline(vec_in, line)) {
      if (trim(line).empty()) continue;
      std::istringstream parts(line);
      std::vector<double> vec;
      double v;
      while (parts >> v) vec.push_back(v);
      if (static_cast<int>(vec.size()) != bundle.vectors.dim) return false;
      bundle.vectors.vectors.push_back(std::move(vec));
    }
    const size_t expected = manifest.at("vector_count").get<size_t>();
    if (bundle.vectors.vectors.size() != expected) return false;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void IndexManager::save_to_disk(const IndexBundle& bundle) const {
  const auto dir = variant_dir(bundle.variant);
  std::filesystem::create_directories(dir);

  json manifest;
  manifest["chunk_count"] = corpus_.size();
  manifest["dim"] = bundle.vectors.dim;
  manifest["vector_count"] = bundle.vectors.vectors.size();
  manifest["variant"] = bundle.variant;
  json chunk_ids = json::array();
  for (const auto& chunk : corpus_.chunks()) chunk_ids.push_back(chunk.chunk_id);
  manifest["chunk_ids"] = chunk_ids;
  json slots = json::array();
  for (const auto& [begin, end] : bundle.vectors.slots) slots.push_back({begin, end});
  manifest["slots"] = slots;
  if (!bundle.parent_siblings.empty()) {
    json parents;
    for (const auto& [chunk, siblings] : bundle.parent_siblings) {
      parents[std::to_string(chunk)] = siblings;
    }
    manifest["parents"] = parents;
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";

  json bm25;
  bm25["num_docs"] = bundle.bm25.num_docs;
  bm25["avgdl"] = bundle.bm25.avgdl;
  bm25["doc_len"] = bundle.bm25.doc_len;
  json postings;
  for (const auto& [term, plist] : bundle.bm25.postings) {
    json entry = json::array();
    for (const auto& [chunk, tf] : plist) entry.push_back({chunk, tf});
    postings[term] = entry;
  }
  bm25["postings"] = postings;
  std::ofstream(dir / "bm25.json") << bm25.dump() << "\n";

  json graph;
  graph["entities"] = bundle.graph.entities;
  json edges = json::array();
  for (const auto& [pair, weight] : bundle.graph.edges) {
    edges.push_back({pair.first, pair.second, weight});
  }
  graph["edges"] = edges;
  json gpostings;
  for (const auto& [eid, plist] : bundle.graph.postings) {
    json entry = json::array();
    for (const auto& [chunk, count] : plist) entry.push_back({chunk, count});
    gpostings[std::to_string(eid)] = entry;
  }
  graph["postings"] = gpostings;
  std::ofstream(dir / "graph.json") << graph.dump() << "\n";

  std::ofstream vec_out(dir / "embeddings.txt");
  for (const auto& vec : bundle.vectors.vectors) {
    for (size_t d = 0; d < vec.size(); ++d) {
      if (d) vec_out << ' ';
      vec_out << format_double(vec[d]);
    }
    vec_out << '\n';
  }
}

}  // namespace ragopt
