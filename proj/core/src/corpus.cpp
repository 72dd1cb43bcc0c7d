#include "ragopt/corpus.hpp"

#include <fstream>
#include <sstream>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

#include "json.hpp"

namespace ragopt {

using nlohmann::json;

std::string to_string(QuestionType t) {
  switch (t) {
    case QuestionType::factual: return "factual";
    case QuestionType::interpretation: return "interpretation";
    case QuestionType::long_answer: return "long-answer";
  }
  return "factual";
}

QuestionType question_type_from_string(const std::string& s) {
  if (s == "factual") return QuestionType::factual;
  if (s == "interpretation") return QuestionType::interpretation;
  if (s == "long-answer" || s == "long_answer") return QuestionType::long_answer;
  throw ConfigError("unknown question type '" + s + "'");
}

void Corpus::add(Chunk chunk) {
  by_id_[chunk.chunk_id] = chunks_.size();
  chunks_.push_back(std::move(chunk));
}

const Chunk* Corpus::find(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) return nullptr;
  return &chunks_[it->second];
}

size_t Corpus::ordinal_of(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  if (it == by_id_.end()) throw Error("unknown chunk id '" + chunk_id + "'");
  return it->second;
}

void Corpus::validate_and_link() {
  if (by_id_.size() != chunks_.size()) throw SchemaError(0, "duplicate chunk ids in corpus");

  auto resolve = [&](const std::optional<std::string>& id) -> const Chunk* {
    if (!id) return nullptr;
    const Chunk* c = find(*id);
    if (!c) throw SchemaError(0, "link to unknown chunk '" + *id + "'");
    return c;
  };

  for (const auto& chunk : chunks_) {
    const Chunk* prev = resolve(chunk.prev_chunk_id);
    const Chunk* next = resolve(chunk.next_chunk_id);
    if (prev) {
      if (prev->doc_id != chunk.doc_id) {
        throw SchemaError(0, "prev link of '" + chunk.chunk_id + "' crosses documents");
      }
      if (!prev->next_chunk_id || *prev->next_chunk_id != chunk.chunk_id) {
        throw SchemaError(0, "asymmetric prev link at '" + chunk.chunk_id + "'");
      }
    }
    if (next) {
      if (next->doc_id != chunk.doc_id) {
        throw SchemaError(0, "next link of '" + chunk.chunk_id + "' crosses documents");
      }
      if (!next->prev_chunk_id || *next->prev_chunk_id != chunk.chunk_id) {
        throw SchemaError(0, "asymmetric next link at '" + chunk.chunk_id + "'");
      }
    }
  }

  // Walk each document's chain head-to-tail to assign positions.
  for (auto& chunk : chunks_) {
    if (chunk.prev_chunk_id) continue;
    int pos = 0;
    const Chunk* cursor = &chunk;
    while (cursor) {
      chunks_[by_id_[cursor->chunk_id]].position = pos++;
      cursor = cursor->next_chunk_id ? find(*cursor->next_chunk_id) : nullptr;
      if (pos > static_cast<int>(chunks_.size())) throw SchemaError(0, "cycle in chunk links");
    }
  }
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file " + path.string());

  Corpus corpus;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      Chunk chunk;
      chunk.doc_id = obj.at("doc_id").get<std::string>();
      chunk.chunk_id = obj.at("chunk_id").get<std::string>();
      chunk.text = obj.at("text").get<std::string>();
      if (obj.contains("prev_chunk_id") && !obj["prev_chunk_id"].is_null()) {
        chunk.prev_chunk_id = obj["prev_chunk_id"].get<std::string>();
      }
      if (obj.contains("next_chunk_id") && !obj["next_chunk_id"].is_null()) {
        chunk.next_chunk_id = obj["next_chunk_id"].get<std::string>();
      }
      if (obj.contains("section_path")) {
        chunk.section_path = obj["section_path"].get<std::vector<std::string>>();
      }
      if (obj.contains("token_count") && !obj["token_count"].is_null()) {
        chunk.token_count = obj["token_count"].get<int>();
      } else {
        chunk.token_count = static_cast<int>(tokenize(chunk.text).size());
      }
      if (chunk.chunk_id.empty() || chunk.doc_id.empty() || chunk.text.empty()) {
        throw SchemaError(line_no, "corpus line " + std::to_string(line_no) + ": empty required field");
      }
      if (corpus.contains(chunk.chunk_id)) {
        throw SchemaError(line_no,
                          "corpus line " + std::to_string(line_no) + ": duplicate chunk id " + chunk.chunk_id);
      }
      corpus.add(std::move(chunk));
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.size() == 0) throw SchemaError(0, "corpus file " + path.string() + " has no chunks");
  corpus.validate_and_link();
  return corpus;
}

std::vector<QAItem> load_qa(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open QA file " + path.string());

  std::vector<QAItem> items;
  std::set<std::string> seen_ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "QA line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      QAItem item;
      item.question_id = obj.at("question_id").get<std::string>();
      item.question = obj.at("question").get<std::string>();
      item.qtype = question_type_from_string(obj.at("qtype").get<std::string>());
      item.gold_answer = obj.at("gold_answer").get<std::string>();
      for (const auto& id : obj.at("gold_chunk_ids")) {
        item.gold_chunk_ids.insert(id.get<std::string>());
      }
      if (item.gold_chunk_ids.empty()) {
        throw SchemaError(line_no, "question " + item.question_id + " has no gold chunks");
      }
      if (!seen_ids.insert(item.question_id).second) {
        throw SchemaError(line_no, "duplicate question id " + item.question_id);
      }
      for (const auto& id : item.gold_chunk_ids) {
        if (!corpus.contains(id)) {
          throw DanglingGoldChunk(item.question_id,
                                  "question " + item.question_id + " references unknown chunk '" + id + "'");
        }
      }
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "QA line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (items.empty()) throw SchemaError(0, "QA file " + path.string() + " has no questions");
  return items;
}

namespace {

std::uint64_t hash_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

}  // namespace

std::string file_fingerprint(const std::filesystem::path& path) {
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash_file(path)));
  return out;
}

std::string dataset_fingerprint(const std::filesystem::path& corpus_path,
                                const std::filesystem::path& qa_path) {
  const std::uint64_t h1 = hash_file(corpus_path);
  const std::uint64_t h2 = hash_file(qa_path);
  char out[36];
  std::snprintf(out, sizeof(out), "%016llx%016llx", static_cast<unsigned long long>(h1),
                static_cast<unsigned long long>(h2));
  return out;
}

}  // namespace ragopt
