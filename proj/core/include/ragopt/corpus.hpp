#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace ragopt {

struct Chunk {
  std::string doc_id;
  std::string chunk_id;
  std::string text;
  std::optional<std::string> prev_chunk_id;
  std::optional<std::string> next_chunk_id;
  std::vector<std::string> section_path;  // document title down to leaf section
  int token_count = 0;
  int position = 0;  // 0-based order within the document
};

enum class QuestionType { factual, interpretation, long_answer };

std::string to_string(QuestionType t);
QuestionType question_type_from_string(const std::string& s);

struct QAItem {
  std::string question_id;
  std::string question;
  QuestionType qtype = QuestionType::factual;
  std::string gold_answer;
  std::set<std::string> gold_chunk_ids;
};

class Corpus {
 public:
  void add(Chunk chunk);

  const std::vector<Chunk>& chunks() const { return chunks_; }
  size_t size() const { return chunks_.size(); }
  bool contains(const std::string& chunk_id) const { return by_id_.count(chunk_id) > 0; }
  const Chunk& at(size_t ordinal) const { return chunks_[ordinal]; }
  const Chunk* find(const std::string& chunk_id) const;
  size_t ordinal_of(const std::string& chunk_id) const;

  /// Checks link symmetry, intra-document links, id uniqueness; assigns
  /// per-document positions from prev/next chains.
  void validate_and_link();

 private:
  std::vector<Chunk> chunks_;
  std::unordered_map<std::string, size_t> by_id_;
};

/// One JSON object per line:
/// {"doc_id","chunk_id","text","prev_chunk_id","next_chunk_id","section_path":[...],"token_count"}
Corpus load_corpus(const std::filesystem::path& path);

/// {"question_id","question","qtype","gold_answer","gold_chunk_ids":[...]}
/// Gold ids must exist in the corpus.
std::vector<QAItem> load_qa(const std::filesystem::path& path, const Corpus& corpus);

/// Content hash of one file; keys index cache directories (corpus only).
std::string file_fingerprint(const std::filesystem::path& path);

/// Content hash of the corpus and QA files together; keys fitness-cache
/// entries.
std::string dataset_fingerprint(const std::filesystem::path& corpus_path,
                                const std::filesystem::path& qa_path);

}  // namespace ragopt
