#include "ragopt/stub_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

namespace ragopt {

namespace {

struct PromptView {
  std::string task;
  std::string preamble;  // everything before the first section delimiter
  std::map<std::string, std::string> sections;
};

bool is_delimiter(const std::string& line, std::string* name) {
  if (line.size() < 8 || line.rfind("--- ", 0) != 0) return false;
  if (line.substr(line.size() - 4) != " ---") return false;
  *name = line.substr(4, line.size() - 8);
  return true;
}

PromptView parse_prompt(const std::string& prompt) {
  PromptView view;
  std::string current;
  for (const auto& line : split_lines(prompt)) {
    std::string name;
    if (view.task.empty() && line.rfind("[task: ", 0) == 0 && line.back() == ']') {
      view.task = line.substr(7, line.size() - 8);
      continue;
    }
    if (is_delimiter(line, &name)) {
      current = name;
      continue;
    }
    std::string& target = current.empty() ? view.preamble : view.sections[current];
    if (!target.empty()) target += "\n";
    target += line;
  }
  for (auto& [name, text] : view.sections) text = trim(text);
  view.preamble = trim(view.preamble);
  return view;
}

/// "[3] some text" entries of a numbered listing, in order.
std::vector<std::string> parse_numbered(const std::string& block) {
  std::vector<std::string> items;
  for (const auto& line : split_lines(block)) {
    if (line.rfind("[", 0) == 0) {
      const size_t close = line.find("] ");
      if (close != std::string::npos) {
        items.emplace_back(line.substr(close + 2));
        continue;
      }
    }
    if (!items.empty()) {
      items.back() += "\n" + line;
    }
  }
  return items;
}

int parse_count(const std::string& preamble, int fallback) {
  if (auto n = parse_leading_number(preamble)) {
    if (*n >= 1 && *n <= 64) return static_cast<int>(*n);
  }
  return fallback;
}

std::string variant_lines(const std::string& question, int m,
                          const std::vector<std::string>& prefixes) {
  std::string out;
  for (int i = 0; i < m; ++i) {
    if (!out.empty()) out += "\n";
    out += prefixes[i % prefixes.size()] + " " + question;
  }
  return out;
}

}  // namespace

namespace {

// Function words shared by almost every text would dominate the token-sum
// vectors; the stub drops them so cosine reflects content overlap.
bool stub_stopword(const std::string& token) {
  static const std::set<std::string> kStop = {
      "a",    "an",  "and", "are",  "as",   "at",   "be",  "but", "by",   "do",   "does", "for",
      "from", "has", "have", "how", "in",   "into", "is",  "it",  "its",  "of",   "on",   "or",
      "that", "the", "their", "them", "then", "this", "to", "was", "were", "what", "when", "where",
      "which", "who", "why",  "will", "with"};
  return kStop.count(token) > 0;
}

}  // namespace

std::vector<double> StubGateway::stub_embedding(const std::string& text) {
  std::vector<double> acc(kDim, 0.0);
  bool any = false;
  for (const auto& [token, count] : token_multiset(text)) {
    if (stub_stopword(token)) continue;
    any = true;
    std::uint64_t state = fnv1a64(token);
    for (int d = 0; d < kDim; ++d) {
      const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;  // [0,1)
      acc[d] += static_cast<double>(count) * (unit * 2.0 - 1.0);
    }
  }
  if (!any) {
    acc[0] = 1.0;
    return acc;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : acc) v /= norm;
  return acc;
}

std::vector<std::vector<double>> StubGateway::do_embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(stub_embedding(text));
  return out;
}

std::vector<double> StubGateway::do_rerank(const std::string& query,
                                           const std::vector<std::string>& passages) {
  std::vector<double> scores;
  scores.reserve(passages.size());
  for (const auto& passage : passages) scores.push_back(token_overlap(query, passage));
  return scores;
}

std::string StubGateway::do_chat(ChatRole, const std::vector<ChatMessage>& messages) {
  if (messages.empty()) throw GatewayError("chat called with no messages");
  const PromptView view = parse_prompt(messages.back().content);
  const auto section = [&](const std::string& name) -> const std::string& {
    static const std::string empty;
    auto it = view.sections.find(name);
    return it == view.sections.end() ? empty : it->second;
  };

  if (view.task == "answer") {
    const auto passages = parse_numbered(section("context"));
    if (passages.empty()) return "No supporting context was retrieved.";
    return first_sentence(passages.front());
  }
  if (view.task == "judge") {
    const double f1 = token_f1(section("reference"), section("answer"));
    return format_double(f1 * 100.0);
  }
  if (view.task == "multi_query") {
    return variant_lines(section("question"), parse_count(view.preamble, 3),
                         {"in other words:", "more specifically:", "from another angle:",
                          "in practical terms:", "restated:"});
  }
  if (view.task == "rag_fusion") {
    return variant_lines(section("question"), parse_count(view.preamble, 3),
                         {"evidence for:", "background on:", "details about:", "sources on:",
                          "facts regarding:"});
  }
  if (view.task == "decomposition") {
    return variant_lines(section("question"), parse_count(view.preamble, 3),
                         {"which facts underlie:", "what context surrounds:",
                          "what details complete:", "what terms define:"});
  }
  if (view.task == "step_back") {
    return "broadly, " + section("question");
  }
  if (view.task == "hyde") {
    return "Consider: " + section("question");
  }
  if (view.task == "query_rewriting") {
    std::string out;
    for (const auto& token : tokenize(section("question"))) {
      if (!out.empty()) out += " ";
      out += token;
    }
    return out.empty() ? section("question") : out;
  }
  if (view.task == "rerank") {
    const auto passages = parse_numbered(section("passages"));
    const std::string& question = section("question");
    std::vector<size_t> order(passages.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> overlap(passages.size());
    for (size_t i = 0; i < passages.size(); ++i) overlap[i] = token_overlap(question, passages[i]);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (overlap[a] != overlap[b]) return overlap[a] > overlap[b];
      return a < b;
    });
    std::string out;
    for (size_t idx : order) {
      if (!out.empty()) out += ", ";
      out += std::to_string(idx + 1);
    }
    return out;
  }
  if (view.task == "summarize") {
    const auto passages = parse_numbered(section("passages"));
    std::string out;
    for (const auto& passage : passages) {
      if (!out.empty()) out += " ";
      out += first_sentence(passage);
    }
    return out.empty() ? "Nothing to summarize." : out;
  }
  if (view.task == "draft") {
    return first_sentence(section("passage"));
  }
  if (view.task == "refine") {
    return trim(section("draft"));
  }
  if (view.task == "critique") {
    return "Verify each claim against the numbered context passages.";
  }
  if (view.task == "revise") {
    return trim(section("answer"));
  }
  if (view.task == "hype_questions") {
    const std::string lead = first_sentence(section("passage"));
    return "What does the following state: " + lead + "\nWhich topic is covered by: " + lead +
           "\nHow would one explain: " + lead;
  }
  throw GatewayError("stub gateway cannot handle task '" + view.task + "'");
}

}  // namespace ragopt
