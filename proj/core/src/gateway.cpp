#include "ragopt/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

namespace ragopt {

std::string Gateway::chat(ChatRole role, const std::vector<ChatMessage>& messages) {
  if (role == ChatRole::judge) {
    ++chat_judge_calls_;
  } else {
    ++chat_generator_calls_;
  }
  std::string out = do_chat(role, messages);
  if (out.empty()) throw ProtocolError("chat endpoint returned an empty completion");
  return out;
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw GatewayError("embed called with no texts");
  ++embed_calls_;
  auto vectors = do_embed(texts);
  if (vectors.size() != texts.size()) {
    throw ProtocolError("embedding endpoint returned " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(texts.size()) + " inputs");
  }
  return vectors;
}

std::vector<double> Gateway::rerank_score(const std::string& query,
                                          const std::vector<std::string>& passages) {
  if (passages.empty()) throw GatewayError("rerank called with no passages");
  ++rerank_calls_;
  auto scores = do_rerank(query, passages);
  if (scores.size() != passages.size()) {
    throw ProtocolError("reranker returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(passages.size()) + " passages");
  }
  return scores;
}

JudgeScore Gateway::judge(const TemplateSet& templates, const std::string& question,
                          const std::string& gold_answer, const std::string& answer) {
  const std::string prompt = templates.render(
      "judge", {{"question", question}, {"gold_answer", gold_answer}, {"answer", answer}});
  const std::vector<ChatMessage> messages = {{"user", prompt}};

  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply = chat(ChatRole::judge, messages);
    if (auto number = parse_leading_number(reply)) {
      const double clamped = std::clamp(*number, 0.0, 100.0);
      return {clamped / 100.0, false};
    }
  }
  return {token_f1(gold_answer, answer), true};
}

double Gateway::semantic_score(const std::string& gold_answer, const std::string& answer) {
  auto vectors = embed({gold_answer, answer});
  return std::max(0.0, cosine(vectors[0], vectors[1]));
}

CallCounts Gateway::counts() const {
  return {chat_generator_calls_.load(), chat_judge_calls_.load(), embed_calls_.load(),
          rerank_calls_.load()};
}

void Gateway::reset_counts() {
  chat_generator_calls_ = 0;
  chat_judge_calls_ = 0;
  embed_calls_ = 0;
  rerank_calls_ = 0;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<double> parse_leading_number(const std::string& text) {
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c >= '0' && c <= '9') ||
        ((c == '-' || c == '+') && i + 1 < text.size() && text[i + 1] >= '0' && text[i + 1] <= '9')) {
      char* end = nullptr;
      const double value = std::strtod(text.c_str() + i, &end);
      if (end != text.c_str() + i) return value;
    }
  }
  return std::nullopt;
}

GatewayRouter::GatewayRouter(std::shared_ptr<Gateway> generator, std::shared_ptr<Gateway> judge,
                             std::shared_ptr<Gateway> embedding, std::shared_ptr<Gateway> reranker)
    : generator_(std::move(generator)),
      judge_(std::move(judge)),
      embedding_(std::move(embedding)),
      reranker_(std::move(reranker)) {}

std::string GatewayRouter::profile_id() const {
  std::vector<std::string> ids = {generator_->profile_id(), judge_->profile_id(),
                                  embedding_->profile_id(), reranker_->profile_id()};
  std::set<std::string> unique(ids.begin(), ids.end());
  std::string out;
  for (const auto& id : unique) {
    if (!out.empty()) out += "+";
    out += id;
  }
  return out;
}

std::string GatewayRouter::do_chat(ChatRole role, const std::vector<ChatMessage>& messages) {
  Gateway& backend = role == ChatRole::judge ? *judge_ : *generator_;
  return backend.chat(role, messages);
}

std::vector<std::vector<double>> GatewayRouter::do_embed(const std::vector<std::string>& texts) {
  return embedding_->embed(texts);
}

std::vector<double> GatewayRouter::do_rerank(const std::string& query,
                                             const std::vector<std::string>& passages) {
  return reranker_->rerank_score(query, passages);
}

}  // namespace ragopt
