#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ragopt/templates.hpp"

namespace ragopt {

enum class ChatRole { generator, judge };

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_s = 0.25;
};

struct ProviderProfile {
  std::string profile_id;
  std::string base_url;
  std::string chat_model;
  std::string judge_model;
  std::string embedding_model;
  std::string reranker_model;
  std::string auth_env = "RAGOPT_API_KEY";
  double timeout_s = 60.0;
  int max_parallel = 4;
  RetryPolicy retry;
};

struct CallCounts {
  long chat_generator = 0;
  long chat_judge = 0;
  long embed = 0;
  long rerank = 0;

  long chat_total() const { return chat_generator + chat_judge; }
};

struct JudgeScore {
  double value = 0.0;
  bool used_fallback = false;
};

/// Uniform client for chat, embedding and rerank endpoints. Judge and
/// semantic scoring are built on top of those three calls, so every backend
/// (stub or HTTP) gets them for free.
class Gateway {
 public:
  virtual ~Gateway() = default;

  virtual std::string profile_id() const = 0;

  std::string chat(ChatRole role, const std::vector<ChatMessage>& messages);

  /// One unit-normalized vector per input text, in input order.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

  /// One relevance score per passage, in input order.
  std::vector<double> rerank_score(const std::string& query, const std::vector<std::string>& passages);

  /// Asks the judge role for a 0-100 score and maps it to [0,1]. Unparseable
  /// replies are retried once, then scored by token-F1 against the gold
  /// answer with the fallback flag set.
  JudgeScore judge(const TemplateSet& templates, const std::string& question,
                   const std::string& gold_answer, const std::string& answer);

  /// max(0, cosine) of the two embeddings.
  double semantic_score(const std::string& gold_answer, const std::string& answer);

  CallCounts counts() const;
  void reset_counts();

 protected:
  virtual std::string do_chat(ChatRole role, const std::vector<ChatMessage>& messages) = 0;
  virtual std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) = 0;
  virtual std::vector<double> do_rerank(const std::string& query,
                                        const std::vector<std::string>& passages) = 0;

 private:
  std::atomic<long> chat_generator_calls_{0};
  std::atomic<long> chat_judge_calls_{0};
  std::atomic<long> embed_calls_{0};
  std::atomic<long> rerank_calls_{0};
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// First number found in the text, or nullopt.
std::optional<double> parse_leading_number(const std::string& text);

/// Routes each role to a backend gateway; lets the judge run on a different
/// endpoint than the generator. Counters accumulate on this object.
class GatewayRouter : public Gateway {
 public:
  GatewayRouter(std::shared_ptr<Gateway> generator, std::shared_ptr<Gateway> judge,
                std::shared_ptr<Gateway> embedding, std::shared_ptr<Gateway> reranker);

  std::string profile_id() const override;

 protected:
  std::string do_chat(ChatRole role, const std::vector<ChatMessage>& messages) override;
  std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override;
  std::vector<double> do_rerank(const std::string& query,
                                const std::vector<std::string>& passages) override;

 private:
  std::shared_ptr<Gateway> generator_;
  std::shared_ptr<Gateway> judge_;
  std::shared_ptr<Gateway> embedding_;
  std::shared_ptr<Gateway> reranker_;
};

}  // namespace ragopt
