#pragma once

#include <memory>

#include "ragopt/gateway.hpp"

namespace ragopt {

/// OpenAI-compatible HTTP backend: POST /chat/completions and /embeddings,
/// plus a reranker endpoint POST /rerank {query, documents[]} -> {scores[]}.
/// Transient failures (connection errors, 429, 5xx) are retried with
/// exponential backoff up to the profile's attempt budget; concurrent
/// requests are capped at the profile's max_parallel.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(ProviderProfile profile);
  ~HttpGateway() override;

  std::string profile_id() const override { return profile_.profile_id; }

  const ProviderProfile& profile() const { return profile_; }

  /// Attempts consumed by the most recent request (visible for tests).
  int last_attempts() const;

 protected:
  std::string do_chat(ChatRole role, const std::vector<ChatMessage>& messages) override;
  std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override;
  std::vector<double> do_rerank(const std::string& query,
                                const std::vector<std::string>& passages) override;

 private:
  struct Impl;
  ProviderProfile profile_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ragopt
