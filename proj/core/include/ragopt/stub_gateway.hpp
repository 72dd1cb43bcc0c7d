#pragma once

#include "ragopt/gateway.hpp"

namespace ragopt {

/// Fully offline provider suite. Every reply is a pure function of the
/// request text, so whole runs are reproducible with zero network access:
///   - chat: dispatches on the template's "[task: ...]" marker line;
///     generation extracts the first sentence of the top context passage
///   - embeddings: seeded-hash vectors over the token multiset, dimension 64
///   - reranker: query/passage token-set overlap
///   - judge: token-F1 against the reference, reported on the 0-100 scale
class StubGateway : public Gateway {
 public:
  static constexpr int kDim = 64;

  std::string profile_id() const override { return "stub"; }

  /// The deterministic embedding as a standalone function (also used by
  /// reference scripts in tests).
  static std::vector<double> stub_embedding(const std::string& text);

 protected:
  std::string do_chat(ChatRole role, const std::vector<ChatMessage>& messages) override;
  std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override;
  std::vector<double> do_rerank(const std::string& query,
                                const std::vector<std::string>& passages) override;
};

}  // namespace ragopt
