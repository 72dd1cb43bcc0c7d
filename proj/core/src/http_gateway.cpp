#include "ragopt/http_gateway.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "ragopt/errors.hpp"

#include "httplib.h"
#include "json.hpp"

namespace ragopt {

using nlohmann::json;

namespace {

bool transient(int status) { return status == 429 || status >= 500; }

}  // namespace

struct HttpGateway::Impl {
  std::mutex mu;
  std::condition_variable cv;
  int in_flight = 0;
  int last_attempts = 0;

  struct Slot {
    Impl& impl;
    explicit Slot(Impl& i, int limit) : impl(i) {
      std::unique_lock lock(impl.mu);
      impl.cv.wait(lock, [&] { return impl.in_flight < limit; });
      ++impl.in_flight;
    }
    ~Slot() {
      {
        std::lock_guard lock(impl.mu);
        --impl.in_flight;
      }
      impl.cv.notify_one();
    }
  };

  // POSTs the body and applies the retry policy; returns the parsed response.
  json post_json(const ProviderProfile& profile, const std::string& path, const json& body) {
    Slot slot(*this, profile.max_parallel);

    httplib::Client client(profile.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(profile.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(profile.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(profile.timeout_s));
    if (const char* token = std::getenv(profile.auth_env.c_str()); token && *token) {
      client.set_bearer_token_auth(token);
    }

    const std::string payload = body.dump();
    std::string failure = "request failed";
    for (int attempt = 1; attempt <= profile.retry.max_attempts; ++attempt) {
      {
        std::lock_guard lock(mu);
        last_attempts = attempt;
      }
      auto result = client.Post(path, payload, "application/json");
      if (!result) {
        failure = "connection failure (" + httplib::to_string(result.error()) + ")";
      } else if (result->status == 200) {
        try {
          return json::parse(result->body);
        } catch (const json::exception& e) {
          throw ProtocolError("malformed JSON from " + path + ": " + e.what());
        }
      } else if (transient(result->status)) {
        failure = "status " + std::to_string(result->status);
      } else {
        throw ProtocolError("unexpected status " + std::to_string(result->status) + " from " + path +
                            ": " + result->body);
      }
      if (attempt < profile.retry.max_attempts) {
        const double delay = profile.retry.backoff_base_s * std::pow(2.0, attempt - 1);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
    }
    if (failure == "status 429") {
      throw RateLimitedError("rate limited after " + std::to_string(profile.retry.max_attempts) +
                             " attempts on " + path);
    }
    throw TimeoutError("giving up on " + path + " after " +
                       std::to_string(profile.retry.max_attempts) + " attempts: " + failure);
  }
};

HttpGateway::HttpGateway(ProviderProfile profile)
    : profile_(std::move(profile)), impl_(std::make_unique<Impl>()) {
  if (profile_.base_url.empty()) throw ConfigError("provider profile has no base_url");
  if (profile_.timeout_s <= 0) throw ConfigError("provider timeout must be positive");
  if (profile_.retry.max_attempts < 1) throw ConfigError("retry attempts must be >= 1");
}

HttpGateway::~HttpGateway() = default;

int HttpGateway::last_attempts() const {
  std::lock_guard lock(impl_->mu);
  return impl_->last_attempts;
}

std::string HttpGateway::do_chat(ChatRole role, const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = role == ChatRole::judge ? profile_.judge_model : profile_.chat_model;
  body["temperature"] = 0;
  body["messages"] = json::array();
  for (const auto& message : messages) {
    body["messages"].push_back({{"role", message.role}, {"content", message.content}});
  }
  const json reply = impl_->post_json(profile_, "/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("chat response missing fields: ") + e.what());
  }
}

std::vector<std::vector<double>> HttpGateway::do_embed(const std::vector<std::string>& texts) {
  json body;
  body["model"] = profile_.embedding_model;
  body["input"] = texts;
  const json reply = impl_->post_json(profile_, "/embeddings", body);
  std::vector<std::vector<double>> out(texts.size());
  try {
    for (const auto& item : reply.at("data")) {
      const size_t index = item.at("index").get<size_t>();
      if (index >= out.size()) throw ProtocolError("embedding index out of range");
      out[index] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("embeddings response missing fields: ") + e.what());
  }
  for (auto& vec : out) {
    if (vec.empty()) throw ProtocolError("embeddings response left an input without a vector");
    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (double& v : vec) v /= norm;
    }
  }
  return out;
}

std::vector<double> HttpGateway::do_rerank(const std::string& query,
                                           const std::vector<std::string>& passages) {
  json body;
  body["model"] = profile_.reranker_model;
  body["query"] = query;
  body["documents"] = passages;
  const json reply = impl_->post_json(profile_, "/rerank", body);
  try {
    return reply.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("rerank response missing 'scores': ") + e.what());
  }
}

}  // namespace ragopt
