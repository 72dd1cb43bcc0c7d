#pragma once

#include <stdexcept>
#include <string>

namespace ragopt {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// --- search space ---

struct GeneOutOfRange : Error {
  int family;
  GeneOutOfRange(int family_, const std::string& what) : Error(what), family(family_) {}
};

struct InfeasibleGenome : Error {
  std::string rule_id;
  InfeasibleGenome(std::string rule, const std::string& what) : Error(what), rule_id(std::move(rule)) {}
};

struct UnknownOption : Error {
  std::string family_name;
  std::string option_name;
  UnknownOption(std::string family, std::string option, const std::string& what)
      : Error(what), family_name(std::move(family)), option_name(std::move(option)) {}
};

// --- corpus / dataset ---

struct SchemaError : Error {
  long line = 0;
  SchemaError(long line_, const std::string& what) : Error(what), line(line_) {}
};

struct DanglingGoldChunk : Error {
  std::string question_id;
  DanglingGoldChunk(std::string qid, const std::string& what) : Error(what), question_id(std::move(qid)) {}
};

// --- metrics ---

struct EmptyGold : Error {
  using Error::Error;
};

// --- gateway ---

struct GatewayError : Error {
  using Error::Error;
};

struct TimeoutError : GatewayError {
  using GatewayError::GatewayError;
};

struct RateLimitedError : GatewayError {
  using GatewayError::GatewayError;
};

struct ProtocolError : GatewayError {
  using GatewayError::GatewayError;
};

// --- pipeline / evaluation ---

struct PipelineFailure : Error {
  std::string question_id;
  std::string stage;
  bool gateway_cause = false;  // the failing stage call was a provider call
  PipelineFailure(std::string qid, std::string stage_, const std::string& what,
                  bool gateway_cause_ = false)
      : Error(what), question_id(std::move(qid)), stage(std::move(stage_)),
        gateway_cause(gateway_cause_) {}
};

struct EvaluatorFailure : Error {
  std::string genome_key;
  EvaluatorFailure(std::string key, const std::string& what) : Error(what), genome_key(std::move(key)) {}
};

// --- reporting ---

struct FingerprintMismatch : Error {
  using Error::Error;
};

}  // namespace ragopt
