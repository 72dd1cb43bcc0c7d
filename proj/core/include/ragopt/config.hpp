#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ragopt/evolve.hpp"
#include "ragopt/gateway.hpp"
#include "ragopt/metrics.hpp"
#include "ragopt/pipeline.hpp"

namespace ragopt {

struct RunConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path qa_path;

  std::vector<ProviderProfile> profiles;
  // generator/judge/embedding/reranker -> profile_id; every role must resolve
  // to exactly one declared profile. Unset roles default to the first profile.
  std::map<std::string, std::string> role_profiles;
  bool offline = false;

  GAParams ga;
  PipelineParams pipeline;
  MetricParams metrics;

  std::filesystem::path cache_path = "fitness_cache.jsonl";
  std::filesystem::path output_dir = "runs/latest";
  std::optional<std::filesystem::path> templates_dir;
  bool trace = false;
  int parallelism = 1;

  /// Index caches live next to the fitness cache.
  std::filesystem::path index_cache_root() const;

  /// Parses and validates; referenced dataset paths must exist.
  static RunConfig load(const std::filesystem::path& path);

  /// Stub gateway when offline, otherwise HTTP gateways per the role map.
  std::shared_ptr<Gateway> make_gateway() const;

  TemplateSet make_templates() const;
};

}  // namespace ragopt
