#include "ragopt/config.hpp"

#include <fstream>

#include "ragopt/errors.hpp"
#include "ragopt/http_gateway.hpp"
#include "ragopt/stub_gateway.hpp"

#include "json.hpp"

namespace ragopt {

using nlohmann::json;

namespace {

const std::vector<std::string> kRoles = {"generator", "judge", "embedding", "reranker"};

ProviderProfile parse_profile(const json& j) {
  ProviderProfile p;
  p.profile_id = j.at("profile_id").get<std::string>();
  p.base_url = j.at("base_url").get<std::string>();
  p.chat_model = j.value("chat_model", "");
  p.judge_model = j.value("judge_model", p.chat_model);
  p.embedding_model = j.value("embedding_model", "");
  p.reranker_model = j.value("reranker_model", "");
  p.auth_env = j.value("auth_env", std::string("RAGOPT_API_KEY"));
  p.timeout_s = j.value("timeout_s", 60.0);
  p.max_parallel = j.value("max_parallel", 4);
  if (j.contains("retry")) {
    p.retry.max_attempts = j["retry"].value("max_attempts", 3);
    p.retry.backoff_base_s = j["retry"].value("backoff_base_s", 0.25);
  }
  if (p.timeout_s <= 0) throw ConfigError("profile " + p.profile_id + ": timeout must be positive");
  if (p.retry.max_attempts < 1) throw ConfigError("profile " + p.profile_id + ": attempts must be >= 1");
  if (p.max_parallel < 1) throw ConfigError("profile " + p.profile_id + ": max_parallel must be >= 1");
  return p;
}

}  // namespace

std::filesystem::path RunConfig::index_cache_root() const {
  auto parent = cache_path.parent_path();
  if (parent.empty()) parent = ".";
  return parent / "indexes";
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }

  RunConfig config;
  try {
    config.corpus_path = j.at("corpus").get<std::string>();
    config.qa_path = j.at("qa").get<std::string>();
    config.offline = j.value("offline", false);

    if (j.contains("profiles")) {
      for (const auto& profile : j["profiles"]) config.profiles.push_back(parse_profile(profile));
    }
    if (j.contains("role_profiles")) {
      config.role_profiles = j["role_profiles"].get<std::map<std::string, std::string>>();
    }

    if (j.contains("ga")) {
      const auto& g = j["ga"];
      config.ga.population_size = g.value("population_size", config.ga.population_size);
      config.ga.generations = g.value("generations", config.ga.generations);
      config.ga.crossover_rate = g.value("crossover_rate", config.ga.crossover_rate);
      config.ga.mutation_rate = g.value("mutation_rate", config.ga.mutation_rate);
      config.ga.adaptive_min = g.value("adaptive_min", config.ga.adaptive_min);
      config.ga.adaptive_max = g.value("adaptive_max", config.ga.adaptive_max);
      config.ga.elitism_count = g.value("elitism_count", config.ga.elitism_count);
      config.ga.patience = g.value("patience", config.ga.patience);
      config.ga.target_fitness = g.value("target_fitness", config.ga.target_fitness);
      config.ga.seed = g.value("seed", config.ga.seed);
      if (g.contains("selection")) config.ga.selection = selection_from_string(g["selection"]);
      if (g.contains("crossover")) config.ga.crossover = crossover_from_string(g["crossover"]);
      if (g.contains("mutation")) config.ga.mutation = mutation_from_string(g["mutation"]);
    }
    config.ga.validate();

    if (j.contains("pipeline")) {
      const auto& p = j["pipeline"];
      config.pipeline.n_retrieve = p.value("n_retrieve", config.pipeline.n_retrieve);
      config.pipeline.m_expansions = p.value("m_expansions", config.pipeline.m_expansions);
      config.pipeline.top_k_filter = p.value("top_k_filter", config.pipeline.top_k_filter);
      config.pipeline.similarity_threshold =
          p.value("similarity_threshold", config.pipeline.similarity_threshold);
      config.pipeline.rrf_k = p.value("rrf_k", config.pipeline.rrf_k);
      config.pipeline.rse_decay = p.value("rse_decay", config.pipeline.rse_decay);
      config.pipeline.compression_batch = p.value("compression_batch", config.pipeline.compression_batch);
    }
    config.pipeline.validate();

    if (j.contains("metrics")) {
      config.metrics.k = j["metrics"].value("k", config.metrics.k);
      if (config.metrics.k < 1) throw ConfigError("metrics.k must be >= 1");
    }

    config.cache_path = j.value("cache_path", config.cache_path.string());
    config.output_dir = j.value("output_dir", config.output_dir.string());
    if (j.contains("templates_dir")) {
      config.templates_dir = std::filesystem::path(j["templates_dir"].get<std::string>());
    }
    config.trace = j.value("trace", false);
    config.parallelism = j.value("parallelism", 1);
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }

  if (!std::filesystem::exists(config.corpus_path)) {
    throw ConfigError("corpus path does not exist: " + config.corpus_path.string());
  }
  if (!std::filesystem::exists(config.qa_path)) {
    throw ConfigError("qa path does not exist: " + config.qa_path.string());
  }
  if (config.templates_dir && !std::filesystem::is_directory(*config.templates_dir)) {
    throw ConfigError("templates_dir does not exist: " + config.templates_dir->string());
  }

  if (!config.offline) {
    if (config.profiles.empty()) {
      throw ConfigError("live mode needs at least one provider profile (or set \"offline\": true)");
    }
    for (const auto& role : kRoles) {
      auto it = config.role_profiles.find(role);
      const std::string id = it == config.role_profiles.end() ? config.profiles.front().profile_id
                                                              : it->second;
      int matches = 0;
      for (const auto& profile : config.profiles) {
        if (profile.profile_id == id) ++matches;
      }
      if (matches != 1) {
        throw ConfigError("role '" + role + "' must resolve to exactly one profile, got " +
                          std::to_string(matches) + " for id '" + id + "'");
      }
      config.role_profiles[role] = id;
    }
  }

  return config;
}

std::shared_ptr<Gateway> RunConfig::make_gateway() const {
  if (offline) return std::make_shared<StubGateway>();

  std::map<std::string, std::shared_ptr<Gateway>> by_id;
  auto backend = [&](const std::string& role) {
    const std::string& id = role_profiles.at(role);
    auto it = by_id.find(id);
    if (it != by_id.end()) return it->second;
    for (const auto& profile : profiles) {
      if (profile.profile_id == id) {
        auto gateway = std::make_shared<HttpGateway>(profile);
        by_id[id] = gateway;
        return by_id[id];
      }
    }
    throw ConfigError("no profile with id '" + id + "'");
  };

  auto generator = backend("generator");
  auto judge = backend("judge");
  auto embedding = backend("embedding");
  auto reranker = backend("reranker");
  if (by_id.size() == 1) return generator;
  return std::make_shared<GatewayRouter>(generator, judge, embedding, reranker);
}

TemplateSet RunConfig::make_templates() const {
  if (templates_dir) return TemplateSet::load_dir(*templates_dir);
  return TemplateSet::builtin();
}

}  // namespace ragopt
