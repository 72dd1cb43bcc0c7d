#include "ragopt/fitness.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <iostream>

#include "ragopt/errors.hpp"
#include "ragopt/text.hpp"

namespace ragopt {

using nlohmann::json;

nlohmann::json FitnessRecord::to_json() const {
  return {{"genome", genome},
          {"F", fitness},
          {"retrieval", retrieval_score},
          {"generation", generation_score},
          {"metrics",
           {{"recall_at_k", recall_at_k},
            {"map", map},
            {"ndcg_at_k", ndcg_at_k},
            {"mrr", mrr},
            {"llm", llm_judge},
            {"semantic", semantic}}},
          {"question_count", question_count},
          {"dataset_fingerprint", dataset_fingerprint},
          {"provider_profile", provider_profile},
          {"timestamp", timestamp}};
}

FitnessRecord FitnessRecord::from_json(const nlohmann::json& j) {
  FitnessRecord r;
  r.genome = j.at("genome").get<std::string>();
  r.fitness = j.at("F").get<double>();
  r.retrieval_score = j.at("retrieval").get<double>();
  r.generation_score = j.at("generation").get<double>();
  const auto& m = j.at("metrics");
  r.recall_at_k = m.at("recall_at_k").get<double>();
  r.map = m.at("map").get<double>();
  r.ndcg_at_k = m.at("ndcg_at_k").get<double>();
  r.mrr = m.at("mrr").get<double>();
  r.llm_judge = m.at("llm").get<double>();
  r.semantic = m.at("semantic").get<double>();
  r.question_count = j.at("question_count").get<int>();
  r.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  r.provider_profile = j.at("provider_profile").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

std::string FitnessCache::key_of(const std::string& genome, const std::string& fingerprint,
                                 const std::string& profile) {
  return genome + "|" + fingerprint + "|" + profile;
}

FitnessCache::FitnessCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;  // cold cache
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      FitnessRecord record = FitnessRecord::from_json(json::parse(line));
      entries_[key_of(record.genome, record.dataset_fingerprint, record.provider_profile)] =
          std::move(record);
    } catch (const std::exception& e) {
      ++corrupt_;
      std::cerr << "warning: skipping corrupt cache line " << line_no << " in " << file_.string()
                << ": " << e.what() << "\n";
    }
  }
}

std::optional<FitnessRecord> FitnessCache::get(const std::string& genome, const std::string& fingerprint,
                                               const std::string& profile) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key_of(genome, fingerprint, profile));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::put(const FitnessRecord& record) {
  std::lock_guard lock(mu_);
  const std::string key = key_of(record.genome, record.dataset_fingerprint, record.provider_profile);
  auto it = entries_.find(key);
  if (it != entries_.end() && it->second.to_json() == record.to_json()) {
    return;  // idempotent put
  }
  entries_[key] = record;
  if (!file_.parent_path().empty()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app);
  if (!out) throw ConfigError("cannot append to cache file " + file_.string());
  out << record.to_json().dump() << "\n";
}

std::size_t FitnessCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void FitnessCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
  std::ofstream out(file_, std::ios::trunc);
}

GenomeEvaluator::GenomeEvaluator(const SearchSpace& space, const Corpus& corpus, std::vector<QAItem> qa,
                                 Gateway& gateway, const TemplateSet& templates, IndexManager& indexes,
                                 PipelineParams pipeline_params, MetricParams metric_params,
                                 std::string dataset_fingerprint, int parallelism)
    : space_(space),
      corpus_(corpus),
      qa_(std::move(qa)),
      gateway_(gateway),
      templates_(templates),
      indexes_(indexes),
      pipeline_params_(pipeline_params),
      metric_params_(metric_params),
      fingerprint_(std::move(dataset_fingerprint)),
      parallelism_(std::max(1, parallelism)) {}

FitnessRecord GenomeEvaluator::evaluate(const Genome& genome) const {
  const PipelineConfig config = decode(space_, genome);
  const IndexBundle& bundle = indexes_.get(config.pre_embedding());

  struct QuestionResult {
    double recall, map, ndcg, mrr, llm, semantic;
    StageTrace trace;
  };
  std::vector<QuestionResult> results(qa_.size());

  auto run_question = [&](size_t i) {
    const QAItem& qa = qa_[i];
    PipelineResult pipeline =
        run_pipeline(qa, config, bundle, corpus_, gateway_, templates_, pipeline_params_);
    QuestionResult& out = results[i];
    out.recall = recall_at_k(pipeline.judgment, metric_params_.k);
    out.map = mean_average_precision(pipeline.judgment);
    out.ndcg = ndcg_at_k(pipeline.judgment, metric_params_.k);
    out.mrr = ::ragopt::mrr(pipeline.judgment);
    const JudgeScore judge = gateway_.judge(templates_, qa.question, qa.gold_answer, pipeline.answer);
    out.llm = judge.value;
    if (judge.used_fallback) {
      pipeline.trace.stages.push_back({"judge", "token_f1_fallback", 1, 1, {}, {}, 0.0, {}});
    }
    out.semantic = gateway_.semantic_score(qa.gold_answer, pipeline.answer);
    out.trace = std::move(pipeline.trace);
  };

  if (parallelism_ == 1 || qa_.size() <= 1) {
    for (size_t i = 0; i < qa_.size(); ++i) run_question(i);
  } else {
    // Bounded fan-out; results land in per-question slots so the reduction
    // order below stays fixed.
    size_t next = 0;
    while (next < qa_.size()) {
      const size_t batch_end = std::min(qa_.size(), next + static_cast<size_t>(parallelism_));
      std::vector<std::future<void>> batch;
      for (size_t i = next; i < batch_end; ++i) {
        batch.push_back(std::async(std::launch::async, run_question, i));
      }
      for (auto& f : batch) f.get();
      next = batch_end;
    }
  }

  RetrievalMeans retrieval;
  GenerationMeans generation;
  for (const auto& r : results) {
    retrieval.recall += r.recall;
    retrieval.map += r.map;
    retrieval.ndcg += r.ndcg;
    retrieval.mrr += r.mrr;
    generation.llm += r.llm;
    generation.semantic += r.semantic;
  }
  const double n = static_cast<double>(results.size());
  retrieval.recall /= n;
  retrieval.map /= n;
  retrieval.ndcg /= n;
  retrieval.mrr /= n;
  generation.llm /= n;
  generation.semantic /= n;

  const Scalarized scores = scalarize(retrieval, generation);

  if (collect_traces_) {
    traces_.clear();
    for (auto& r : results) traces_.push_back(std::move(r.trace));
  }

  FitnessRecord record;
  record.genome = genome_key(genome);
  record.fitness = scores.fitness;
  record.retrieval_score = scores.retrieval_score;
  record.generation_score = scores.generation_score;
  record.recall_at_k = retrieval.recall;
  record.map = retrieval.map;
  record.ndcg_at_k = retrieval.ndcg;
  record.mrr = retrieval.mrr;
  record.llm_judge = generation.llm;
  record.semantic = generation.semantic;
  record.question_count = static_cast<int>(qa_.size());
  record.dataset_fingerprint = fingerprint_;
  record.provider_profile = gateway_.profile_id();
  record.timestamp = iso8601_utc_now();
  return record;
}

CachedEvaluator::CachedEvaluator(const GenomeEvaluator& evaluator, FitnessCache& cache)
    : evaluator_(evaluator), cache_(cache) {}

EvalOutcome CachedEvaluator::operator()(const Genome& genome) {
  bool hit = false;
  const FitnessRecord rec = lookup(genome, &hit);
  return {rec.fitness, hit};
}

FitnessRecord CachedEvaluator::record(const Genome& genome) {
  bool hit = false;
  return lookup(genome, &hit);
}

FitnessRecord CachedEvaluator::lookup(const Genome& genome, bool* hit) {
  const std::string key = genome_key(genome);
  if (auto cached =
          cache_.get(key, evaluator_.dataset_fingerprint(), evaluator_.provider_profile())) {
    ++hits_;
    *hit = true;
    return *cached;
  }
  FitnessRecord fresh = evaluator_.evaluate(genome);
  cache_.put(fresh);
  ++evaluations_;
  *hit = false;
  return fresh;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", utc.tm_year + 1900, utc.tm_mon + 1,
                utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec);
  return buf;
}

}  // namespace ragopt
