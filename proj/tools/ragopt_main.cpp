#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "ragopt/config.hpp"
#include "ragopt/corpus.hpp"
#include "ragopt/errors.hpp"
#include "ragopt/evolve.hpp"
#include "ragopt/fitness.hpp"
#include "ragopt/index.hpp"
#include "ragopt/report.hpp"
#include "ragopt/searchspace.hpp"
#include "ragopt/text.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using namespace ragopt;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitGateway = 4;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool trace = false;
  bool offline = false;
  std::string output_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_output = true) {
  cmd->add_option("--config", opts.config_path, "Run config JSON")->required();
  cmd->add_option("--seed", opts.seed, "Override the config's GA seed");
  cmd->add_flag("--trace", opts.trace, "Emit per-question stage traces");
  cmd->add_flag("--offline", opts.offline, "Force the deterministic stub providers");
  if (with_output) cmd->add_option("--out", opts.output_dir, "Output directory override");
}

RunConfig load_config(const CommonOpts& opts) {
  RunConfig config = RunConfig::load(opts.config_path);
  if (opts.seed) config.ga.seed = *opts.seed;
  if (opts.trace) config.trace = true;
  if (opts.offline) config.offline = true;
  if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
  return config;
}

struct Session {
  RunConfig config;
  Corpus corpus;
  std::vector<QAItem> qa;
  std::shared_ptr<Gateway> gateway;
  TemplateSet templates;
  SearchSpace space;
  std::string fingerprint;
  std::unique_ptr<IndexManager> indexes;
  std::unique_ptr<FitnessCache> cache;
  std::unique_ptr<GenomeEvaluator> evaluator;

  explicit Session(RunConfig cfg)
      : config(std::move(cfg)),
        corpus(load_corpus(config.corpus_path)),
        qa(load_qa(config.qa_path, corpus)),
        gateway(config.make_gateway()),
        templates(config.make_templates()),
        space(build_default_space()),
        fingerprint(dataset_fingerprint(config.corpus_path, config.qa_path)) {
    space.retrieve_pool = config.pipeline.n_retrieve;
    indexes = std::make_unique<IndexManager>(corpus, *gateway, templates, config.index_cache_root(),
                                             file_fingerprint(config.corpus_path));
    cache = std::make_unique<FitnessCache>(config.cache_path);
    evaluator = std::make_unique<GenomeEvaluator>(space, corpus, qa, *gateway, templates, *indexes,
                                                  config.pipeline, config.metrics, fingerprint,
                                                  config.parallelism);
    evaluator->collect_traces(config.trace);
  }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

// Traces need a live pipeline pass, so --trace evaluates outside the cache
// (reads nothing, writes nothing) and dumps the per-question stage JSON.
FitnessRecord traced_evaluation(Session& session, const Genome& genome,
                                const std::filesystem::path& trace_path) {
  const FitnessRecord record = session.evaluator->evaluate(genome);
  std::ofstream out(trace_path);
  for (const auto& trace : session.evaluator->traces()) {
    out << trace.to_json().dump() << "\n";
  }
  return record;
}

void print_record(const FitnessRecord& record) {
  std::cout << record.to_json().dump(2) << "\n";
}

int cmd_search(const CommonOpts& opts) {
  Session session(load_config(opts));
  CachedEvaluator evaluate(*session.evaluator, *session.cache);

  const SearchResult result =
      run_search(session.space, session.config.ga, [&](const Genome& g) { return evaluate(g); });

  const std::filesystem::path out_dir = session.config.output_dir;
  std::filesystem::create_directories(out_dir);

  const FitnessRecord best = evaluate.record(result.best_genome);
  const PipelineConfig best_config = decode(session.space, result.best_genome);

  json genome_json = {{"genome", result.best_genome},
                      {"key", genome_key(result.best_genome)},
                      {"fitness", result.best_fitness},
                      {"config", best_config.to_json(session.space)}};
  write_file(out_dir / "best_genome.json", genome_json.dump(2) + "\n");
  write_file(out_dir / "best_record.json", best.to_json().dump(2) + "\n");

  {
    std::ofstream log(out_dir / "run_log.jsonl");
    for (const auto& row : result.stats.trace) {
      log << json({{"generation", row.generation},
                   {"best_fitness", row.best_fitness},
                   {"mean_fitness", row.mean_fitness},
                   {"diversity", row.diversity},
                   {"evaluations", row.evaluations}})
                 .dump()
          << "\n";
    }
  }

  // cache_hits is reported on stdout only: it reflects cache state, not the
  // search itself, and would break byte-identical reruns.
  json stats = {{"generations_run", result.stats.generations_run},
                {"evaluations_total", result.stats.evaluations_total},
                {"stop_reason", to_string(result.stats.stop_reason)},
                {"best_fitness", result.best_fitness},
                {"best_genome", genome_key(result.best_genome)}};
  write_file(out_dir / "run_stats.json", stats.dump(2) + "\n");

  if (session.config.trace) {
    traced_evaluation(session, result.best_genome, out_dir / "best_traces.jsonl");
  }

  std::cout << "best " << genome_key(result.best_genome) << "  F=" << format_double(result.best_fitness)
            << "  stop=" << to_string(result.stats.stop_reason)
            << "  evaluations=" << result.stats.evaluations_total
            << "  cache_hits=" << result.stats.cache_hits << "\n"
            << "run directory: " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& genome_text) {
  Session session(load_config(opts));
  const Genome genome = parse_genome(genome_text);
  check_in_range(session.space, genome);
  if (!is_feasible(session.space, genome)) {
    std::cerr << "infeasible genome " << genome_key(genome) << " (rule: rerank-pool)\n";
    return kExitInfeasible;
  }
  std::cout << "config: " << decode(session.space, genome).to_json(session.space).dump(2) << "\n";

  std::filesystem::create_directories(session.config.output_dir);
  FitnessRecord record;
  if (session.config.trace) {
    record = traced_evaluation(session, genome,
                               std::filesystem::path(session.config.output_dir) / "eval_traces.jsonl");
  } else {
    CachedEvaluator evaluate(*session.evaluator, *session.cache);
    record = evaluate.record(genome);
  }
  print_record(record);
  write_file(std::filesystem::path(session.config.output_dir) / ("eval_" + record.genome + ".json"),
             record.to_json().dump(2) + "\n");
  return kExitOk;
}

int cmd_baseline(const CommonOpts& opts) {
  Session session(load_config(opts));
  const Genome genome = baseline_genome(session.space);
  std::cout << "baseline genome " << genome_key(genome) << "\n";
  std::filesystem::create_directories(session.config.output_dir);
  FitnessRecord record;
  if (session.config.trace) {
    record = traced_evaluation(
        session, genome, std::filesystem::path(session.config.output_dir) / "baseline_traces.jsonl");
  } else {
    CachedEvaluator evaluate(*session.evaluator, *session.cache);
    record = evaluate.record(genome);
  }
  print_record(record);
  write_file(std::filesystem::path(session.config.output_dir) / "baseline_record.json",
             record.to_json().dump(2) + "\n");
  return kExitOk;
}

FitnessRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open record file " + path.string());
  return FitnessRecord::from_json(json::parse(in));
}

int cmd_report(const std::vector<std::string>& best_paths, const std::vector<std::string>& baseline_paths,
               const std::vector<std::string>& names, const std::string& out_dir) {
  if (best_paths.size() != baseline_paths.size()) {
    throw ConfigError("--best and --baseline must be given the same number of times");
  }
  std::vector<ReportEntry> entries;
  for (size_t i = 0; i < best_paths.size(); ++i) {
    ReportEntry entry;
    entry.dataset = i < names.size() ? names[i] : "dataset" + std::to_string(i + 1);
    entry.best = read_record(best_paths[i]);
    entry.baseline = read_record(baseline_paths[i]);
    entries.push_back(std::move(entry));
  }
  const ComparisonReport report = build_report(std::move(entries));
  const std::string markdown = render_markdown(report);

  std::filesystem::create_directories(out_dir);
  write_file(std::filesystem::path(out_dir) / "report.md", markdown);
  write_file(std::filesystem::path(out_dir) / "report.json", report_json(report).dump(2) + "\n");
  std::cout << markdown;
  return kExitOk;
}

int cmd_cache_stats(const CommonOpts& opts) {
  const RunConfig config = load_config(opts);
  FitnessCache cache(config.cache_path);
  std::cout << json({{"path", config.cache_path.string()},
                     {"entries", cache.size()},
                     {"corrupt_lines", cache.corrupt_lines()}})
                   .dump(2)
            << "\n";
  return kExitOk;
}

int cmd_cache_clear(const CommonOpts& opts, bool also_indexes) {
  const RunConfig config = load_config(opts);
  FitnessCache cache(config.cache_path);
  const size_t had = cache.size();
  cache.clear();
  std::cout << "cleared " << had << " cache entries from " << config.cache_path.string() << "\n";
  if (also_indexes) {
    std::filesystem::remove_all(config.index_cache_root());
    std::cout << "removed index cache at " << config.index_cache_root().string() << "\n";
  }
  return kExitOk;
}

int cmd_space() {
  std::cout << build_default_space().to_json().dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Genetic search over modular RAG pipeline configurations"};
  app.require_subcommand(1);

  CommonOpts search_opts, eval_opts, baseline_opts, stats_opts, clear_opts;
  std::string genome_text;
  std::vector<std::string> best_paths, baseline_paths, names;
  std::string report_out = "report";
  bool clear_indexes = false;

  CLI::App* search = app.add_subcommand("search", "Run the genetic search");
  add_common(search, search_opts);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate one genome end-to-end");
  add_common(eval, eval_opts);
  eval->add_option("--genome", genome_text, "Genome, e.g. \"0,1,0,1,1,1,0,1,1\"")->required();

  CLI::App* baseline = app.add_subcommand("baseline", "Evaluate the naive-RAG baseline genome");
  add_common(baseline, baseline_opts);

  CLI::App* report = app.add_subcommand("report", "Render best-vs-baseline comparison tables");
  report->add_option("--best", best_paths, "Best record JSON (repeatable)")->required();
  report->add_option("--baseline", baseline_paths, "Baseline record JSON (repeatable)")->required();
  report->add_option("--name", names, "Dataset name per pair (repeatable)");
  report->add_option("--out", report_out, "Report output directory");

  CLI::App* cache = app.add_subcommand("cache", "Fitness-cache utilities");
  cache->require_subcommand(1);
  CLI::App* stats = cache->add_subcommand("stats", "Show cache entry counts");
  add_common(stats, stats_opts, false);
  CLI::App* clear = cache->add_subcommand("clear", "Truncate the fitness cache");
  add_common(clear, clear_opts, false);
  clear->add_flag("--indexes", clear_indexes, "Also remove the index cache directory");

  CLI::App* space = app.add_subcommand("space", "Print the search space as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (search->parsed()) return cmd_search(search_opts);
    if (eval->parsed()) return cmd_eval(eval_opts, genome_text);
    if (baseline->parsed()) return cmd_baseline(baseline_opts);
    if (report->parsed()) return cmd_report(best_paths, baseline_paths, names, report_out);
    if (space->parsed()) return cmd_space();
    if (cache->parsed()) {
      if (stats->parsed()) return cmd_cache_stats(stats_opts);
      if (clear->parsed()) return cmd_cache_clear(clear_opts, clear_indexes);
    }
  } catch (const InfeasibleGenome& e) {
    std::cerr << "error: infeasible genome: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const GatewayError& e) {
    std::cerr << "error: gateway: " << e.what() << "\n";
    return kExitGateway;
  } catch (const SearchAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitGateway;
  } catch (const PipelineFailure& e) {
    std::cerr << "error: question " << e.question_id << " stage " << e.stage << ": " << e.what()
              << "\n";
    return e.gateway_cause ? kExitGateway : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
