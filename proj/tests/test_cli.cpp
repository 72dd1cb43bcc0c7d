#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include "ragopt/fitness.hpp"
#include "test_util.hpp"

#include "json.hpp"

using nlohmann::json;

namespace {

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto out_file = scratch / ("cli_out_" + std::to_string(std::rand()) + ".txt");
  const std::string command =
      std::string(RAGOPT_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int raw = std::system(command.c_str());
  return {WEXITSTATUS(raw), testutil::slurp(out_file)};
}

json toy_config(const testutil::TempDir& tmp) {
  return {
      {"corpus", testutil::data_path("toy_corpus.jsonl").string()},
      {"qa", testutil::data_path("toy_qa.jsonl").string()},
      {"offline", true},
      {"cache_path", (tmp.path / "fitness_cache.jsonl").string()},
      {"output_dir", (tmp.path / "out").string()},
      {"ga", {{"generations", 2}, {"seed", 7}}},
  };
}

}  // namespace

TEST_CASE("missing dataset path exits with code 2 and a message") {
  testutil::TempDir tmp;
  json config = toy_config(tmp);
  config["corpus"] = (tmp.path / "nope.jsonl").string();
  testutil::spit(tmp.file("config.json"), config.dump());
  const CliResult result = run_cli("baseline --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("does not exist") != std::string::npos);
}

TEST_CASE("infeasible genome exits with code 3 naming the rule") {
  testutil::TempDir tmp;
  json config = toy_config(tmp);
  config["pipeline"] = {{"n_retrieve", 4}};  // pool below the rerank shortlist
  testutil::spit(tmp.file("config.json"), config.dump());
  const CliResult result = run_cli(
      "eval --config " + tmp.file("config.json").string() + " --genome \"0,0,0,1,0,0,0,0,0\"", tmp.path);
  CHECK(result.exit_code == 3);
  CHECK(result.output.find("rerank-pool") != std::string::npos);
}

TEST_CASE("unreachable live endpoint exits with the gateway code 4") {
  testutil::TempDir tmp;
  json config = toy_config(tmp);
  config["offline"] = false;
  config["profiles"] = {{{"profile_id", "dead"},
                         {"base_url", "http://127.0.0.1:1"},
                         {"embedding_model", "m"},
                         {"chat_model", "m"},
                         {"timeout_s", 0.5},
                         {"retry", {{"max_attempts", 1}, {"backoff_base_s", 0.01}}}}};
  testutil::spit(tmp.file("config.json"), config.dump());
  const CliResult result = run_cli("baseline --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(result.exit_code == 4);
  CHECK(result.output.find("gateway") != std::string::npos);
}

TEST_CASE("eval echoes the decoded config by name and persists the record") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("config.json"), toy_config(tmp).dump());
  const CliResult result = run_cli(
      "eval --config " + tmp.file("config.json").string() + " --genome \"[0,1,0,1,1,1,0,1,1]\"",
      tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"query_expansion\": \"multi_query\"") != std::string::npos);
  CHECK(result.output.find("\"reranking\": \"cross_encoder\"") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path / "out" / "eval_[0,1,0,1,1,1,0,1,1].json"));
}

TEST_CASE("baseline evaluates the all-zero genome") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("config.json"), toy_config(tmp).dump());
  const CliResult result = run_cli("baseline --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("[0,0,0,0,0,0,0,0,0]") != std::string::npos);
  CHECK(std::filesystem::exists(tmp.path / "out" / "baseline_record.json"));
}

TEST_CASE("cache stats and clear") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("config.json"), toy_config(tmp).dump());
  run_cli("baseline --config " + tmp.file("config.json").string(), tmp.path);

  CliResult stats = run_cli("cache stats --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(stats.exit_code == 0);
  CHECK(json::parse(stats.output).at("entries").get<int>() == 1);

  CliResult clear = run_cli("cache clear --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(clear.exit_code == 0);
  stats = run_cli("cache stats --config " + tmp.file("config.json").string(), tmp.path);
  CHECK(json::parse(stats.output).at("entries").get<int>() == 0);
}

TEST_CASE("report consumes persisted records and writes both renderings") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("config.json"), toy_config(tmp).dump());
  run_cli("baseline --config " + tmp.file("config.json").string(), tmp.path);
  run_cli("eval --config " + tmp.file("config.json").string() + " --genome \"0,1,0,0,1,1,0,1,1\"",
          tmp.path);

  const std::string best = (tmp.path / "out" / "eval_[0,1,0,0,1,1,0,1,1].json").string();
  const std::string baseline = (tmp.path / "out" / "baseline_record.json").string();
  const CliResult result =
      run_cli("report --best " + best + " --baseline " + baseline + " --name toy --out " +
                  (tmp.path / "report").string(),
              tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(std::filesystem::exists(tmp.path / "report" / "report.md"));
  CHECK(std::filesystem::exists(tmp.path / "report" / "report.json"));
  const json rendered = json::parse(testutil::slurp(tmp.path / "report" / "report.json"));
  CHECK(rendered.at("rows").size() == 1);
}

TEST_CASE("search honors --seed override and reruns reproduce the best") {
  testutil::TempDir tmp;
  testutil::spit(tmp.file("config.json"), toy_config(tmp).dump());
  const std::string base = "search --config " + tmp.file("config.json").string() + " --offline ";
  const CliResult a =
      run_cli(base + "--seed 11 --out " + (tmp.path / "a").string(), tmp.path);
  const CliResult b =
      run_cli(base + "--seed 11 --out " + (tmp.path / "b").string(), tmp.path);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(testutil::slurp(tmp.path / "a" / "best_genome.json") ==
        testutil::slurp(tmp.path / "b" / "best_genome.json"));
}

TEST_CASE("space subcommand prints the serialized search space") {
  testutil::TempDir tmp;
  const CliResult result = run_cli("space", tmp.path);
  CHECK(result.exit_code == 0);
  CHECK(json::parse(result.output).at("cardinality").get<long>() == 46080);
}
