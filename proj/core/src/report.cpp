#include "ragopt/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ragopt/errors.hpp"

namespace ragopt {

using nlohmann::json;

double relative_delta_pct(double best, double baseline) {
  if (baseline == 0.0) return 0.0;
  return 100.0 * (best - baseline) / baseline;
}

std::string format_delta_pct(double delta_pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.1f%%", delta_pct);
  return buf;
}

ComparisonReport build_report(std::vector<ReportEntry> entries) {
  if (entries.empty()) throw Error("report needs at least one (best, baseline) pair");
  ComparisonReport report;
  for (const auto& entry : entries) {
    if (entry.best.dataset_fingerprint != entry.baseline.dataset_fingerprint) {
      throw FingerprintMismatch("dataset '" + entry.dataset +
                                "': best and baseline records come from different datasets (" +
                                entry.best.dataset_fingerprint + " vs " +
                                entry.baseline.dataset_fingerprint + ")");
    }
    ComparisonRow row;
    row.dataset = entry.dataset;
    row.best = entry.best.fitness;
    row.baseline = entry.baseline.fitness;
    row.delta_pct = relative_delta_pct(row.best, row.baseline);
    report.overall.push_back(row);
  }
  if (report.overall.size() > 1) {
    report.has_average = true;
    ComparisonRow& avg = report.average;
    avg.dataset = "Average";
    for (const auto& row : report.overall) {
      avg.best += row.best;
      avg.baseline += row.baseline;
      avg.delta_pct += row.delta_pct;
    }
    const double n = static_cast<double>(report.overall.size());
    avg.best /= n;
    avg.baseline /= n;
    // Mean of the per-dataset relative deltas, not the delta of the means.
    avg.delta_pct /= n;
  }
  report.entries = std::move(entries);
  return report;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

struct MetricColumn {
  const char* label;
  double FitnessRecord::* field;
};

void render_metric_table(std::ostringstream& out, const ComparisonReport& report,
                         const std::vector<MetricColumn>& columns) {
  out << "| Dataset | Method |";
  for (const auto& column : columns) out << " " << column.label << " |";
  out << "\n|---|---|";
  for (size_t i = 0; i < columns.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& entry : report.entries) {
    out << "| " << entry.dataset << " | Best |";
    for (const auto& column : columns) out << " " << fmt3(entry.best.*column.field) << " |";
    out << "\n|  | Baseline |";
    for (const auto& column : columns) out << " " << fmt3(entry.baseline.*column.field) << " |";
    out << "\n|  | %Δ |";
    for (const auto& column : columns) {
      out << " "
          << format_delta_pct(relative_delta_pct(entry.best.*column.field, entry.baseline.*column.field))
          << " |";
    }
    out << "\n";
  }
}

}  // namespace

std::string render_markdown(const ComparisonReport& report) {
  std::ostringstream out;
  out << "# Best vs. baseline\n\n";

  out << "## Overall\n\n";
  out << "| Dataset | Best | Baseline | Improvement |\n|---|---|---|---|\n";
  for (const auto& row : report.overall) {
    out << "| " << row.dataset << " | " << fmt3(row.best) << " | " << fmt3(row.baseline) << " | "
        << format_delta_pct(row.delta_pct) << " |\n";
  }
  if (report.has_average) {
    out << "| **" << report.average.dataset << "** | **" << fmt3(report.average.best) << "** | **"
        << fmt3(report.average.baseline) << "** | **" << format_delta_pct(report.average.delta_pct)
        << "** |\n";
  }

  out << "\n## Retrieval metrics\n\n";
  render_metric_table(out, report,
                      {{"Overall", &FitnessRecord::retrieval_score},
                       {"Recall@k", &FitnessRecord::recall_at_k},
                       {"mAP", &FitnessRecord::map},
                       {"nDCG@k", &FitnessRecord::ndcg_at_k},
                       {"MRR", &FitnessRecord::mrr}});

  out << "\n## Generation metrics\n\n";
  render_metric_table(out, report,
                      {{"Overall", &FitnessRecord::generation_score},
                       {"LLM", &FitnessRecord::llm_judge},
                       {"Semantic", &FitnessRecord::semantic}});
  return out.str();
}

nlohmann::json report_json(const ComparisonReport& report) {
  json rows = json::array();
  for (const auto& entry : report.entries) {
    const auto delta = [&](double FitnessRecord::* field) {
      return relative_delta_pct(entry.best.*field, entry.baseline.*field);
    };
    rows.push_back({{"dataset", entry.dataset},
                    {"best", entry.best.to_json()},
                    {"baseline", entry.baseline.to_json()},
                    {"delta_pct",
                     {{"overall", delta(&FitnessRecord::fitness)},
                      {"retrieval", delta(&FitnessRecord::retrieval_score)},
                      {"generation", delta(&FitnessRecord::generation_score)},
                      {"recall_at_k", delta(&FitnessRecord::recall_at_k)},
                      {"map", delta(&FitnessRecord::map)},
                      {"ndcg_at_k", delta(&FitnessRecord::ndcg_at_k)},
                      {"mrr", delta(&FitnessRecord::mrr)},
                      {"llm", delta(&FitnessRecord::llm_judge)},
                      {"semantic", delta(&FitnessRecord::semantic)}}}});
  }
  json out = {{"rows", rows}};
  if (report.has_average) {
    out["average"] = {{"best", report.average.best},
                      {"baseline", report.average.baseline},
                      {"delta_pct", report.average.delta_pct},
                      {"rendered", format_delta_pct(report.average.delta_pct)}};
  }
  return out;
}

}  // namespace ragopt
