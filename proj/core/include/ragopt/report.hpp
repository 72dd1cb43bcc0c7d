#pragma once

#include <string>
#include <vector>

#include "ragopt/fitness.hpp"

#include "json.hpp"

namespace ragopt {

struct ReportEntry {
  std::string dataset;
  FitnessRecord best;
  FitnessRecord baseline;
};

struct ComparisonRow {
  std::string dataset;
  double best = 0.0;
  double baseline = 0.0;
  double delta_pct = 0.0;  // 100 * (best - baseline) / baseline
};

struct ComparisonReport {
  std::vector<ReportEntry> entries;

  // Overall table (plus the average row when there is more than one entry).
  std::vector<ComparisonRow> overall;
  bool has_average = false;
  ComparisonRow average;  // best/baseline are column means; delta is the mean
                          // of the per-row full-precision deltas
};

/// Validates that each entry's best and baseline share a dataset fingerprint
/// (throws FingerprintMismatch) and computes the comparison rows.
ComparisonReport build_report(std::vector<ReportEntry> entries);

/// "+3.8%" style: sign always shown, one decimal.
std::string format_delta_pct(double delta_pct);

double relative_delta_pct(double best, double baseline);

std::string render_markdown(const ComparisonReport& report);
nlohmann::json report_json(const ComparisonReport& report);

}  // namespace ragopt
