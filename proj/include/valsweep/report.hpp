#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valsweep/evaluator.hpp"

namespace valsweep {

struct RunMetadata {
  std::string dataset;
  std::size_t rows = 0;
  std::size_t features = 0;
  double prevalence = 0.0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string scorer;
  std::string grid;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct ReportTable {
  RunMetadata meta;
  std::vector<StrategyResult> rows;
  std::vector<BestEntry> best_view;
};

enum class ReportFormat { kCsv, kJson, kMarkdown };

// Throws kUnknownFormat.
ReportFormat parse_format(std::string_view name);

// Rows in model order then canonical strategy order; skipped entries are kept.
ReportTable build_report(RunMetadata meta, const std::vector<ModelOutcome>& outcomes);

// "Decision Tree", "Linear SVM (Calibrated)", ...; unknown names pass through.
std::string model_display_name(std::string_view registry_name);

std::string render_summary(const ReportTable& table, ReportFormat format);
std::string render_best_view(const ReportTable& table, ReportFormat format);

// Inverse of render_summary(kCsv) for the result rows.
std::vector<StrategyResult> parse_summary_csv(std::istream& in);

// Line-delimited JSON: one meta line, then one line per evaluation or skip.
void write_eval_log(std::ostream& out, const RunMetadata& meta,
                    const std::vector<ModelOutcome>& outcomes);

struct EvalLog {
  RunMetadata meta;
  std::vector<ModelOutcome> outcomes;
};

// Throws kCorruptLog naming the offending line.
EvalLog read_eval_log(std::istream& in);

// summary.csv, summary.json, best.md, best.json and evals.log.
void write_report_files(const std::filesystem::path& dir, const ReportTable& table,
                        const std::vector<ModelOutcome>& outcomes);

}  // namespace valsweep
