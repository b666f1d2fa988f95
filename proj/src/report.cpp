#include "valsweep/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "valsweep/error.hpp"

namespace valsweep {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out;
}

std::string fixed3(double v) { return std::isnan(v) ? "NA" : fmt::format("{:.3f}", v); }

std::string status_of(const StrategyResult& r) {
  if (r.skipped) return "skipped";
  return r.evaluations == 0 ? "failed" : "ok";
}

double parse_real(const std::string& cell) {
  if (cell == "NA") return kNaN;
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw Error(ErrorKind::kMalformedCsv, fmt::format("bad number '{}' in summary", cell));
  }
  return v;
}

json metrics_json(const MetricSet& m) {
  json out = json::object();
  for (auto metric : kAllMetrics) {
    const double v = m.get(metric);
    out[std::string(metric_name(metric))] = std::isnan(v) ? json(nullptr) : json(v);
  }
  return out;
}

MetricSet metrics_from_json(const json& j) {
  MetricSet m{};
  for (auto metric : kAllMetrics) {
    const auto& v = j.at(std::string(metric_name(metric)));
    m.set(metric, v.is_null() ? kNaN : v.get<double>());
  }
  return m;
}

json meta_json(const RunMetadata& m) {
  return {{"dataset", m.dataset},     {"rows", m.rows},     {"features", m.features},
          {"prevalence", m.prevalence}, {"seed", m.seed},   {"config_digest", m.config_digest},
          {"scorer", m.scorer},       {"grid", m.grid}};
}

RunMetadata meta_from_json(const json& j) {
  RunMetadata m;
  m.dataset = j.at("dataset").get<std::string>();
  m.rows = j.at("rows").get<std::size_t>();
  m.features = j.at("features").get<std::size_t>();
  m.prevalence = j.at("prevalence").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.scorer = j.at("scorer").get<std::string>();
  m.grid = j.at("grid").get<std::string>();
  return m;
}

std::string metadata_line(const RunMetadata& m) {
  return fmt::format("Dataset: {} ({} rows, {} features, prevalence {:.3f}); scorer {}; grid {}; "
                     "seed {}; config {}",
                     m.dataset, m.rows, m.features, m.prevalence, m.scorer, m.grid, m.seed,
                     m.config_digest);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFileUnreadable, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kFileUnreadable, "failed writing " + path.string());
}

}  // namespace

ReportFormat parse_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw Error(ErrorKind::kUnknownFormat, fmt::format("unknown report format '{}'", name));
}

std::string model_display_name(std::string_view name) {
  if (name == "DecisionTree") return "Decision Tree";
  if (name == "KNN") return "KNN";
  if (name == "GaussianNB") return "Gaussian Naive Bayes";
  if (name == "BernoulliNB") return "Bernoulli Naive Bayes";
  if (name == "LogReg") return "Logistic Regression";
  if (name == "LinearSVM_Calibrated") return "Linear SVM (Calibrated)";
  if (name == "HistGB") return "Histogram-Based GB";
  return std::string(name);
}

ReportTable build_report(RunMetadata meta, const std::vector<ModelOutcome>& outcomes) {
  ReportTable t;
  t.meta = std::move(meta);
  for (const auto& mo : outcomes) {
    for (const auto& so : mo.strategies) {
      auto r = aggregate(mo.model, so.strategy, so.records);
      if (so.skip_reason) {
        r.skipped = true;
        r.skip_reason = *so.skip_reason;
      }
      t.rows.push_back(std::move(r));
    }
  }
  t.best_view = best_strategy_per_model(t.rows);
  return t;
}

std::string render_summary(const ReportTable& t, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kCsv: {
      out = "model,strategy,status,evaluations,failures";
      for (auto m : kAllMetrics) out += fmt::format(",{0}_mean,{0}_std", metric_name(m));
      out += ",note\n";
      for (const auto& r : t.rows) {
        out += fmt::format("{},{},{},{},{}", csv_field(r.model), csv_field(r.strategy), status_of(r),
                           r.evaluations, r.failures);
        for (auto m : kAllMetrics) {
          out += "," + format_double(r.mean.get(m)) + "," + format_double(r.stddev.get(m));
        }
        out += "," + csv_field(r.skip_reason) + "\n";
      }
      return out;
    }
    case ReportFormat::kJson: {
      json rows = json::array();
      for (const auto& r : t.rows) {
        rows.push_back({{"model", r.model},
                        {"strategy", r.strategy},
                        {"status", status_of(r)},
                        {"evaluations", r.evaluations},
                        {"failures", r.failures},
                        {"mean", metrics_json(r.mean)},
                        {"std", metrics_json(r.stddev)},
                        {"skip_reason", r.skip_reason.empty() ? json(nullptr) : json(r.skip_reason)}});
      }
      return json{{"metadata", meta_json(t.meta)}, {"rows", rows}}.dump(2) + "\n";
    }
    case ReportFormat::kMarkdown: {
      out = "# Validation strategy summary\n\n" + metadata_line(t.meta) + "\n\n";
      out += "| Model | Strategy | ROC-AUC | PR-AUC | Accuracy | F1 | MCC | Brier | Evals | Failures |\n";
      out += "|---|---|---|---|---|---|---|---|---|---|\n";
      std::string skipped;
      for (const auto& r : t.rows) {
        if (r.skipped) {
          skipped += fmt::format("- {} / {}: {}\n", model_display_name(r.model),
                                 strategy_display_name(r.strategy), md_cell(r.skip_reason));
          continue;
        }
        out += fmt::format("| {} | {} ", model_display_name(r.model), strategy_display_name(r.strategy));
        for (auto m : {Metric::kRocAuc, Metric::kPrAuc, Metric::kAccuracy, Metric::kF1, Metric::kMcc,
                       Metric::kBrier}) {
          const double mean = r.mean.get(m);
          out += std::isnan(mean) ? "| NA "
                                  : fmt::format("| {} ± {} ", fixed3(mean), fixed3(r.stddev.get(m)));
        }
        out += fmt::format("| {} | {} |\n", r.evaluations, r.failures);
      }
      if (!skipped.empty()) out += "\n## Skipped\n\n" + skipped;
      return out;
    }
  }
  return out;
}

std::string render_best_view(const ReportTable& t, ReportFormat format) {
  std::vector<std::string> models;
  for (const auto& r : t.rows)
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  auto lookup = [&](const std::string& model, Metric m) -> const BestEntry* {
    for (const auto& b : t.best_view)
      if (b.model == model && b.metric == m) return &b;
    return nullptr;
  };

  switch (format) {
    case ReportFormat::kCsv: {
      std::string out = "model,metric,strategy,score\n";
      for (const auto& b : t.best_view) {
        out += fmt::format("{},{},{},{}\n", csv_field(b.model), metric_name(b.metric),
                           csv_field(b.strategy), format_double(b.score));
      }
      return out;
    }
    case ReportFormat::kJson: {
      json view = json::array();
      for (const auto& b : t.best_view) {
        view.push_back({{"model", b.model},
                        {"metric", metric_name(b.metric)},
                        {"strategy", b.strategy},
                        {"display", strategy_display_name(b.strategy)},
                        {"score", b.score}});
      }
      return json{{"metadata", meta_json(t.meta)}, {"best_view", view}}.dump(2) + "\n";
    }
    case ReportFormat::kMarkdown: {
      constexpr std::array<Metric, 4> kColumns{Metric::kRocAuc, Metric::kAccuracy, Metric::kF1,
                                               Metric::kMcc};
      std::string out = "# Best validation strategy per model\n\n" + metadata_line(t.meta) + "\n\n";
      out += "| Model | Best ROC-AUC (Strategy) | Best Accuracy (Strategy) | Best F1-Score (Strategy) "
             "| Best MCC (Strategy) |\n|---|---|---|---|---|\n";
      for (const auto& model : models) {
        out += "| " + model_display_name(model) + " ";
        for (auto m : kColumns) {
          const auto* b = lookup(model, m);
          out += b ? fmt::format("| {} ({}) ", fixed3(b->score), strategy_display_name(b->strategy))
                   : "| NA ";
        }
        out += "|\n";
      }
      return out;
    }
  }
  return {};
}

std::vector<StrategyResult> parse_summary_csv(std::istream& in) {
  const auto records = read_csv_records(in, "summary.csv");
  if (records.empty()) throw Error(ErrorKind::kMalformedCsv, "summary.csv is empty");
  const std::size_t width = 5 + 2 * kAllMetrics.size() + 1;
  std::vector<StrategyResult> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.size() != width) {
      throw Error(ErrorKind::kMalformedCsv, fmt::format("summary.csv row {} has {} fields", i + 1,
                                                        rec.size()));
    }
    StrategyResult r;
    r.model = rec[0];
    r.strategy = rec[1];
    r.skipped = rec[2] == "skipped";
    r.evaluations = static_cast<std::size_t>(std::stoull(rec[3]));
    r.failures = static_cast<std::size_t>(std::stoull(rec[4]));
    for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
      r.mean.set(kAllMetrics[k], parse_real(rec[5 + 2 * k]));
      r.stddev.set(kAllMetrics[k], parse_real(rec[6 + 2 * k]));
    }
    r.skip_reason = rec.back();
    out.push_back(std::move(r));
  }
  return out;
}

void write_eval_log(std::ostream& out, const RunMetadata& meta,
                    const std::vector<ModelOutcome>& outcomes) {
  json head = meta_json(meta);
  head["type"] = "meta";
  head["format"] = "valsweep-evals";
  head["version"] = 1;
  out << head.dump() << '\n';
  for (const auto& mo : outcomes) {
    for (const auto& so : mo.strategies) {
      if (so.skip_reason) {
        out << json{{"type", "skip"}, {"model", mo.model}, {"strategy", so.strategy},
                    {"reason", *so.skip_reason}}
                   .dump()
            << '\n';
      }
      for (const auto& r : so.records) {
        out << json{{"type", "eval"},
                    {"model", r.model},
                    {"strategy", r.strategy},
                    {"repeat", r.repeat},
                    {"fold", r.fold},
                    {"seed", r.seed},
                    {"train_size", r.train_size},
                    {"test_size", r.test_size},
                    {"failed", r.failed},
                    {"error", r.error},
                    {"candidate", r.candidate},
                    {"inner_score", r.inner_score},
                    {"inner_folds", r.inner_folds},
                    {"metrics", metrics_json(r.metrics)},
                    {"warnings", r.warnings}}
                   .dump()
            << '\n';
      }
    }
  }
}

EvalLog read_eval_log(std::istream& in) {
  EvalLog log;
  std::string line;
  std::size_t lineno = 0;
  bool have_meta = false;

  auto strategy_slot = [&](const std::string& model, const std::string& strategy) -> StrategyOutcome& {
    if (log.outcomes.empty() || log.outcomes.back().model != model) {
      log.outcomes.push_back({model, {}});
    }
    auto& strategies = log.outcomes.back().strategies;
    if (strategies.empty() || strategies.back().strategy != strategy) {
      strategies.push_back({strategy, {}, std::nullopt});
    }
    return strategies.back();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (!have_meta) {
        if (type != "meta" || j.at("format") != "valsweep-evals") {
          throw Error(ErrorKind::kCorruptLog, "first record must be the run metadata");
        }
        log.meta = meta_from_json(j);
        have_meta = true;
      } else if (type == "skip") {
        strategy_slot(j.at("model").get<std::string>(), j.at("strategy").get<std::string>())
            .skip_reason = j.at("reason").get<std::string>();
      } else if (type == "eval") {
        EvalRecord r;
        r.model = j.at("model").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.repeat = j.at("repeat").get<std::size_t>();
        r.fold = j.at("fold").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.train_size = j.at("train_size").get<std::size_t>();
        r.test_size = j.at("test_size").get<std::size_t>();
        r.failed = j.at("failed").get<bool>();
        r.error = j.at("error").get<std::string>();
        r.candidate = j.at("candidate").get<std::string>();
        r.inner_score = j.at("inner_score").is_null() ? kNaN : j.at("inner_score").get<double>();
        r.inner_folds = j.at("inner_folds").get<std::size_t>();
        r.metrics = metrics_from_json(j.at("metrics"));
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        strategy_slot(r.model, r.strategy).records.push_back(std::move(r));
      } else {
        throw Error(ErrorKind::kCorruptLog, fmt::format("unknown record type '{}'", type));
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::kCorruptLog, fmt::format("evals.log line {}: {}", lineno, e.what()));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kCorruptLog, fmt::format("evals.log line {}: {}", lineno, e.what()));
    }
  }
  if (!have_meta) throw Error(ErrorKind::kCorruptLog, "evals.log has no metadata line");
  return log;
}

void write_report_files(const std::filesystem::path& dir, const ReportTable& table,
                        const std::vector<ModelOutcome>& outcomes) {
  std::filesystem::create_directories(dir);
  write_file(dir / "summary.csv", render_summary(table, ReportFormat::kCsv));
  write_file(dir / "summary.json", render_summary(table, ReportFormat::kJson));
  write_file(dir / "best.md", render_best_view(table, ReportFormat::kMarkdown));
  write_file(dir / "best.json", render_best_view(table, ReportFormat::kJson));
  std::ostringstream log;
  write_eval_log(log, table.meta, outcomes);
  write_file(dir / "evals.log", log.str());
}

}  // namespace valsweep
