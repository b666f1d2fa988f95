// valsweep: compare validation strategies across reference classifiers.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "valsweep/config.hpp"
#include "valsweep/error.hpp"
#include "valsweep/evaluator.hpp"
#include "valsweep/report.hpp"
#include "valsweep/tabular.hpp"

namespace {

using namespace valsweep;

enum Exit { kOk = 0, kConfigExit = 2, kDataExit = 3, kRunExit = 4 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError:
    case ErrorKind::kUnknownFormat:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kBadK:
      return kConfigExit;
    case ErrorKind::kFileUnreadable:
    case ErrorKind::kMissingTargetColumn:
    case ErrorKind::kNonBinaryTarget:
    case ErrorKind::kSingleClassTarget:
    case ErrorKind::kMalformedCsv:
    case ErrorKind::kMissingArtifacts:
    case ErrorKind::kCorruptLog:
    case ErrorKind::kEmptyInput:
      return kDataExit;
    default:
      return kRunExit;
  }
}

std::string default_output_dir() {
  if (const char* env = std::getenv("VALSWEEP_OUTPUT_DIR"); env && *env) return env;
  return "valsweep-out";
}

// Flags shared by `run` and `sweep`; unset flags leave the config untouched.
struct CommonFlags {
  std::string config_path;
  std::optional<std::string> data, target, models, output, grid;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  bool dump = false;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "INI run configuration");
    app->add_option("-d,--data", data, "Input CSV");
    app->add_option("-t,--target", target, "Target column (default: target)");
    app->add_option("-m,--models", models, "Comma-separated model names (default: all)");
    app->add_option("-o,--output", output, "Output directory (default: $VALSWEEP_OUTPUT_DIR)");
    app->add_option("--grid", grid, "full or reduced")->check(CLI::IsMember({"full", "reduced"}));
    app->add_option("--seed", seed, "Base seed");
    app->add_option("-j,--jobs", jobs, "Worker threads; 0 uses every core")->capture_default_str();
    app->add_flag("--dump-config", dump, "Print the effective configuration and exit");
    app->add_flag("-q,--quiet", quiet, "Do not print the report");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) c = load_config(config_path);
    if (data) c.dataset = *data;
    if (target) c.target = *target;
    if (models) c.models = parse_model_list(*models);
    if (output) c.output_dir = *output;
    if (grid) c.experiment.grid = *parse_grid_mode(*grid);
    if (seed) c.experiment.seed = *seed;
    if (c.output_dir.empty()) c.output_dir = default_output_dir();
    return c;
  }

  static std::vector<std::string> parse_model_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');)
      if (!item.empty()) out.push_back(item);
    return out;
  }
};

int execute(const RunConfig& config, std::size_t jobs, bool quiet, bool print_summary) {
  validate(config);
  if (config.dataset.empty()) throw Error(ErrorKind::kConfigError, "no dataset given (--data)");
  const auto data = load_csv(config.dataset, config.target);
  const auto specs = resolve_models(config);

  const Evaluator evaluator(data, config.experiment, jobs);
  const auto outcomes = evaluator.run(specs);

  RunMetadata meta;
  meta.dataset = std::filesystem::path(config.dataset).filename().string();
  meta.rows = data.row_count();
  meta.features = data.feature_count();
  meta.prevalence = prevalence(data);
  meta.seed = config.experiment.seed;
  meta.config_digest = config_digest(config);
  meta.scorer = std::string(scorer_name(evaluator.scorer()));
  meta.grid = std::string(grid_mode_name(config.experiment.grid));
  const auto table = build_report(meta, outcomes);
  write_report_files(config.output_dir, table, outcomes);

  if (!quiet) {
    std::cout << (print_summary ? render_summary(table, ReportFormat::kMarkdown)
                                : render_best_view(table, ReportFormat::kMarkdown));
    if (!print_summary) {
      for (const auto& r : table.rows)
        if (r.skipped) std::cout << fmt::format("skipped: {} {} ({})\n", r.model, r.strategy, r.skip_reason);
    }
    std::cout << fmt::format("\nwrote {}\n", config.output_dir);
  }

  int status = kOk;
  for (const auto& r : table.rows) {
    if (!r.skipped && r.evaluations == 0) {
      std::cerr << fmt::format("error: {} / {} produced no successful evaluation\n", r.model,
                               r.strategy);
      status = kRunExit;
    }
  }
  return status;
}

int report(const std::string& input, const std::optional<std::string>& format,
           const std::optional<std::string>& output, bool quiet) {
  const auto chosen = format ? std::optional<ReportFormat>(parse_format(*format)) : std::nullopt;
  std::filesystem::path log_path = input;
  if (std::filesystem::is_directory(log_path)) log_path /= "evals.log";
  std::ifstream in(log_path);
  if (!in) {
    throw Error(ErrorKind::kMissingArtifacts, fmt::format("cannot read {}", log_path.string()));
  }
  const auto log = read_eval_log(in);
  const auto table = build_report(log.meta, log.outcomes);
  const std::filesystem::path dir = output ? std::filesystem::path(*output) : log_path.parent_path();

  if (chosen) {
    const auto f = *chosen;
    const char* ext = f == ReportFormat::kCsv ? "csv" : f == ReportFormat::kJson ? "json" : "md";
    std::filesystem::create_directories(dir.empty() ? "." : dir);
    std::ofstream out(dir / fmt::format("best.{}", ext), std::ios::binary);
    out << render_best_view(table, f);
    if (!out) throw Error(ErrorKind::kFileUnreadable, "cannot write report");
    if (!quiet) std::cout << render_best_view(table, f);
    return kOk;
  }
  // Rewrite all artifacts; evals.log is reproduced from what was read.
  write_report_files(dir.empty() ? "." : dir, table, log.outcomes);
  if (!quiet) std::cout << render_best_view(table, ReportFormat::kMarkdown);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"valsweep: validation-strategy sweeps for binary classifiers"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Every strategy for every selected model");
  run_flags.attach(run);

  CommonFlags sweep_flags;
  std::string which;
  std::optional<std::string> sizes, ks;
  std::optional<std::size_t> repeats, cap;
  auto* sweep = app.add_subcommand("sweep", "One strategy family");
  sweep->add_option("family", which, "holdout, kfold, nested or repeated")
      ->required()
      ->check(CLI::IsMember({"holdout", "kfold", "nested", "repeated"}));
  sweep_flags.attach(sweep);
  sweep->add_option("--sizes", sizes, "Holdout test fractions, e.g. 0.1,0.9");
  sweep->add_option("--k", ks, "k values, e.g. 2..15 or 3,5,10");
  sweep->add_option("--repeats", repeats, "Repeats per strategy (outer repeats for nested)");
  sweep->add_option("--cap", cap, "Repeated holdout cap");

  std::string input;
  std::optional<std::string> format, report_out;
  bool report_quiet = false;
  auto* rep = app.add_subcommand("report", "Re-render reports from a previous run's evals.log");
  rep->add_option("input", input, "Run directory or evals.log path")->required();
  rep->add_option("-f,--format", format, "csv, json or markdown: write only best.<ext>");
  rep->add_option("-o,--output", report_out, "Directory for the rendered files");
  rep->add_flag("-q,--quiet", report_quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) {
      const auto config = run_flags.resolve();
      if (run_flags.dump) {
        validate(config);
        std::cout << dump_config(config);
        return kOk;
      }
      return execute(config, run_flags.jobs, run_flags.quiet, false);
    }
    if (*sweep) {
      auto config = sweep_flags.resolve();
      auto& e = config.experiment;
      e.nested = which == "nested";
      e.repeated = which == "repeated";
      if (which != "holdout") e.test_sizes.clear();
      if (which != "kfold") e.k_values.clear();
      if (sizes) e.test_sizes = parse_fraction_list(*sizes);
      if (ks) e.k_values = parse_k_list(*ks);
      if (repeats) {
        if (which == "holdout") e.holdout_repeats = *repeats;
        if (which == "kfold") e.kfold_repeats = *repeats;
        if (which == "nested") e.nested_repeats = *repeats;
        if (which == "repeated") e.repeated_nominal = *repeats;
      }
      if (cap) e.repeated_cap = *cap;
      if (sweep_flags.dump) {
        validate(config);
        std::cout << dump_config(config);
        return kOk;
      }
      return execute(config, sweep_flags.jobs, sweep_flags.quiet, true);
    }
    return report(input, format, report_out, report_quiet);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunExit;
  }
}
