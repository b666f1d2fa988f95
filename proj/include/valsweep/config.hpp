#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "valsweep/evaluator.hpp"

namespace valsweep {

// Everything that defines a run. The worker count is not part of it: results
// do not depend on it.
struct RunConfig {
  std::string dataset;
  std::string target = "target";
  std::vector<std::string> models;  // registry names; empty means all seven
  std::string output_dir;
  ExperimentConfig experiment;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// INI text with sections [data], [run], [nested], [holdout], [kfold],
// [repeated]. Missing keys keep their defaults. Throws kConfigError.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string dump_config(const RunConfig& config);

// Range checks: fractions in (0,1), k within [2,50], counts >= 1, known
// model names. Throws kConfigError.
void validate(const RunConfig& config);

// Hex FNV-1a digest of the dumped config without the output directory.
std::string config_digest(const RunConfig& config);

std::vector<ModelSpec> resolve_models(const RunConfig& config);

// "0.1,0.5" -> {0.1, 0.5}
std::vector<double> parse_fraction_list(std::string_view text);
// "2..15" or "3,5,10"
std::vector<std::size_t> parse_k_list(std::string_view text);
std::string format_k_list(const std::vector<std::size_t>& ks);

}  // namespace valsweep
