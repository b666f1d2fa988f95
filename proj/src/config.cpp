#include "valsweep/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "valsweep/error.hpp"
#include "valsweep/random.hpp"

namespace valsweep {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view field) {
  const auto s = trim(text);
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end) {
    throw Error(ErrorKind::kConfigError, fmt::format("{}: '{}' is not a valid number", field, s));
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view field) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorKind::kConfigError, fmt::format("{}: '{}' is not a boolean", field, s));
}

// Visits every known key; `read` pulls the value for a key if present.
template <typename Reader>
void for_each_field(RunConfig& c, Reader&& read) {
  auto& e = c.experiment;
  read("data.path", [&](const std::string& v) { c.dataset = v; });
  read("data.target", [&](const std::string& v) { c.target = v; });
  read("run.models", [&](const std::string& v) { c.models = split_list(v); });
  read("run.seed", [&](const std::string& v) { e.seed = parse_number<std::uint64_t>(v, "run.seed"); });
  read("run.grid", [&](const std::string& v) {
    const auto g = parse_grid_mode(trim(v));
    if (!g) throw Error(ErrorKind::kConfigError, "run.grid must be full or reduced");
    e.grid = *g;
  });
  read("run.output", [&](const std::string& v) { c.output_dir = v; });
  read("nested.enabled", [&](const std::string& v) { e.nested = parse_bool(v, "nested.enabled"); });
  read("nested.outer", [&](const std::string& v) {
    e.nested_outer = parse_number<std::size_t>(v, "nested.outer");
  });
  read("nested.repeats", [&](const std::string& v) {
    e.nested_repeats = parse_number<std::size_t>(v, "nested.repeats");
  });
  read("nested.inner", [&](const std::string& v) {
    e.inner_folds = parse_number<std::size_t>(v, "nested.inner");
  });
  read("holdout.test_sizes", [&](const std::string& v) { e.test_sizes = parse_fraction_list(v); });
  read("holdout.repeats", [&](const std::string& v) {
    e.holdout_repeats = parse_number<std::size_t>(v, "holdout.repeats");
  });
  read("kfold.k", [&](const std::string& v) { e.k_values = parse_k_list(v); });
  read("kfold.repeats", [&](const std::string& v) {
    e.kfold_repeats = parse_number<std::size_t>(v, "kfold.repeats");
  });
  read("repeated.enabled", [&](const std::string& v) {
    e.repeated = parse_bool(v, "repeated.enabled");
  });
  read("repeated.test_size", [&](const std::string& v) {
    e.repeated_test_size = parse_number<double>(v, "repeated.test_size");
  });
  read("repeated.nominal", [&](const std::string& v) {
    e.repeated_nominal = parse_number<std::size_t>(v, "repeated.nominal");
  });
  read("repeated.cap", [&](const std::string& v) {
    e.repeated_cap = parse_number<std::size_t>(v, "repeated.cap");
  });
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

std::vector<double> parse_fraction_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<double>(item, "test sizes"));
  return out;
}

std::vector<std::size_t> parse_k_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_number<std::size_t>(item, "k"));
      continue;
    }
    const auto lo = parse_number<std::size_t>(item.substr(0, dots), "k range");
    const auto hi = parse_number<std::size_t>(item.substr(dots + 2), "k range");
    if (hi < lo) throw Error(ErrorKind::kConfigError, fmt::format("k range {} is empty", item));
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
  }
  return out;
}

std::string format_k_list(const std::vector<std::size_t>& ks) {
  bool contiguous = ks.size() > 1;
  for (std::size_t i = 1; i < ks.size(); ++i) contiguous = contiguous && ks[i] == ks[i - 1] + 1;
  if (contiguous) return fmt::format("{}..{}", ks.front(), ks.back());
  std::string out;
  for (auto k : ks) out += (out.empty() ? "" : ",") + std::to_string(k);
  return out;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::kConfigError, fmt::format("line {}: {}", e.line(), e.message()));
  }
  std::size_t used = 0;
  for_each_field(base, [&](const char* key, auto&& apply) {
    if (auto v = tree.get_optional<std::string>(key)) {
      ++used;
      apply(*v);
    }
  });
  std::size_t present = 0;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::kConfigError, fmt::format("key '{}' outside a section", section));
    }
    present += body.size();
  }
  if (present != used) {
    for (const auto& [section, body] : tree) {
      for (const auto& [key, value] : body) {
        bool known = false;
        RunConfig scratch;
        for_each_field(scratch, [&](const char* k, auto&&) { known = known || section + "." + key == k; });
        if (!known) {
          throw Error(ErrorKind::kConfigError, fmt::format("unknown key '{}.{}'", section, key));
        }
      }
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfigError, fmt::format("cannot read config {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfigError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string dump_config(const RunConfig& c) {
  const auto& e = c.experiment;
  std::string fractions;
  for (double f : e.test_sizes) fractions += (fractions.empty() ? "" : ",") + format_double(f);
  return fmt::format(
      "[data]\npath = {}\ntarget = {}\n\n"
      "[run]\nmodels = {}\nseed = {}\ngrid = {}\noutput = {}\n\n"
      "[nested]\nenabled = {}\nouter = {}\nrepeats = {}\ninner = {}\n\n"
      "[holdout]\ntest_sizes = {}\nrepeats = {}\n\n"
      "[kfold]\nk = {}\nrepeats = {}\n\n"
      "[repeated]\nenabled = {}\ntest_size = {}\nnominal = {}\ncap = {}\n",
      c.dataset, c.target, join(c.models), e.seed, grid_mode_name(e.grid), c.output_dir, e.nested,
      e.nested_outer, e.nested_repeats, e.inner_folds, fractions, e.holdout_repeats,
      format_k_list(e.k_values), e.kfold_repeats, e.repeated, format_double(e.repeated_test_size),
      e.repeated_nominal, e.repeated_cap);
}

void validate(const RunConfig& c) {
  const auto& e = c.experiment;
  auto fail = [](std::string msg) { throw Error(ErrorKind::kConfigError, std::move(msg)); };
  if (c.target.empty()) fail("data.target must not be empty");
  for (const auto& m : c.models)
    if (!parse_family(m)) fail(fmt::format("run.models: unknown model '{}'", m));
  for (double f : e.test_sizes)
    if (!(f > 0.0 && f < 1.0)) fail(fmt::format("holdout.test_sizes: {} is outside (0,1)", f));
  if (!(e.repeated_test_size > 0.0 && e.repeated_test_size < 1.0))
    fail("repeated.test_size must lie in (0,1)");
  for (auto k : e.k_values)
    if (k < 2 || k > 50) fail(fmt::format("kfold.k: {} is outside [2,50]", k));
  if (e.nested_outer < 2 || e.nested_outer > 50) fail("nested.outer must lie in [2,50]");
  if (e.inner_folds < 2) fail("nested.inner must be >= 2");
  if (e.nested_repeats < 1 || e.holdout_repeats < 1 || e.kfold_repeats < 1 ||
      e.repeated_nominal < 1 || e.repeated_cap < 1)
    fail("repeat counts must be >= 1");
}

std::string config_digest(const RunConfig& config) {
  RunConfig c = config;
  c.output_dir.clear();
  return fmt::format("{:016x}", fnv1a64(dump_config(c)));
}

std::vector<ModelSpec> resolve_models(const RunConfig& config) {
  if (config.models.empty()) return registry();
  std::vector<ModelSpec> out;
  for (const auto& name : config.models) {
    const auto family = parse_family(name);
    if (!family) throw Error(ErrorKind::kConfigError, fmt::format("unknown model '{}'", name));
    out.push_back(spec_for(*family));
  }
  return out;
}

}  // namespace valsweep
