#include "valsweep/tabular.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "valsweep/error.hpp"

namespace valsweep {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing_token(std::string_view raw) {
  const auto s = trim(raw);
  return s.empty() || s == "NA";
}

std::optional<double> parse_real(std::string_view raw) {
  const auto s = trim(raw);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos ||
         (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void write_field(std::ostream& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

bool Column::is_missing(std::size_t row) const {
  return kind == ColumnKind::kNumeric ? std::isnan(numeric.at(row))
                                      : !categorical.at(row).has_value();
}

bool operator==(const Column& a, const Column& b) {
  if (a.name != b.name || a.kind != b.kind || a.categorical != b.categorical ||
      a.numeric.size() != b.numeric.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.numeric.size(); ++i) {
    if (!same_double(a.numeric[i], b.numeric[i])) return false;
  }
  return true;
}

Dataset::Dataset(std::string target_name, std::vector<Column> columns,
                 std::vector<std::uint8_t> target)
    : target_name_(std::move(target_name)),
      columns_(std::move(columns)),
      target_(std::move(target)) {
  std::unordered_set<std::string> seen;
  for (const auto& col : columns_) {
    if (col.size() != target_.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "column '" + col.name + "' has " + std::to_string(col.size()) +
                      " cells, expected " + std::to_string(target_.size()));
    }
    if (col.name == target_name_) {
      throw Error(ErrorKind::kInvalidArgument,
                  "feature list contains the target column '" + col.name + "'");
    }
    if (!seen.insert(col.name).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate column name '" + col.name + "'");
    }
  }
  for (auto label : target_) {
    if (label > 1) {
      throw Error(ErrorKind::kNonBinaryTarget,
                  "label " + std::to_string(label) + " is not in {0,1}");
    }
  }
  const auto [neg, pos] = class_counts(std::span<const std::uint8_t>(target_));
  if (neg == 0 || pos == 0) {
    throw Error(ErrorKind::kSingleClassTarget,
                "target '" + target_name_ + "' contains a single class");
  }
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

ColumnKinds Dataset::kinds() const {
  ColumnKinds kinds;
  for (const auto& c : columns_) {
    (c.kind == ColumnKind::kNumeric ? kinds.numeric : kinds.categorical).push_back(c.name);
  }
  return kinds;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column out{c.name, c.kind, {}, {}};
    if (c.kind == ColumnKind::kNumeric) {
      out.numeric.reserve(rows.size());
      for (auto r : rows) out.numeric.push_back(c.numeric.at(r));
    } else {
      out.categorical.reserve(rows.size());
      for (auto r : rows) out.categorical.push_back(c.categorical.at(r));
    }
    cols.push_back(std::move(out));
  }
  std::vector<std::uint8_t> target;
  target.reserve(rows.size());
  for (auto r : rows) target.push_back(target_.at(r));
  return Dataset(target_name_, std::move(cols), std::move(target));
}

Dataset Dataset::with_target(std::vector<std::uint8_t> target) const {
  return Dataset(target_name_, columns_, std::move(target));
}

Column infer_column(std::string name, const std::vector<std::string>& cells) {
  bool numeric = true;
  for (const auto& cell : cells) {
    if (!is_missing_token(cell) && !parse_real(cell)) {
      numeric = false;
      break;
    }
  }
  Column col{std::move(name), numeric ? ColumnKind::kNumeric : ColumnKind::kCategorical, {}, {}};
  if (numeric) {
    col.numeric.reserve(cells.size());
    for (const auto& cell : cells) {
      col.numeric.push_back(is_missing_token(cell) ? std::nan("") : *parse_real(cell));
    }
  } else {
    col.categorical.reserve(cells.size());
    for (const auto& cell : cells) {
      if (is_missing_token(cell)) {
        col.categorical.emplace_back(std::nullopt);
      } else {
        col.categorical.emplace_back(cell);
      }
    }
  }
  return col;
}

std::vector<std::vector<std::string>> read_csv_records(std::istream& in,
                                                       const std::string& source_name) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool at_record_start = true;
  std::size_t line = 1;

  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    at_record_start = true;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw Error(ErrorKind::kMalformedCsv,
                      source_name + ":" + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        field_was_quoted = true;
        at_record_start = false;
        break;
      case ',':
        end_field();
        at_record_start = false;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_was_quoted) {
          throw Error(ErrorKind::kMalformedCsv,
                      source_name + ":" + std::to_string(line) +
                          ": characters after closing quote");
        }
        field.push_back(c);
        at_record_start = false;
        break;
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::kMalformedCsv, source_name + ": unterminated quoted field");
  }
  if (!at_record_start) end_record();

  // Blank lines carry no data.
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return records;
}

Dataset parse_csv(std::istream& in, const std::string& target, const std::string& source_name) {
  auto records = read_csv_records(in, source_name);
  if (records.empty()) {
    throw Error(ErrorKind::kMalformedCsv, source_name + ": missing header row");
  }
  const auto& header = records.front();
  const std::size_t width = header.size();
  std::size_t target_index = width;
  for (std::size_t j = 0; j < width; ++j) {
    if (header[j] == target) {
      target_index = j;
      break;
    }
  }
  if (target_index == width) {
    throw Error(ErrorKind::kMissingTargetColumn,
                source_name + ": target column '" + target + "' not found in header");
  }

  const std::size_t rows = records.size() - 1;
  std::vector<std::vector<std::string>> cells(width, std::vector<std::string>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    auto& rec = records[r + 1];
    if (rec.size() != width) {
      throw Error(ErrorKind::kMalformedCsv,
                  source_name + ": record " + std::to_string(r + 2) + " has " +
                      std::to_string(rec.size()) + " fields, header has " +
                      std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) cells[j][r] = std::move(rec[j]);
  }

  std::vector<std::uint8_t> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = trim(cells[target_index][r]);
    if (v == "0" || v == "0.0") {
      labels[r] = 0;
    } else if (v == "1" || v == "1.0") {
      labels[r] = 1;
    } else {
      throw Error(ErrorKind::kNonBinaryTarget,
                  source_name + ": record " + std::to_string(r + 2) + ": target value '" +
                      std::string(v) + "' is not 0 or 1");
    }
  }

  std::vector<Column> columns;
  columns.reserve(width - 1);
  for (std::size_t j = 0; j < width; ++j) {
    if (j == target_index) continue;
    columns.push_back(infer_column(header[j], cells[j]));
  }
  return Dataset(target, std::move(columns), std::move(labels));
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kFileUnreadable, "cannot open '" + path.string() + "'");
  }
  return parse_csv(in, target, path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  for (const auto& col : dataset.columns()) {
    write_field(out, col.name);
    out << ',';
  }
  write_field(out, dataset.target_name());
  out << '\n';
  for (std::size_t r = 0; r < dataset.row_count(); ++r) {
    for (const auto& col : dataset.columns()) {
      if (col.kind == ColumnKind::kNumeric) {
        if (!std::isnan(col.numeric[r])) out << format_double(col.numeric[r]);
      } else if (col.categorical[r]) {
        write_field(out, *col.categorical[r]);
      }
      out << ',';
    }
    out << static_cast<int>(dataset.target()[r]) << '\n';
  }
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFileUnreadable, "cannot write '" + path.string() + "'");
  write_csv(dataset, out);
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (auto y : labels) pos += (y == 1);
  return {labels.size() - pos, pos};
}

std::pair<std::size_t, std::size_t> class_counts(const Dataset& dataset) {
  return class_counts(dataset.target());
}

double prevalence(const Dataset& dataset) {
  const auto [neg, pos] = class_counts(dataset);
  return static_cast<double>(pos) / static_cast<double>(neg + pos);
}

}  // namespace valsweep
