#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace valsweep {

enum class ColumnKind { kNumeric, kCategorical };

// One feature column. Exactly one of `numeric` / `categorical` is populated,
// according to `kind`. Missing numeric cells are NaN, missing categorical
// cells are std::nullopt.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<double> numeric;
  std::vector<std::optional<std::string>> categorical;

  std::size_t size() const {
    return kind == ColumnKind::kNumeric ? numeric.size() : categorical.size();
  }
  bool is_missing(std::size_t row) const;

  friend bool operator==(const Column&, const Column&);
};

struct ColumnKinds {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
};

// Immutable binary-classification table. Construction validates every
// invariant: equal column lengths, unique feature names that exclude the
// target, labels in {0,1} with both classes present.
class Dataset {
 public:
  Dataset(std::string target_name, std::vector<Column> columns,
          std::vector<std::uint8_t> target);

  std::size_t row_count() const noexcept { return target_.size(); }
  std::size_t feature_count() const noexcept { return columns_.size(); }
  const std::string& target_name() const noexcept { return target_name_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  std::span<const std::uint8_t> target() const noexcept { return target_; }

  std::vector<std::string> feature_names() const;
  ColumnKinds kinds() const;

  // Rows in the given order, as a new dataset (labels must still carry both
  // classes).
  Dataset subset(std::span<const std::size_t> rows) const;

  // Same features, new labels; used for permutation-null experiments.
  Dataset with_target(std::vector<std::uint8_t> target) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::string target_name_;
  std::vector<Column> columns_;
  std::vector<std::uint8_t> target_;
};

// A column of raw CSV cells before kind inference. Empty cells and "NA" are
// missing; a column is numeric iff every non-missing cell parses as a real.
Column infer_column(std::string name, const std::vector<std::string>& cells);

Dataset load_csv(const std::filesystem::path& path, const std::string& target);
Dataset parse_csv(std::istream& in, const std::string& target,
                  const std::string& source_name = "<stream>");

// Writes the features followed by the target column; reloading yields an
// identical Dataset.
void write_csv(const Dataset& dataset, std::ostream& out);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

double prevalence(const Dataset& dataset);
std::pair<std::size_t, std::size_t> class_counts(const Dataset& dataset);
std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels);

// Low-level RFC-4180 record reader, exposed for tests.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in,
                                                       const std::string& source_name);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace valsweep
