#pragma once

#include "carmine/tabular.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace carmine {

struct BinSpec {
  std::vector<double> cuts;          // strictly increasing
  std::vector<std::string> labels;   // |cuts| + 1, ordinal low -> high
};

void validate_bin_spec(const std::string& attribute, const BinSpec& spec);

/// Ordered per-attribute bin boundaries. A value equal to a cut belongs to
/// the lower bin.
class ThresholdConfig {
 public:
  void add(const std::string& attribute, BinSpec spec);
  const BinSpec* find(const std::string& attribute) const;
  const BinSpec& require(const std::string& attribute) const;
  const std::vector<std::pair<std::string, BinSpec>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  static ThresholdConfig from_json_text(const std::string& text);
  static ThresholdConfig from_json_file(const std::string& path);
  std::string to_json_text() const;

 private:
  std::vector<std::pair<std::string, BinSpec>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Count of cuts strictly below value; boundary values take the lower bin.
// NaN values are rejected.
int bin_index(double value, const std::vector<double>& cuts);
const std::string& bin_value(double value, const BinSpec& spec);

struct AutoThresholds {
  std::vector<double> cuts;
  bool collapsed = false;  // duplicate quantiles were merged
};

// Interpolated quantiles of the present values at the given points (same
// convention as interpolated_quantile). Duplicate cuts collapse with a
// warning flag; fewer distinct values than bins is an error.
AutoThresholds auto_thresholds(std::vector<double> values, const std::vector<double>& quantile_points);

struct CatColumn {
  std::string name;
  std::vector<std::string> labels;  // ordinal order
  std::vector<int> codes;           // per row; -1 = missing
};

class CategoricalTable {
 public:
  CategoricalTable() = default;
  CategoricalTable(std::vector<std::string> row_ids, std::string id_name, ThresholdConfig config)
      : row_ids_(std::move(row_ids)), id_name_(std::move(id_name)), config_(std::move(config)) {}

  Eigen::Index row_count() const { return static_cast<Eigen::Index>(row_ids_.size()); }
  Eigen::Index column_count() const { return static_cast<Eigen::Index>(columns_.size()); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::string& id_name() const { return id_name_; }
  const std::vector<CatColumn>& columns() const { return columns_; }
  const ThresholdConfig& config() const { return config_; }

  std::optional<Eigen::Index> column_index(const std::string& name) const;
  Eigen::Index require_column(const std::string& name) const;

  int code(Eigen::Index r, Eigen::Index c) const { return columns_[c].codes[r]; }
  std::optional<std::string_view> label(Eigen::Index r, Eigen::Index c) const;

  void add_column(CatColumn column);  // code length must equal row count

 private:
  std::vector<std::string> row_ids_;
  std::string id_name_ = "id";
  ThresholdConfig config_;
  std::vector<CatColumn> columns_;
};

// Bins every configured attribute; missing stays missing; table columns not
// in the config are excluded. Config attributes absent from the table are an
// error (all of them are listed).
CategoricalTable discretize_table(const NumericTable& table, const ThresholdConfig& config);

// Counts of present labels only; all-missing columns give an empty map.
std::map<std::string, int> category_histogram(const CategoricalTable& table,
                                              const std::string& attribute);

void write_csv(const CategoricalTable& table, std::ostream& out);

// Without a config the per-column label order is the order of first
// appearance; with one, labels and their ordinal order come from it.
CategoricalTable read_categorical_csv(std::istream& in, const ThresholdConfig* config = nullptr);
CategoricalTable read_categorical_csv_file(const std::string& path,
                                           const ThresholdConfig* config = nullptr);

}  // namespace carmine
