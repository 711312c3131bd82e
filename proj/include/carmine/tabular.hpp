#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace carmine {

enum class ColumnRole { demographic, covid_outcome, identifier };

// DpM/CpM/TpM carry the covid_outcome role; everything else is demographic.
ColumnRole role_for_attribute(const std::string& name);
std::string role_name(ColumnRole role);

struct AttributeMeta {
  std::string name;
  std::string unit;
  ColumnRole role = ColumnRole::demographic;
};

struct Provenance {
  std::string source;             // path or stream tag
  std::int64_t load_time_ms = 0;  // wall clock at load; never serialized
};

/// Country-by-attribute matrix of optional reals. Missing cells are stored as
/// quiet NaN; all mutation happens during construction/loading, after which
/// tables are treated as immutable values.
class NumericTable {
 public:
  NumericTable() = default;
  NumericTable(std::vector<std::string> row_ids, std::vector<AttributeMeta> columns);

  Eigen::Index row_count() const { return cells_.rows(); }
  Eigen::Index column_count() const { return cells_.cols(); }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<AttributeMeta>& columns() const { return columns_; }

  std::optional<Eigen::Index> column_index(const std::string& name) const;
  Eigen::Index require_column(const std::string& name) const;  // throws Error

  bool is_missing(Eigen::Index r, Eigen::Index c) const { return std::isnan(cells_(r, c)); }
  std::optional<double> value(Eigen::Index r, Eigen::Index c) const;
  void set(Eigen::Index r, Eigen::Index c, double v) { cells_(r, c) = v; }
  void set_missing(Eigen::Index r, Eigen::Index c) {
    cells_(r, c) = std::numeric_limits<double>::quiet_NaN();
  }

  const Eigen::MatrixXd& cells() const { return cells_; }

  // Present values of one column, in row order.
  std::vector<double> column_values(Eigen::Index c) const;
  Eigen::Index present_count(Eigen::Index c) const;

  const std::string& id_name() const { return id_name_; }
  void set_id_name(std::string name) { id_name_ = std::move(name); }

  Provenance provenance;

 private:
  std::vector<std::string> row_ids_;
  std::vector<AttributeMeta> columns_;
  Eigen::MatrixXd cells_;
  std::string id_name_ = "id";
};

struct ColumnStats {
  double mean = 0;
  double std = 0;  // sample (n-1) denominator; 0 for constant columns
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double iqr = 0;
  double lower_fence = 0;
  double upper_fence = 0;
  Eigen::Index n_present = 0;
};

struct CleaningAction {
  std::string row_id;
  std::string column;  // empty for whole-row actions
  std::string action;  // "drop_row" | "cell_set_missing"
  std::string reason;
};
using CleaningReport = std::vector<CleaningAction>;

std::string cleaning_report_json_text(const CleaningReport& report);

// Quantile by linear interpolation at position (n-1)*p on the sorted sample.
double interpolated_quantile(const std::vector<double>& sorted_values, double p);

std::vector<AttributeMeta> schema_from_header(const std::vector<std::string>& header);

struct LoadResult {
  NumericTable table;
  CleaningReport report;  // one entry per unparseable numeric cell
};

/// CSV ingest. The first column is the row identifier; remaining header names
/// must match the schema exactly (order included). Unparseable numeric cells
/// degrade to missing and are recorded in the report.
LoadResult load_csv(std::istream& in, const std::vector<AttributeMeta>& schema,
                    const std::string& source_tag = "<stream>");
// Empty schema: inferred from the header via schema_from_header.
LoadResult load_csv_file(const std::string& path, std::vector<AttributeMeta> schema = {});

struct DropResult {
  NumericTable table;
  CleaningReport report;
};

// Removes rows whose identifier contains any blocklist pattern (literal
// substring; exact names are a special case). Empty patterns are ignored.
DropResult drop_invalid_rows(const NumericTable& table, const std::vector<std::string>& blocklist);

// k may be +infinity to disable fencing (fences become unbounded).
ColumnStats column_stats(const NumericTable& table, const std::string& column, double k = 1.5);

// True where the present value falls outside [lower_fence, upper_fence];
// missing cells are never flagged.
std::vector<bool> iqr_outlier_flags(const NumericTable& table, const std::string& column,
                                    double k = 1.5);

struct OutlierResult {
  NumericTable table;
  CleaningReport report;
};

// Fenced values become missing cells; with drop_rows the whole row is removed
// instead. Surviving cells are never altered.
OutlierResult remove_outliers(const NumericTable& table, const std::vector<std::string>& columns,
                              double k, bool drop_rows);

struct NormalizationStats {
  std::string column;
  double mean = 0;
  double std = 0;
  bool degenerate = false;  // constant column; values mapped to 0
};

struct NormalizeResult {
  NumericTable table;
  std::vector<NormalizationStats> stats;
};

// z-score with the sample std. Non-degenerate columns invert exactly via
// x = z*std + mean. Missing cells stay missing.
NormalizeResult zscore_normalize(const NumericTable& table, const std::vector<std::string>& columns);

void write_csv(const NumericTable& table, std::ostream& out);
std::string normalization_stats_json_text(const std::vector<NormalizationStats>& stats);

}  // namespace carmine
