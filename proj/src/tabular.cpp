#include "carmine/tabular.hpp"

#include "carmine/csv.hpp"
#include "carmine/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace carmine {

ColumnRole role_for_attribute(const std::string& name) {
  if (name == "DpM" || name == "CpM" || name == "TpM") return ColumnRole::covid_outcome;
  return ColumnRole::demographic;
}

std::string role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::demographic: return "demographic";
    case ColumnRole::covid_outcome: return "covid-outcome";
    case ColumnRole::identifier: return "identifier";
  }
  return "demographic";
}

NumericTable::NumericTable(std::vector<std::string> row_ids, std::vector<AttributeMeta> columns)
    : row_ids_(std::move(row_ids)), columns_(std::move(columns)) {
  std::unordered_set<std::string> seen_rows;
  for (const auto& id : row_ids_) {
    if (id.empty()) throw Error("table: empty row identifier");
    if (!seen_rows.insert(id).second) throw Error("table: duplicate row identifier '" + id + "'");
  }
  std::unordered_set<std::string> seen_cols;
  for (const auto& col : columns_) {
    if (!seen_cols.insert(col.name).second)
      throw Error("table: duplicate column name '" + col.name + "'");
  }
  cells_.setConstant(static_cast<Eigen::Index>(row_ids_.size()),
                     static_cast<Eigen::Index>(columns_.size()),
                     std::numeric_limits<double>::quiet_NaN());
}

std::optional<Eigen::Index> NumericTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

Eigen::Index NumericTable::require_column(const std::string& name) const {
  const auto idx = column_index(name);
  if (!idx) throw Error("table: unknown column '" + name + "'");
  return *idx;
}

std::optional<double> NumericTable::value(Eigen::Index r, Eigen::Index c) const {
  const double v = cells_(r, c);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

std::vector<double> NumericTable::column_values(Eigen::Index c) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(row_count()));
  for (Eigen::Index r = 0; r < row_count(); ++r) {
    if (!is_missing(r, c)) out.push_back(cells_(r, c));
  }
  return out;
}

Eigen::Index NumericTable::present_count(Eigen::Index c) const {
  Eigen::Index n = 0;
  for (Eigen::Index r = 0; r < row_count(); ++r) {
    if (!is_missing(r, c)) ++n;
  }
  return n;
}

std::string cleaning_report_json_text(const CleaningReport& report) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& a : report) {
    arr.push_back({{"row_id", a.row_id},
                   {"column", a.column},
                   {"action", a.action},
                   {"reason", a.reason}});
  }
  return arr.dump(2) + "\n";
}

double interpolated_quantile(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty()) throw Error("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile point outside [0, 1]");
  const std::size_t n = sorted_values.size();
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted_values[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<AttributeMeta> schema_from_header(const std::vector<std::string>& header) {
  if (header.size() < 2) throw Error("CSV header needs an identifier column plus attributes");
  std::vector<AttributeMeta> schema;
  schema.reserve(header.size() - 1);
  for (std::size_t i = 1; i < header.size(); ++i) {
    schema.push_back({header[i], "", role_for_attribute(header[i])});
  }
  return schema;
}

LoadResult load_csv(std::istream& in, const std::vector<AttributeMeta>& schema,
                    const std::string& source_tag) {
  const auto records = csv::read_records(in);
  if (records.empty()) throw Error("CSV is empty: " + source_tag);
  const auto& header = records.front();
  if (header.size() != schema.size() + 1) {
    std::ostringstream msg;
    msg << "CSV header has " << header.size() - 1 << " attribute columns, schema expects "
        << schema.size();
    // Name the difference to make the mismatch actionable.
    std::set<std::string> have(header.begin() + 1, header.end());
    std::set<std::string> want;
    for (const auto& m : schema) want.insert(m.name);
    for (const auto& w : want)
      if (!have.count(w)) msg << "; missing: " << w;
    for (const auto& h : have)
      if (!want.count(h)) msg << "; extra: " << h;
    throw Error(msg.str());
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i + 1] != schema[i].name) {
      throw Error("CSV header mismatch at column " + std::to_string(i + 1) + ": got '" +
                  header[i + 1] + "', expected '" + schema[i].name + "'");
    }
  }

  std::vector<std::string> row_ids;
  row_ids.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw Error("CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                  " fields, expected " + std::to_string(header.size()));
    }
    row_ids.push_back(records[r][0]);
  }

  LoadResult result{NumericTable(std::move(row_ids), schema), {}};
  NumericTable& table = result.table;
  table.set_id_name(header[0]);
  table.provenance.source = source_tag;
  table.provenance.load_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();

  for (std::size_t r = 1; r < records.size(); ++r) {
    for (std::size_t c = 1; c < records[r].size(); ++c) {
      const std::string& text = records[r][c];
      const auto parsed = csv::parse_double(text);
      const auto row = static_cast<Eigen::Index>(r - 1);
      const auto col = static_cast<Eigen::Index>(c - 1);
      if (parsed) {
        table.set(row, col, *parsed);
      } else if (!text.empty()) {
        result.report.push_back({records[r][0], header[c], "cell_set_missing",
                                 "unparseable numeric '" + text + "'"});
      }
    }
  }
  return result;
}

LoadResult load_csv_file(const std::string& path, std::vector<AttributeMeta> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CSV file: " + path);
  if (schema.empty()) {
    const auto records = csv::read_records(in);
    if (records.empty()) throw Error("CSV is empty: " + path);
    schema = schema_from_header(records.front());
    in.clear();
    in.seekg(0);
  }
  return load_csv(in, schema, path);
}

DropResult drop_invalid_rows(const NumericTable& table, const std::vector<std::string>& blocklist) {
  DropResult result;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    const std::string& id = table.row_ids()[r];
    const std::string* hit = nullptr;
    for (const auto& pattern : blocklist) {
      if (pattern.empty()) continue;
      if (id.find(pattern) != std::string::npos) {
        hit = &pattern;
        break;
      }
    }
    if (hit) {
      result.report.push_back({id, "", "drop_row", "matches blocklist pattern '" + *hit + "'"});
    } else {
      keep.push_back(r);
    }
  }

  std::vector<std::string> ids;
  ids.reserve(keep.size());
  for (const auto r : keep) ids.push_back(table.row_ids()[r]);
  NumericTable out(std::move(ids), table.columns());
  out.set_id_name(table.id_name());
  out.provenance = table.provenance;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (Eigen::Index c = 0; c < table.column_count(); ++c) {
      out.set(static_cast<Eigen::Index>(i), c, table.cells()(keep[i], c));
    }
  }
  result.table = std::move(out);
  return result;
}

ColumnStats column_stats(const NumericTable& table, const std::string& column, double k) {
  const Eigen::Index c = table.require_column(column);
  std::vector<double> values = table.column_values(c);
  if (values.empty()) throw Error("column '" + column + "' has no present values");

  ColumnStats stats;
  stats.n_present = static_cast<Eigen::Index>(values.size());

  const auto n = static_cast<double>(values.size());
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  stats.mean = v.sum() / n;
  if (values.size() > 1) {
    stats.std = std::sqrt((v.array() - stats.mean).square().sum() / (n - 1.0));
  }

  std::sort(values.begin(), values.end());
  stats.q1 = interpolated_quantile(values, 0.25);
  stats.median = interpolated_quantile(values, 0.5);
  stats.q3 = interpolated_quantile(values, 0.75);
  stats.iqr = stats.q3 - stats.q1;
  if (std::isfinite(k)) {
    stats.lower_fence = stats.q1 - k * stats.iqr;
    stats.upper_fence = stats.q3 + k * stats.iqr;
  } else {
    stats.lower_fence = -std::numeric_limits<double>::infinity();
    stats.upper_fence = std::numeric_limits<double>::infinity();
  }
  return stats;
}

std::vector<bool> iqr_outlier_flags(const NumericTable& table, const std::string& column,
                                    double k) {
  const ColumnStats stats = column_stats(table, column, k);
  const Eigen::Index c = table.require_column(column);
  std::vector<bool> flags(static_cast<std::size_t>(table.row_count()), false);
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    const auto v = table.value(r, c);
    if (v && (*v < stats.lower_fence || *v > stats.upper_fence)) {
      flags[static_cast<std::size_t>(r)] = true;
    }
  }
  return flags;
}

OutlierResult remove_outliers(const NumericTable& table, const std::vector<std::string>& columns,
                              double k, bool drop_rows) {
  OutlierResult result;
  result.table = table;
  std::vector<bool> drop(static_cast<std::size_t>(table.row_count()), false);

  for (const auto& column : columns) {
    const ColumnStats stats = column_stats(table, column, k);
    const Eigen::Index c = table.require_column(column);
    for (Eigen::Index r = 0; r < table.row_count(); ++r) {
      const auto v = table.value(r, c);
      if (!v || (*v >= stats.lower_fence && *v <= stats.upper_fence)) continue;
      std::ostringstream reason;
      reason << "value " << csv::format_double(*v) << " outside IQR fence ["
             << csv::format_double(stats.lower_fence) << ", "
             << csv::format_double(stats.upper_fence) << "] (k=" << csv::format_double(k) << ")";
      if (drop_rows) {
        drop[static_cast<std::size_t>(r)] = true;
        result.report.push_back({table.row_ids()[r], column, "drop_row", reason.str()});
      } else {
        result.table.set_missing(r, c);
        result.report.push_back({table.row_ids()[r], column, "cell_set_missing", reason.str()});
      }
    }
  }

  if (drop_rows) {
    std::vector<std::string> keep_ids;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < table.row_count(); ++r) {
      if (!drop[static_cast<std::size_t>(r)]) {
        keep.push_back(r);
        keep_ids.push_back(table.row_ids()[r]);
      }
    }
    NumericTable out(std::move(keep_ids), table.columns());
    out.set_id_name(table.id_name());
    out.provenance = table.provenance;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      for (Eigen::Index c = 0; c < table.column_count(); ++c) {
        out.set(static_cast<Eigen::Index>(i), c, table.cells()(keep[i], c));
      }
    }
    result.table = std::move(out);
  }
  return result;
}

NormalizeResult zscore_normalize(const NumericTable& table,
                                 const std::vector<std::string>& columns) {
  NormalizeResult result;
  result.table = table;
  for (const auto& column : columns) {
    const Eigen::Index c = table.require_column(column);
    NormalizationStats ns;
    ns.column = column;

    const std::vector<double> values = table.column_values(c);
    if (!values.empty()) {
      const auto n = static_cast<double>(values.size());
      const Eigen::Map<const Eigen::VectorXd> v(values.data(),
                                                static_cast<Eigen::Index>(values.size()));
      ns.mean = v.sum() / n;
      if (values.size() > 1) ns.std = std::sqrt((v.array() - ns.mean).square().sum() / (n - 1.0));
    }
    ns.degenerate = !(ns.std > 0.0);

    for (Eigen::Index r = 0; r < table.row_count(); ++r) {
      const auto v = table.value(r, c);
      if (!v) continue;
      result.table.set(r, c, ns.degenerate ? 0.0 : (*v - ns.mean) / ns.std);
    }
    result.stats.push_back(std::move(ns));
  }
  return result;
}

void write_csv(const NumericTable& table, std::ostream& out) {
  std::vector<std::string> header;
  header.reserve(static_cast<std::size_t>(table.column_count()) + 1);
  header.push_back(table.id_name());
  for (const auto& col : table.columns()) header.push_back(col.name);
  csv::write_record(out, header);

  std::vector<std::string> row(header.size());
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    row[0] = table.row_ids()[r];
    for (Eigen::Index c = 0; c < table.column_count(); ++c) {
      const auto v = table.value(r, c);
      row[static_cast<std::size_t>(c) + 1] = v ? csv::format_double(*v) : "";
    }
    csv::write_record(out, row);
  }
}

std::string normalization_stats_json_text(const std::vector<NormalizationStats>& stats) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : stats) {
    arr.push_back({{"column", s.column},
                   {"mean", s.mean},
                   {"std", s.std},
                   {"degenerate", s.degenerate}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace carmine
