#include "carmine/discretizer.hpp"

#include "carmine/csv.hpp"
#include "carmine/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace carmine {

void validate_bin_spec(const std::string& attribute, const BinSpec& spec) {
  if (spec.labels.size() != spec.cuts.size() + 1) {
    throw Error("thresholds for '" + attribute + "': need " +
                std::to_string(spec.cuts.size() + 1) + " labels for " +
                std::to_string(spec.cuts.size()) + " cuts, got " +
                std::to_string(spec.labels.size()));
  }
  for (std::size_t i = 0; i < spec.cuts.size(); ++i) {
    if (!std::isfinite(spec.cuts[i]))
      throw Error("thresholds for '" + attribute + "': non-finite cut");
    if (i > 0 && !(spec.cuts[i - 1] < spec.cuts[i]))
      throw Error("thresholds for '" + attribute + "': cuts not strictly increasing");
  }
  for (const auto& label : spec.labels) {
    if (label.empty()) throw Error("thresholds for '" + attribute + "': empty label");
  }
}

void ThresholdConfig::add(const std::string& attribute, BinSpec spec) {
  validate_bin_spec(attribute, spec);
  if (index_.count(attribute)) throw Error("thresholds: duplicate attribute '" + attribute + "'");
  index_[attribute] = entries_.size();
  entries_.emplace_back(attribute, std::move(spec));
}

const BinSpec* ThresholdConfig::find(const std::string& attribute) const {
  const auto it = index_.find(attribute);
  if (it == index_.end()) return nullptr;
  return &entries_[it->second].second;
}

const BinSpec& ThresholdConfig::require(const std::string& attribute) const {
  const BinSpec* spec = find(attribute);
  if (!spec) throw Error("thresholds: unknown attribute '" + attribute + "'");
  return *spec;
}

ThresholdConfig ThresholdConfig::from_json_text(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("thresholds JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("thresholds JSON: top level must be an object");
  ThresholdConfig config;
  for (const auto& [attribute, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("cuts") || !entry.contains("labels")) {
      throw Error("thresholds JSON: '" + attribute + "' needs {cuts, labels}");
    }
    BinSpec spec;
    for (const auto& c : entry.at("cuts")) spec.cuts.push_back(c.get<double>());
    for (const auto& l : entry.at("labels")) spec.labels.push_back(l.get<std::string>());
    config.add(attribute, std::move(spec));
  }
  return config;
}

ThresholdConfig ThresholdConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open thresholds file: " + path);
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return from_json_text(text);
}

std::string ThresholdConfig::to_json_text() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [attribute, spec] : entries_) {
    doc[attribute] = {{"cuts", spec.cuts}, {"labels", spec.labels}};
  }
  return doc.dump(2) + "\n";
}

int bin_index(double value, const std::vector<double>& cuts) {
  if (std::isnan(value)) throw Error("bin_value: NaN value");
  int i = 0;
  for (const double cut : cuts) {
    if (cut < value) ++i;
    else break;
  }
  return i;
}

const std::string& bin_value(double value, const BinSpec& spec) {
  return spec.labels[static_cast<std::size_t>(bin_index(value, spec.cuts))];
}

AutoThresholds auto_thresholds(std::vector<double> values,
                               const std::vector<double>& quantile_points) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  if (values.size() < 2) throw Error("auto thresholds: need at least 2 present values");
  if (quantile_points.empty()) throw Error("auto thresholds: no quantile points");
  for (std::size_t i = 0; i < quantile_points.size(); ++i) {
    if (!(quantile_points[i] > 0.0 && quantile_points[i] < 1.0))
      throw Error("auto thresholds: quantile points must lie in (0, 1)");
    if (i > 0 && !(quantile_points[i - 1] < quantile_points[i]))
      throw Error("auto thresholds: quantile points must be strictly increasing");
  }

  std::sort(values.begin(), values.end());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] != values[i - 1]) ++distinct;
  }
  const std::size_t bins = quantile_points.size() + 1;
  if (distinct < bins) {
    throw Error("auto thresholds: only " + std::to_string(distinct) + " distinct values for " +
                std::to_string(bins) + " bins; use fewer bins");
  }

  AutoThresholds out;
  out.cuts.reserve(quantile_points.size());
  for (const double p : quantile_points) out.cuts.push_back(interpolated_quantile(values, p));
  const auto last = std::unique(out.cuts.begin(), out.cuts.end());
  if (last != out.cuts.end()) {
    out.cuts.erase(last, out.cuts.end());
    out.collapsed = true;
  }
  return out;
}

namespace {

std::vector<std::string> split_record_header(const std::vector<std::vector<std::string>>& records) {
  if (records.empty()) throw Error("categorical CSV is empty");
  return records.front();
}

}  // namespace

std::optional<Eigen::Index> CategoricalTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

Eigen::Index CategoricalTable::require_column(const std::string& name) const {
  const auto idx = column_index(name);
  if (!idx) throw Error("categorical table: unknown attribute '" + name + "'");
  return *idx;
}

std::optional<std::string_view> CategoricalTable::label(Eigen::Index r, Eigen::Index c) const {
  const int code = columns_[c].codes[static_cast<std::size_t>(r)];
  if (code < 0) return std::nullopt;
  return std::string_view(columns_[c].labels[static_cast<std::size_t>(code)]);
}

void CategoricalTable::add_column(CatColumn column) {
  if (column.codes.size() != row_ids_.size())
    throw Error("categorical table: column '" + column.name + "' length mismatch");
  for (const int code : column.codes) {
    if (code < -1 || code >= static_cast<int>(column.labels.size()))
      throw Error("categorical table: column '" + column.name + "' has an out-of-range code");
  }
  columns_.push_back(std::move(column));
}

CategoricalTable discretize_table(const NumericTable& table, const ThresholdConfig& config) {
  std::vector<std::string> unknown;
  for (const auto& [attribute, spec] : config.entries()) {
    (void)spec;
    if (!table.column_index(attribute)) unknown.push_back(attribute);
  }
  if (!unknown.empty()) {
    std::string msg = "thresholds reference unknown attribute(s):";
    for (const auto& name : unknown) msg += " " + name;
    throw Error(msg);
  }

  CategoricalTable out(table.row_ids(), table.id_name(), config);
  for (const auto& meta : table.columns()) {
    const BinSpec* spec = config.find(meta.name);
    if (!spec) continue;  // not configured -> excluded from the output
    const Eigen::Index c = table.require_column(meta.name);
    CatColumn column{meta.name, spec->labels, {}};
    column.codes.reserve(static_cast<std::size_t>(table.row_count()));
    for (Eigen::Index r = 0; r < table.row_count(); ++r) {
      const auto v = table.value(r, c);
      column.codes.push_back(v ? bin_index(*v, spec->cuts) : -1);
    }
    out.add_column(std::move(column));
  }
  return out;
}

std::map<std::string, int> category_histogram(const CategoricalTable& table,
                                              const std::string& attribute) {
  const Eigen::Index c = table.require_column(attribute);
  const CatColumn& column = table.columns()[static_cast<std::size_t>(c)];
  std::map<std::string, int> counts;
  for (const int code : column.codes) {
    if (code >= 0) ++counts[column.labels[static_cast<std::size_t>(code)]];
  }
  return counts;
}

void write_csv(const CategoricalTable& table, std::ostream& out) {
  std::vector<std::string> header;
  header.reserve(static_cast<std::size_t>(table.column_count()) + 1);
  header.push_back(table.id_name());
  for (const auto& col : table.columns()) header.push_back(col.name);
  csv::write_record(out, header);

  std::vector<std::string> row(header.size());
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    row[0] = table.row_ids()[r];
    for (Eigen::Index c = 0; c < table.column_count(); ++c) {
      const auto label = table.label(r, c);
      row[static_cast<std::size_t>(c) + 1] = label ? std::string(*label) : "";
    }
    csv::write_record(out, row);
  }
}

CategoricalTable read_categorical_csv(std::istream& in, const ThresholdConfig* config) {
  const auto records = csv::read_records(in);
  const auto header = split_record_header(records);
  if (header.size() < 2) throw Error("categorical CSV needs an identifier column plus attributes");

  std::vector<std::string> row_ids;
  row_ids.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size())
      throw Error("categorical CSV row " + std::to_string(r) + " has " +
                  std::to_string(records[r].size()) + " fields, expected " +
                  std::to_string(header.size()));
    row_ids.push_back(records[r][0]);
  }

  CategoricalTable out(std::move(row_ids), header[0],
                       config ? *config : ThresholdConfig{});
  for (std::size_t c = 1; c < header.size(); ++c) {
    CatColumn column;
    column.name = header[c];
    if (config) {
      column.labels = config->require(column.name).labels;
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      const std::string& text = records[r][c];
      if (text.empty()) {
        column.codes.push_back(-1);
        continue;
      }
      auto it = std::find(column.labels.begin(), column.labels.end(), text);
      if (it == column.labels.end()) {
        if (config) {
          throw Error("categorical CSV: label '" + text + "' not allowed for attribute '" +
                      column.name + "'");
        }
        column.labels.push_back(text);
        it = column.labels.end() - 1;
      }
      column.codes.push_back(static_cast<int>(it - column.labels.begin()));
    }
    out.add_column(std::move(column));
  }
  return out;
}

CategoricalTable read_categorical_csv_file(const std::string& path, const ThresholdConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open categorical CSV: " + path);
  return read_categorical_csv(in, config);
}

}  // namespace carmine
