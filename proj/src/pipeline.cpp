#include "carmine/pipeline.hpp"

#include "carmine/csv.hpp"
#include "carmine/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace carmine {

namespace artifact {

std::string sanitize(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    out.push_back(ok ? c : '-');
  }
  return out;
}

std::string som_plane(const std::string& feature) {
  return "som_plane_" + sanitize(feature) + ".json";
}

std::string figure(const std::string& run_id, const std::string& kind,
                   const std::string& attribute) {
  std::string name = sanitize(run_id) + "_" + sanitize(kind);
  if (!attribute.empty()) name += "_" + sanitize(attribute);
  return name + ".svg";
}

}  // namespace artifact

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  const std::string partial = path + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + partial);
    out << content;
    if (!out) throw Error("write failed: " + partial);
  }
  std::error_code ec;
  fs::rename(partial, path, ec);
  if (ec) throw Error("cannot finalize file: " + path + " (" + ec.message() + ")");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::vector<std::string> read_blocklist(const std::string& path) {
  std::vector<std::string> patterns;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // '#' starts a comment line
    std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos || line[begin] == '#') continue;
    std::size_t end = line.find_last_not_of(" \t");
    patterns.push_back(line.substr(begin, end - begin + 1));
  }
  return patterns;
}

std::vector<std::string> table_column_names(const NumericTable& table) {
  std::vector<std::string> names;
  names.reserve(table.columns().size());
  for (const auto& meta : table.columns()) names.push_back(meta.name);
  return names;
}

std::vector<std::string> resolve_som_features(const RunConfig& config,
                                              const std::vector<std::string>& available) {
  if (!config.som.features.empty()) return config.som.features;
  std::vector<std::string> features;
  for (const char* name : {"DpM", "CpM", "TpM"}) {
    if (std::find(available.begin(), available.end(), name) != available.end())
      features.push_back(name);
  }
  return features;
}

std::vector<std::string> resolve_normalize_columns(const RunConfig& config,
                                                   const std::vector<std::string>& available) {
  return config.normalize_columns.empty() ? available : config.normalize_columns;
}

ThresholdConfig auto_threshold_config(const RunConfig& config, const NumericTable& table,
                                      std::vector<std::string>* warnings) {
  const AutoQuantileSpec& spec = *config.auto_quantiles;
  ThresholdConfig thresholds;
  for (const auto& meta : table.columns()) {
    const bool is_class = meta.role == ColumnRole::covid_outcome;
    const auto& points =
        is_class && !spec.class_points.empty() ? spec.class_points : spec.points;
    const auto& labels =
        is_class && !spec.class_labels.empty() ? spec.class_labels : spec.labels;
    try {
      const auto derived =
          auto_thresholds(table.column_values(table.require_column(meta.name)), points);
      if (derived.collapsed) {
        if (warnings)
          warnings->push_back("auto thresholds collapsed duplicate cuts for '" + meta.name + "'");
        continue;  // fewer cuts than labels; attribute left unbinned
      }
      BinSpec bin{derived.cuts, labels};
      thresholds.add(meta.name, std::move(bin));
    } catch (const Error& e) {
      if (warnings)
        warnings->push_back("auto thresholds skipped '" + meta.name + "': " + e.what());
    }
  }
  return thresholds;
}

ordered_json chi_entry_json(const ChiPairResult& t) {
  ordered_json entry{{"x", t.x},
                     {"y", t.y},
                     {"statistic", t.result.statistic},
                     {"dof", t.result.dof},
                     {"p_value", t.result.p_value},
                     {"warning", t.result.low_expected_warning}};
  if (t.result.p_underflow) entry["p_underflow"] = true;
  return entry;
}

ordered_json filtration_json(const FiltrationCounts& c) {
  ordered_json out{{"candidates", c.candidates},
                   {"after_length", c.after_length},
                   {"after_confidence", c.after_confidence},
                   {"after_support", c.after_support},
                   {"after_lift", c.after_lift}};
  if (c.after_redundancy) out["after_redundancy"] = *c.after_redundancy;
  return out;
}

void note_artifact(RunReport* report, const std::string& name) {
  if (report) report->artifacts.push_back(name);
}

ThresholdConfig load_thresholds_used(const RunConfig& config, bool* found = nullptr) {
  const std::string path = join_path(config.out_dir, artifact::kThresholdsUsed);
  if (fs::exists(path)) {
    if (found) *found = true;
    return ThresholdConfig::from_json_file(path);
  }
  if (found) *found = false;
  return {};
}

CategoricalTable load_categorical(const RunConfig& config, const std::string& path) {
  bool have_config = false;
  const ThresholdConfig thresholds = load_thresholds_used(config, &have_config);
  return read_categorical_csv_file(path, have_config ? &thresholds : nullptr);
}

std::string stage_input_or(const RunConfig& config, const char* standard) {
  return config.stage_input.empty() ? join_path(config.out_dir, standard) : config.stage_input;
}

Eigen::VectorXd node_values_from_json(const std::string& text, const std::string& what) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(what + " JSON: " + e.what());
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(doc.size()));
  for (const auto& [key, value] : doc.items()) {
    const int node = std::stoi(key);
    if (node < 1 || node > values.size()) throw Error(what + " JSON: node index out of range");
    values(node - 1) = value.get<double>();
  }
  return values;
}

MapOverlay overlay_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("overlay JSON: ") + e.what());
  }
  MapOverlay overlay;
  overlay.per_node.resize(doc.size());
  for (const auto& [key, list] : doc.items()) {
    const int node = std::stoi(key);
    if (node < 1 || node > static_cast<int>(overlay.per_node.size()))
      throw Error("overlay JSON: node index out of range");
    for (const auto& entry : list) {
      overlay.per_node[static_cast<std::size_t>(node - 1)].emplace_back(
          entry.at("id").get<std::string>(), entry.at("label").get<std::string>());
    }
  }
  return overlay;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("run config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("run config JSON: top level must be an object");

  RunConfig config;
  try {
    config.run_id = doc.value("run_id", config.run_id);
    config.input_csv = doc.value("input", std::string{});
    config.blocklist_path = doc.value("blocklist", std::string{});
    config.iqr_k = doc.value("iqr_k", config.iqr_k);
    config.drop_outlier_rows = doc.value("drop_outlier_rows", config.drop_outlier_rows);
    if (doc.contains("outlier_columns"))
      config.outlier_columns = doc.at("outlier_columns").get<std::vector<std::string>>();
    if (doc.contains("normalize_columns"))
      config.normalize_columns = doc.at("normalize_columns").get<std::vector<std::string>>();
    config.thresholds_path = doc.value("thresholds", std::string{});
    if (doc.contains("auto_quantiles")) {
      const auto& aq = doc.at("auto_quantiles");
      AutoQuantileSpec spec;
      spec.points = aq.at("points").get<std::vector<double>>();
      spec.labels = aq.at("labels").get<std::vector<std::string>>();
      if (aq.contains("class_points"))
        spec.class_points = aq.at("class_points").get<std::vector<double>>();
      if (aq.contains("class_labels"))
        spec.class_labels = aq.at("class_labels").get<std::vector<std::string>>();
      config.auto_quantiles = std::move(spec);
    }
    config.class_attribute = doc.value("class_attribute", config.class_attribute);
    if (doc.contains("mining")) {
      const auto& m = doc.at("mining");
      if (m.contains("target_classes"))
        config.mining.target_classes = m.at("target_classes").get<std::vector<std::string>>();
      config.mining.min_support = m.value("min_support", config.mining.min_support);
      config.mining.min_confidence = m.value("min_confidence", config.mining.min_confidence);
      config.mining.min_len = m.value("min_len", config.mining.min_len);
      config.mining.max_len = m.value("max_len", config.mining.max_len);
      if (m.contains("lift_floor") && !m.at("lift_floor").is_null())
        config.mining.lift_floor = m.at("lift_floor").get<double>();
    }
    if (doc.contains("som")) {
      const auto& s = doc.at("som");
      config.som.rows = s.value("rows", config.som.rows);
      config.som.cols = s.value("cols", config.som.cols);
      config.som.schedule.epochs = s.value("epochs", config.som.schedule.epochs);
      config.som.schedule.eta0 = s.value("eta0", config.som.schedule.eta0);
      config.som.schedule.sigma0 = s.value("sigma0", config.som.schedule.sigma0);
      config.som.schedule.tau_eta = s.value("tau_eta", config.som.schedule.tau_eta);
      config.som.schedule.tau_sigma = s.value("tau_sigma", config.som.schedule.tau_sigma);
      if (s.contains("features"))
        config.som.features = s.at("features").get<std::vector<std::string>>();
      config.som.label_attribute = s.value("label_attribute", config.som.label_attribute);
      config.som.workers = s.value("workers", config.som.workers);
    }
    config.seed = doc.value("seed", config.seed);
    config.out_dir = doc.value("out_dir", config.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("run config JSON: ") + e.what());
  }
  config.mining.consequent_attribute = config.class_attribute;
  return config;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  RunConfig config = from_json_text(read_file(path));
  return config;
}

void validate_config(const RunConfig& config) {
  if (config.input_csv.empty()) throw Error("config: no input CSV");
  if (!fs::exists(config.input_csv)) throw Error("config: input CSV not found: " + config.input_csv);
  if (!config.blocklist_path.empty() && !fs::exists(config.blocklist_path))
    throw Error("config: blocklist file not found: " + config.blocklist_path);

  std::ifstream in(config.input_csv, std::ios::binary);
  if (!in) throw Error("config: cannot read input CSV: " + config.input_csv);
  const auto records = csv::read_records(in);
  if (records.empty()) throw Error("config: input CSV is empty");
  const std::vector<std::string> header(records.front().begin() + 1, records.front().end());
  const std::set<std::string> columns(header.begin(), header.end());
  const auto require_column = [&](const std::string& name, const std::string& what) {
    if (!columns.count(name))
      throw Error("config: " + what + " references unknown attribute '" + name + "'");
  };

  if (config.thresholds_path.empty() == !config.auto_quantiles.has_value())
    throw Error("config: exactly one of 'thresholds' and 'auto_quantiles' must be set");

  std::vector<std::string> class_labels;
  if (!config.thresholds_path.empty()) {
    const ThresholdConfig thresholds = ThresholdConfig::from_json_file(config.thresholds_path);
    for (const auto& [attribute, spec] : thresholds.entries()) {
      (void)spec;
      require_column(attribute, "thresholds file");
    }
    const BinSpec* spec = thresholds.find(config.class_attribute);
    if (!spec)
      throw Error("config: class attribute '" + config.class_attribute +
                  "' is not in the thresholds file");
    class_labels = spec->labels;
  } else {
    const AutoQuantileSpec& aq = *config.auto_quantiles;
    const auto check_points = [](const std::vector<double>& points,
                                 const std::vector<std::string>& labels, const char* what) {
      if (points.empty()) throw Error(std::string("config: ") + what + ": no quantile points");
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i] > 0 && points[i] < 1))
          throw Error(std::string("config: ") + what + ": points must lie in (0, 1)");
        if (i > 0 && !(points[i - 1] < points[i]))
          throw Error(std::string("config: ") + what + ": points must be strictly increasing");
      }
      if (labels.size() != points.size() + 1)
        throw Error(std::string("config: ") + what + ": need one more label than points");
    };
    check_points(aq.points, aq.labels, "auto_quantiles");
    if (!aq.class_points.empty() || !aq.class_labels.empty())
      check_points(aq.class_points, aq.class_labels, "auto_quantiles (class)");
    class_labels = !aq.class_labels.empty() ? aq.class_labels : aq.labels;
  }

  require_column(config.class_attribute, "class_attribute");
  for (const auto& column : config.outlier_columns) require_column(column, "outlier_columns");
  for (const auto& column : config.normalize_columns) require_column(column, "normalize_columns");

  const auto features = resolve_som_features(config, header);
  if (features.empty()) throw Error("config: no SOM features available");
  const auto norm_columns = resolve_normalize_columns(config, header);
  for (const auto& f : features) {
    require_column(f, "som.features");
    if (std::find(norm_columns.begin(), norm_columns.end(), f) == norm_columns.end())
      throw Error("config: SOM feature '" + f + "' is not in the normalization column list");
  }
  if (!config.som.label_attribute.empty())
    require_column(config.som.label_attribute, "som.label_attribute");

  for (const auto& target : config.mining.target_classes) {
    if (std::find(class_labels.begin(), class_labels.end(), target) == class_labels.end())
      throw Error("config: target class '" + target + "' is not a label of '" +
                  config.class_attribute + "'");
  }
  if (config.mining.min_len < 2 || config.mining.max_len < config.mining.min_len)
    throw Error("config: need 2 <= min_len <= max_len");
  if (!(config.mining.min_support > 0 && config.mining.min_support <= 1))
    throw Error("config: min_support must lie in (0, 1]");
  if (!(config.mining.min_confidence >= 0 && config.mining.min_confidence <= 1))
    throw Error("config: min_confidence must lie in [0, 1]");
  if (config.som.rows < 1 || config.som.cols < 1) throw Error("config: SOM grid must be positive");
  if (config.som.schedule.epochs < 1) throw Error("config: SOM epochs must be positive");
  if (!(config.som.schedule.eta0 >= 0 && config.som.schedule.eta0 <= 1))
    throw Error("config: eta0 must lie in [0, 1]");
  if (config.som.workers < 1) throw Error("config: SOM workers must be positive");
  if (!(config.iqr_k > 0))
    throw Error("config: iqr_k must be positive (use a large value to disable fencing)");

  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw Error("config: cannot create output directory: " + config.out_dir);
  const std::string probe = join_path(config.out_dir, ".write_probe");
  {
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("config: output directory not writable: " + config.out_dir);
  }
  fs::remove(probe, ec);
}

void stage_ingest(const RunConfig& config, RunReport* report) {
  const std::string input =
      config.stage_input.empty() ? config.input_csv : config.stage_input;
  LoadResult loaded = load_csv_file(input);

  std::ostringstream csv_out;
  write_csv(loaded.table, csv_out);
  write_file_atomic(join_path(config.out_dir, artifact::kIngested), csv_out.str());
  write_file_atomic(join_path(config.out_dir, artifact::kIngestReport),
                    cleaning_report_json_text(loaded.report));
  note_artifact(report, artifact::kIngested);
  note_artifact(report, artifact::kIngestReport);
  if (report) report->ingest_report = std::move(loaded.report);
}

void stage_clean(const RunConfig& config, RunReport* report) {
  LoadResult loaded = load_csv_file(stage_input_or(config, artifact::kIngested));

  CleaningReport actions;
  NumericTable table = std::move(loaded.table);
  if (!config.blocklist_path.empty()) {
    DropResult dropped = drop_invalid_rows(table, read_blocklist(config.blocklist_path));
    table = std::move(dropped.table);
    actions.insert(actions.end(), dropped.report.begin(), dropped.report.end());
  }
  if (!config.outlier_columns.empty()) {
    OutlierResult cleaned =
        remove_outliers(table, config.outlier_columns, config.iqr_k, config.drop_outlier_rows);
    table = std::move(cleaned.table);
    actions.insert(actions.end(), cleaned.report.begin(), cleaned.report.end());
  }

  std::ostringstream csv_out;
  write_csv(table, csv_out);
  write_file_atomic(join_path(config.out_dir, artifact::kCleaned), csv_out.str());
  write_file_atomic(join_path(config.out_dir, artifact::kCleaningReport),
                    cleaning_report_json_text(actions));
  note_artifact(report, artifact::kCleaned);
  note_artifact(report, artifact::kCleaningReport);
  if (report) report->cleaning_report = std::move(actions);
}

void stage_discretize(const RunConfig& config, RunReport* report) {
  LoadResult loaded = load_csv_file(stage_input_or(config, artifact::kCleaned));

  ThresholdConfig thresholds;
  if (!config.thresholds_path.empty()) {
    thresholds = ThresholdConfig::from_json_file(config.thresholds_path);
  } else if (config.auto_quantiles) {
    std::vector<std::string> warnings;
    thresholds = auto_threshold_config(config, loaded.table, &warnings);
    if (report)
      report->warnings.insert(report->warnings.end(), warnings.begin(), warnings.end());
  } else {
    throw Error("discretize: no thresholds configured");
  }

  const CategoricalTable categorical = discretize_table(loaded.table, thresholds);
  std::ostringstream csv_out;
  write_csv(categorical, csv_out);
  write_file_atomic(join_path(config.out_dir, artifact::kCategorical), csv_out.str());
  write_file_atomic(join_path(config.out_dir, artifact::kThresholdsUsed),
                    thresholds.to_json_text());
  note_artifact(report, artifact::kCategorical);
  note_artifact(report, artifact::kThresholdsUsed);
}

void stage_chi2(const RunConfig& config, RunReport* report) {
  const CategoricalTable table =
      load_categorical(config, stage_input_or(config, artifact::kCategorical));
  table.require_column(config.class_attribute);

  std::vector<ChiPairResult> tests;
  std::vector<std::string> skipped;
  const auto run_pair = [&](const std::string& x, const std::string& y) {
    try {
      tests.push_back({x, y, chi_square(contingency_table(table, x, y))});
    } catch (const Error& e) {
      skipped.push_back(x + " x " + y + ": " + e.what());
    }
  };

  for (const auto& column : table.columns()) {
    if (column.name == config.class_attribute) continue;
    run_pair(column.name, config.class_attribute);
  }
  // The TpM/CpM dependence is part of the standard report when available.
  if (table.column_index("TpM") && table.column_index("CpM") && config.class_attribute != "TpM" &&
      config.class_attribute != "CpM") {
    run_pair("TpM", "CpM");
  }

  write_file_atomic(join_path(config.out_dir, artifact::kChiReport), chi_report_json_text(tests));
  note_artifact(report, artifact::kChiReport);
  if (report) {
    report->chi_tests = std::move(tests);
    report->chi_skipped = std::move(skipped);
  }
}

void stage_som(const RunConfig& config, RunReport* report) {
  LoadResult loaded = load_csv_file(stage_input_or(config, artifact::kCleaned));
  const auto column_names = table_column_names(loaded.table);

  const auto norm_columns = resolve_normalize_columns(config, column_names);
  NormalizeResult normalized = zscore_normalize(loaded.table, norm_columns);
  {
    std::ostringstream csv_out;
    write_csv(normalized.table, csv_out);
    write_file_atomic(join_path(config.out_dir, artifact::kNormalized), csv_out.str());
    write_file_atomic(join_path(config.out_dir, artifact::kNormalizationStats),
                      normalization_stats_json_text(normalized.stats));
    note_artifact(report, artifact::kNormalized);
    note_artifact(report, artifact::kNormalizationStats);
  }

  const auto features = resolve_som_features(config, column_names);
  if (features.empty()) throw Error("som: no features available");
  SampleSelection selection = complete_rows(normalized.table, features);
  if (selection.samples.values.rows() == 0)
    throw Error("som: no complete rows over the selected features");

  const SomGrid initial = init_som(config.som.rows, config.som.cols,
                                   static_cast<Eigen::Index>(features.size()), config.seed,
                                   selection.samples);
  TrainResult trained = train(initial, selection.samples, config.som.schedule, config.som.workers);

  // Labels for the overlay come from the categorical table when present.
  std::vector<std::string> labels(selection.samples.row_ids.size());
  const std::string label_attribute =
      config.som.label_attribute.empty() ? config.class_attribute : config.som.label_attribute;
  const std::string categorical_path = join_path(config.out_dir, artifact::kCategorical);
  if (fs::exists(categorical_path)) {
    const CategoricalTable categorical = load_categorical(config, categorical_path);
    if (const auto col = categorical.column_index(label_attribute)) {
      std::map<std::string, std::string> by_row;
      for (Eigen::Index r = 0; r < categorical.row_count(); ++r) {
        const auto label = categorical.label(r, *col);
        by_row[categorical.row_ids()[static_cast<std::size_t>(r)]] =
            label ? std::string(*label) : "";
      }
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto it = by_row.find(selection.samples.row_ids[i]);
        if (it != by_row.end()) labels[i] = it->second;
      }
    }
  }
  const MapOverlay overlay = map_samples(trained.grid, selection.samples, labels);

  write_file_atomic(join_path(config.out_dir, artifact::kSomGrid), trained.grid.to_json_text());
  write_file_atomic(join_path(config.out_dir, artifact::kSomUMatrix),
                    node_values_json_text(u_matrix(trained.grid)));
  for (std::size_t f = 0; f < features.size(); ++f) {
    write_file_atomic(
        join_path(config.out_dir, artifact::som_plane(features[f])),
        node_values_json_text(component_plane(trained.grid, static_cast<Eigen::Index>(f))));
    note_artifact(report, artifact::som_plane(features[f]));
  }
  write_file_atomic(join_path(config.out_dir, artifact::kSomOverlay), overlay_json_text(overlay));

  ordered_json training{{"features", features},
                        {"label_attribute", label_attribute},
                        {"excluded_rows", selection.excluded_rows},
                        {"epochs", config.som.schedule.epochs},
                        {"quantization_errors", trained.quantization_errors}};
  write_file_atomic(join_path(config.out_dir, artifact::kSomTraining), training.dump(2) + "\n");

  note_artifact(report, artifact::kSomGrid);
  note_artifact(report, artifact::kSomUMatrix);
  note_artifact(report, artifact::kSomOverlay);
  note_artifact(report, artifact::kSomTraining);
  if (report) {
    report->som_excluded = std::move(selection.excluded_rows);
    report->quantization_errors = std::move(trained.quantization_errors);
  }
}

void stage_mine(const RunConfig& config, RunReport* report) {
  const CategoricalTable table =
      load_categorical(config, stage_input_or(config, artifact::kCategorical));

  EncodeResult encoded = encode_transactions(table, config.class_attribute);
  MiningParams params = config.mining;
  params.consequent_attribute = config.class_attribute;

  MiningResult mined = generate_cars(encoded.transactions, params);
  std::vector<ClassRule> pruned = prune_redundant(mined.rules, encoded.transactions);
  mined.counts.after_redundancy = static_cast<std::int64_t>(pruned.size());

  write_file_atomic(join_path(config.out_dir, artifact::kRules),
                    rules_to_json_text(pruned, encoded.transactions.dictionary()));
  write_file_atomic(join_path(config.out_dir, artifact::kRulesText),
                    rules_to_text_table(pruned, encoded.transactions.dictionary()));
  ordered_json mining_report{{"class_attribute", config.class_attribute},
                             {"excluded_rows", encoded.excluded_rows},
                             {"filtration", filtration_json(mined.counts)},
                             {"warnings", mined.warnings},
                             {"rule_count", pruned.size()}};
  write_file_atomic(join_path(config.out_dir, artifact::kMiningReport),
                    mining_report.dump(2) + "\n");

  note_artifact(report, artifact::kRules);
  note_artifact(report, artifact::kRulesText);
  note_artifact(report, artifact::kMiningReport);
  if (report) {
    report->mining_excluded = std::move(encoded.excluded_rows);
    report->filtration = mined.counts;
    report->rule_count = pruned.size();
    report->warnings.insert(report->warnings.end(), mined.warnings.begin(), mined.warnings.end());
  }
}

void stage_render(const RunConfig& config, RunReport* report) {
  bool rendered_any = false;
  const auto emit = [&](const std::string& name, const std::string& svg) {
    write_file_atomic(join_path(config.out_dir, name), svg);
    note_artifact(report, name);
    rendered_any = true;
  };

  const std::string grid_path = join_path(config.out_dir, artifact::kSomGrid);
  const std::string training_path = join_path(config.out_dir, artifact::kSomTraining);
  if (fs::exists(grid_path) && fs::exists(training_path)) {
    const SomGrid grid = SomGrid::from_json_text(read_file(grid_path));
    const ordered_json training = ordered_json::parse(read_file(training_path));
    const auto features = training.at("features").get<std::vector<std::string>>();

    MapOverlay overlay;
    const std::string overlay_path = join_path(config.out_dir, artifact::kSomOverlay);
    const MapOverlay* overlay_ptr = nullptr;
    if (fs::exists(overlay_path)) {
      overlay = overlay_from_json(read_file(overlay_path));
      overlay_ptr = &overlay;
    }
    const std::string umatrix_path = join_path(config.out_dir, artifact::kSomUMatrix);
    if (fs::exists(umatrix_path)) {
      const Eigen::VectorXd values =
          node_values_from_json(read_file(umatrix_path), "u-matrix");
      emit(artifact::figure(config.run_id, "umatrix"),
           render_node_map(values, grid.rows(), grid.cols(), ColorScale::white_dark(),
                           overlay_ptr, "SOM distance map"));
    }
    for (std::size_t f = 0; f < features.size(); ++f) {
      emit(artifact::figure(config.run_id, "plane", features[f]),
           render_node_map(component_plane(grid, static_cast<Eigen::Index>(f)), grid.rows(),
                           grid.cols(), ColorScale::blue_red(), nullptr,
                           "Component plane: " + features[f]));
    }
  }

  const std::string categorical_path = join_path(config.out_dir, artifact::kCategorical);
  if (fs::exists(categorical_path)) {
    const CategoricalTable table = load_categorical(config, categorical_path);
    for (const auto& column : table.columns()) {
      const auto histogram = category_histogram(table, column.name);
      std::vector<std::pair<std::string, std::int64_t>> bars;
      for (const auto& label : column.labels) {
        const auto it = histogram.find(label);
        bars.emplace_back(label, it != histogram.end() ? it->second : 0);
      }
      emit(artifact::figure(config.run_id, "hist", column.name),
           render_histogram(bars, "Distribution: " + column.name));
    }
  }

  const std::string rules_path = join_path(config.out_dir, artifact::kRules);
  if (fs::exists(rules_path)) {
    const ParsedRules parsed = rules_from_json_text(read_file(rules_path));
    std::map<std::string, std::vector<ClassRule>> by_class;
    for (const auto& rule : parsed.rules) {
      const Item& item = parsed.dictionary.item(rule.consequent);
      by_class[item.attribute + "-" + item.category].push_back(rule);
    }
    for (const auto& [tag, rules] : by_class) {
      const std::string consequent = parsed.dictionary.display(rules.front().consequent);
      emit(artifact::figure(config.run_id, "rulegraph", tag),
           render_rule_graph(rules, parsed.dictionary, "Class rules: " + consequent));

      std::vector<std::pair<std::string, std::int64_t>> bars;
      for (const auto& [item, count] : antecedent_histogram(rules, parsed.dictionary)) {
        bars.emplace_back(item.first + " = " + item.second, count);
      }
      emit(artifact::figure(config.run_id, "antecedents", tag),
           render_histogram(bars, "Antecedent frequency: " + consequent));
    }
  }

  if (!rendered_any) throw Error("render: nothing to render in " + config.out_dir);
}

std::string chi_report_json_text(const std::vector<ChiPairResult>& tests) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : tests) arr.push_back(chi_entry_json(t));
  return arr.dump(2) + "\n";
}

std::string run_report_json_text(const RunReport& report) {
  ordered_json doc;
  doc["ingest_actions"] = report.ingest_report.size();
  doc["cleaning_actions"] = report.cleaning_report.size();
  ordered_json chi = ordered_json::array();
  for (const auto& t : report.chi_tests) chi.push_back(chi_entry_json(t));
  doc["chi2"] = std::move(chi);
  doc["chi2_skipped"] = report.chi_skipped;
  doc["som"] = {{"excluded_rows", report.som_excluded},
                {"quantization_error_first",
                 report.quantization_errors.empty() ? 0.0 : report.quantization_errors.front()},
                {"quantization_error_final",
                 report.quantization_errors.empty() ? 0.0 : report.quantization_errors.back()}};
  doc["mining"] = {{"excluded_rows", report.mining_excluded},
                   {"filtration", filtration_json(report.filtration)},
                   {"rule_count", report.rule_count}};
  doc["warnings"] = report.warnings;
  doc["artifacts"] = report.artifacts;
  ordered_json timings = ordered_json::object();
  for (const auto& [stage, ms] : report.stage_ms) timings[stage] = ms;
  doc["stage_ms"] = std::move(timings);
  return doc.dump(2) + "\n";
}

RunReport run_pipeline(const RunConfig& config) {
  validate_config(config);

  RunReport report;
  using Stage = void (*)(const RunConfig&, RunReport*);
  const std::pair<const char*, Stage> stages[] = {
      {"ingest", stage_ingest}, {"clean", stage_clean},   {"discretize", stage_discretize},
      {"chi2", stage_chi2},     {"som", stage_som},       {"mine", stage_mine},
      {"render", stage_render},
  };

  for (const auto& [name, stage] : stages) {
    const auto start = std::chrono::steady_clock::now();
    try {
      stage(config, &report);
    } catch (const Error& e) {
      throw Error(std::string("[stage ") + name + "] " + e.what());
    }
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    report.stage_ms.emplace_back(name, elapsed);
  }

  write_file_atomic(join_path(config.out_dir, artifact::kRunReport),
                    run_report_json_text(report));
  report.artifacts.push_back(artifact::kRunReport);
  return report;
}

}  // namespace carmine
