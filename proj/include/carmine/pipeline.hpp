#pragma once

#include "carmine/discretizer.hpp"
#include "carmine/render.hpp"
#include "carmine/rules.hpp"
#include "carmine/som.hpp"
#include "carmine/stats.hpp"
#include "carmine/tabular.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace carmine {

struct SomSettings {
  int rows = 8;
  int cols = 8;
  TrainingSchedule schedule;
  std::vector<std::string> features;  // empty -> DpM/CpM/TpM when present
  std::string label_attribute;        // empty -> class attribute
  int workers = 1;
};

struct AutoQuantileSpec {
  std::vector<double> points;        // demographic columns
  std::vector<std::string> labels;
  std::vector<double> class_points;  // covid-outcome columns
  std::vector<std::string> class_labels;
};

struct RunConfig {
  std::string run_id = "run";
  std::string input_csv;
  std::string blocklist_path;  // optional
  double iqr_k = 1.5;
  bool drop_outlier_rows = false;
  std::vector<std::string> outlier_columns;
  std::vector<std::string> normalize_columns;  // empty = every numeric column
  std::string thresholds_path;                 // or auto_quantiles
  std::optional<AutoQuantileSpec> auto_quantiles;
  std::string class_attribute = "DpM";
  MiningParams mining;
  SomSettings som;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  // Explicit input for a single-stage subcommand run; empty means the prior
  // stage's artifact inside out_dir.
  std::string stage_input;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
};

// Checks paths, attribute references, parameter ranges, and that the output
// directory can be created. Throws Error; runs no stage.
void validate_config(const RunConfig& config);

struct ChiPairResult {
  std::string x;
  std::string y;
  ChiSquareResult result;
};

struct RunReport {
  CleaningReport ingest_report;
  CleaningReport cleaning_report;
  std::vector<ChiPairResult> chi_tests;
  std::vector<std::string> chi_skipped;
  std::vector<std::string> som_excluded;
  std::vector<double> quantization_errors;
  std::vector<std::string> mining_excluded;
  FiltrationCounts filtration;
  std::size_t rule_count = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;                 // out-dir-relative names
  std::vector<std::pair<std::string, double>> stage_ms;
};

std::string run_report_json_text(const RunReport& report);
std::string chi_report_json_text(const std::vector<ChiPairResult>& tests);

// File-driven stages: each reads the prior stage's persisted outputs from
// config.out_dir and persists its own, so subcommand chaining reproduces
// run_pipeline byte for byte. Pass a report to collect summaries.
void stage_ingest(const RunConfig& config, RunReport* report = nullptr);
void stage_clean(const RunConfig& config, RunReport* report = nullptr);
void stage_discretize(const RunConfig& config, RunReport* report = nullptr);
void stage_chi2(const RunConfig& config, RunReport* report = nullptr);
void stage_som(const RunConfig& config, RunReport* report = nullptr);
void stage_mine(const RunConfig& config, RunReport* report = nullptr);
void stage_render(const RunConfig& config, RunReport* report = nullptr);

// validate + every stage in order + run_report.json. Throws Error with a
// stage tag on failure; interrupted writes keep a .partial suffix.
RunReport run_pipeline(const RunConfig& config);

// Stage output names within the output directory.
namespace artifact {
inline constexpr const char* kIngested = "ingested.csv";
inline constexpr const char* kIngestReport = "ingest_report.json";
inline constexpr const char* kCleaned = "cleaned.csv";
inline constexpr const char* kCleaningReport = "cleaning_report.json";
inline constexpr const char* kCategorical = "categorical.csv";
inline constexpr const char* kThresholdsUsed = "thresholds_used.json";
inline constexpr const char* kChiReport = "chi2_report.json";
inline constexpr const char* kNormalized = "normalized.csv";
inline constexpr const char* kNormalizationStats = "normalization_stats.json";
inline constexpr const char* kSomGrid = "som_grid.json";
inline constexpr const char* kSomUMatrix = "som_umatrix.json";
inline constexpr const char* kSomOverlay = "som_overlay.json";
inline constexpr const char* kSomTraining = "som_training.json";
inline constexpr const char* kRules = "rules.json";
inline constexpr const char* kRulesText = "rules.txt";
inline constexpr const char* kMiningReport = "mining_report.json";
inline constexpr const char* kRunReport = "run_report.json";
std::string som_plane(const std::string& feature);  // "som_plane_<feature>.json"
std::string figure(const std::string& run_id, const std::string& kind,
                   const std::string& attribute = "");  // "<run>_<kind>[_<attr>].svg"
}  // namespace artifact

// Writes content to path + ".partial", then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace carmine
