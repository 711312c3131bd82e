// carmine: batch pipeline for demographic class-association analysis.
//
// Subcommands mirror the pipeline stages; `run` executes them all from one
// JSON config. Exit codes: 0 success, 2 config/validation error, 3 stage
// failure.

#include "carmine/error.hpp"
#include "carmine/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr const char* kVersion = "carmine 1.0.0";

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = item.find_last_not_of(" \t");
    out.push_back(item.substr(begin, end - begin + 1));
  }
  return out;
}

std::vector<double> split_points(const std::string& text) {
  std::vector<double> out;
  for (const auto& token : split_list(text)) out.push_back(std::stod(token));
  return out;
}

// "DpM=high" -> (DpM, {high}); "DpM" -> (DpM, {}).
void parse_consequent(const std::string& text, carmine::RunConfig& config) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    config.class_attribute = text;
    config.mining.target_classes.clear();
  } else {
    config.class_attribute = text.substr(0, eq);
    config.mining.target_classes = {text.substr(eq + 1)};
  }
  config.mining.consequent_attribute = config.class_attribute;
}

int run_stage(const char* name, const carmine::RunConfig& config,
              void (*stage)(const carmine::RunConfig&, carmine::RunReport*)) {
  try {
    stage(config, nullptr);
  } catch (const carmine::Error& e) {
    std::cerr << "carmine " << name << ": " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"demographic class-association analysis pipeline"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute the full pipeline from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "run config JSON")->required();
  std::string run_out, run_blocklist;
  std::uint64_t run_seed = 0;
  double run_iqr_k = 0;
  bool run_drop_row = false;
  auto* opt_out = run->add_option("--out", run_out, "output directory override");
  auto* opt_seed = run->add_option("--seed", run_seed, "seed override");
  auto* opt_iqr = run->add_option("--iqr-k", run_iqr_k, "IQR fence multiplier override");
  auto* opt_drop = run->add_flag("--drop-row", run_drop_row, "drop whole rows at outliers");
  auto* opt_block = run->add_option("--blocklist", run_blocklist, "blocklist file override");

  // shared single-stage options
  struct StageArgs {
    std::string input;
    std::string out = "out";
    std::string run_id = "run";
  };

  auto* ingest = app.add_subcommand("ingest", "parse a CSV snapshot into the canonical table");
  StageArgs ingest_args;
  ingest->add_option("input", ingest_args.input, "input CSV")->required();
  ingest->add_option("--out", ingest_args.out, "output directory");

  auto* clean = app.add_subcommand("clean", "drop blocklisted rows and handle IQR outliers");
  StageArgs clean_args;
  std::string clean_blocklist, clean_outliers;
  double clean_iqr_k = 1.5;
  bool clean_drop_row = false;
  clean->add_option("input", clean_args.input, "ingested CSV (default: <out>/ingested.csv)");
  clean->add_option("--out", clean_args.out, "output directory");
  clean->add_option("--blocklist", clean_blocklist, "blocklist file (one pattern per line)");
  clean->add_option("--iqr-k", clean_iqr_k, "IQR fence multiplier")->capture_default_str();
  clean->add_option("--outlier-columns", clean_outliers, "comma-separated columns to fence");
  clean->add_flag("--drop-row", clean_drop_row, "drop whole rows instead of blanking cells");

  auto* discretize = app.add_subcommand("discretize", "bin numeric columns into categories");
  StageArgs disc_args;
  std::string disc_thresholds, disc_points, disc_labels, disc_class_points, disc_class_labels;
  discretize->add_option("input", disc_args.input, "cleaned CSV (default: <out>/cleaned.csv)");
  discretize->add_option("--out", disc_args.out, "output directory");
  discretize->add_option("--thresholds", disc_thresholds, "threshold config JSON");
  discretize->add_option("--auto-points", disc_points, "quantile points, e.g. 0.33,0.67");
  discretize->add_option("--auto-labels", disc_labels, "labels, e.g. L,M,H");
  discretize->add_option("--auto-class-points", disc_class_points,
                         "quantile points for covid-outcome columns");
  discretize->add_option("--auto-class-labels", disc_class_labels,
                         "labels for covid-outcome columns");

  auto* chi2 = app.add_subcommand("chi2", "chi-square tests of independence");
  StageArgs chi_args;
  std::string chi_x, chi_y, chi_class = "DpM";
  chi2->add_option("input", chi_args.input, "categorical CSV (default: <out>/categorical.csv)");
  chi2->add_option("--out", chi_args.out, "output directory");
  chi2->add_option("--x", chi_x, "single test: first attribute");
  chi2->add_option("--y", chi_y, "single test: second attribute");
  chi2->add_option("--class", chi_class, "class attribute for the full report")->capture_default_str();

  auto* som = app.add_subcommand("som", "normalize features and train the map");
  StageArgs som_args;
  std::string som_features, som_normalize, som_labels;
  int som_rows = 8, som_cols = 8, som_epochs = 500, som_workers = 1;
  double som_eta0 = 0.5, som_sigma0 = 0, som_tau_eta = 0, som_tau_sigma = 0;
  std::uint64_t som_seed = 42;
  som->add_option("input", som_args.input, "cleaned CSV (default: <out>/cleaned.csv)");
  som->add_option("--out", som_args.out, "output directory");
  som->add_option("--features", som_features, "comma-separated training features");
  som->add_option("--normalize-columns", som_normalize,
                  "columns to z-score (default: all)");
  som->add_option("--label-attribute", som_labels, "overlay label attribute");
  som->add_option("--rows", som_rows, "grid rows")->capture_default_str();
  som->add_option("--cols", som_cols, "grid columns")->capture_default_str();
  som->add_option("--epochs", som_epochs, "training epochs")->capture_default_str();
  som->add_option("--eta0", som_eta0, "initial learning rate")->capture_default_str();
  som->add_option("--sigma0", som_sigma0, "initial radius (0 = max(rows,cols)/2)");
  som->add_option("--tau-eta", som_tau_eta, "learning-rate time constant (0 = auto)");
  som->add_option("--tau-sigma", som_tau_sigma, "radius time constant (0 = auto)");
  som->add_option("--seed", som_seed, "RNG seed")->capture_default_str();
  som->add_option("--workers", som_workers, "worker threads")->capture_default_str();

  auto* mine = app.add_subcommand("mine", "mine class association rules");
  StageArgs mine_args;
  std::string mine_consequent = "DpM";
  double mine_min_conf = 0.9, mine_min_support = 0.065, mine_lift_floor = 0;
  int mine_min_len = 2, mine_max_len = 5;
  mine->add_option("input", mine_args.input, "categorical CSV (default: <out>/categorical.csv)");
  mine->add_option("--out", mine_args.out, "output directory");
  mine->add_option("--consequent", mine_consequent, "class attribute, optionally Attr=Cat")->capture_default_str();
  mine->add_option("--min-conf", mine_min_conf, "minimum confidence")->capture_default_str();
  mine->add_option("--min-support", mine_min_support, "minimum support")->capture_default_str();
  mine->add_option("--min-len", mine_min_len, "minimum rule length")->capture_default_str();
  mine->add_option("--max-len", mine_max_len, "maximum rule length")->capture_default_str();
  auto* opt_lift = mine->add_option("--lift-floor", mine_lift_floor, "minimum lift");

  auto* render = app.add_subcommand("render", "emit SVG figures from persisted artifacts");
  StageArgs render_args;
  render->add_option("--out", render_args.out, "output directory");
  render->add_option("--run-id", render_args.run_id, "figure file prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(run)) {
      carmine::RunConfig config;
      try {
        config = carmine::RunConfig::from_json_file(config_path);
        if (opt_out->count()) config.out_dir = run_out;
        if (opt_seed->count()) config.seed = run_seed;
        if (opt_iqr->count()) config.iqr_k = run_iqr_k;
        if (opt_drop->count()) config.drop_outlier_rows = run_drop_row;
        if (opt_block->count()) config.blocklist_path = run_blocklist;
        carmine::validate_config(config);
      } catch (const carmine::Error& e) {
        std::cerr << "carmine run: " << e.what() << "\n";
        return 2;
      }
      carmine::run_pipeline(config);
      std::cout << "run complete: " << config.out_dir << "\n";
      return 0;
    }

    carmine::RunConfig config;
    if (app.got_subcommand(ingest)) {
      config.input_csv = ingest_args.input;
      config.out_dir = ingest_args.out;
      return run_stage("ingest", config, carmine::stage_ingest);
    }
    if (app.got_subcommand(clean)) {
      config.out_dir = clean_args.out;
      config.stage_input = clean_args.input;
      config.blocklist_path = clean_blocklist;
      config.iqr_k = clean_iqr_k;
      config.drop_outlier_rows = clean_drop_row;
      config.outlier_columns = split_list(clean_outliers);
      return run_stage("clean", config, carmine::stage_clean);
    }
    if (app.got_subcommand(discretize)) {
      config.out_dir = disc_args.out;
      config.stage_input = disc_args.input;
      config.thresholds_path = disc_thresholds;
      if (disc_thresholds.empty()) {
        if (disc_points.empty() || disc_labels.empty()) {
          std::cerr << "carmine discretize: need --thresholds or --auto-points/--auto-labels\n";
          return 2;
        }
        carmine::AutoQuantileSpec spec;
        spec.points = split_points(disc_points);
        spec.labels = split_list(disc_labels);
        if (!disc_class_points.empty()) spec.class_points = split_points(disc_class_points);
        if (!disc_class_labels.empty()) spec.class_labels = split_list(disc_class_labels);
        config.auto_quantiles = std::move(spec);
      }
      return run_stage("discretize", config, carmine::stage_discretize);
    }
    if (app.got_subcommand(chi2)) {
      config.out_dir = chi_args.out;
      config.stage_input = chi_args.input;
      config.class_attribute = chi_class;
      if (chi_x.empty() != chi_y.empty()) {
        std::cerr << "carmine chi2: --x and --y must be given together\n";
        return 2;
      }
      if (!chi_x.empty()) {
        try {
          const std::string path = config.stage_input.empty()
                                       ? config.out_dir + "/categorical.csv"
                                       : config.stage_input;
          const carmine::CategoricalTable table = carmine::read_categorical_csv_file(path);
          const auto result = carmine::chi_square(carmine::contingency_table(table, chi_x, chi_y));
          nlohmann::ordered_json entry{{"x", chi_x},
                                       {"y", chi_y},
                                       {"statistic", result.statistic},
                                       {"dof", result.dof},
                                       {"p_value", result.p_value},
                                       {"warning", result.low_expected_warning}};
          if (result.p_underflow) entry["p_underflow"] = true;
          std::cout << entry.dump(2) << "\n";
          return 0;
        } catch (const carmine::Error& e) {
          std::cerr << "carmine chi2: " << e.what() << "\n";
          return 3;
        }
      }
      return run_stage("chi2", config, carmine::stage_chi2);
    }
    if (app.got_subcommand(som)) {
      config.out_dir = som_args.out;
      config.stage_input = som_args.input;
      config.som.rows = som_rows;
      config.som.cols = som_cols;
      config.som.schedule.epochs = som_epochs;
      config.som.schedule.eta0 = som_eta0;
      config.som.schedule.sigma0 = som_sigma0;
      config.som.schedule.tau_eta = som_tau_eta;
      config.som.schedule.tau_sigma = som_tau_sigma;
      config.som.workers = som_workers;
      config.som.features = split_list(som_features);
      config.som.label_attribute = som_labels;
      config.normalize_columns = split_list(som_normalize);
      config.seed = som_seed;
      return run_stage("som", config, carmine::stage_som);
    }
    if (app.got_subcommand(mine)) {
      config.out_dir = mine_args.out;
      config.stage_input = mine_args.input;
      parse_consequent(mine_consequent, config);
      config.mining.min_confidence = mine_min_conf;
      config.mining.min_support = mine_min_support;
      config.mining.min_len = mine_min_len;
      config.mining.max_len = mine_max_len;
      if (opt_lift->count()) config.mining.lift_floor = mine_lift_floor;
      return run_stage("mine", config, carmine::stage_mine);
    }
    if (app.got_subcommand(render)) {
      config.out_dir = render_args.out;
      config.run_id = render_args.run_id;
      return run_stage("render", config, carmine::stage_render);
    }
  } catch (const carmine::Error& e) {
    std::cerr << "carmine: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "carmine: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
