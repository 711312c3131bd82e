#include "carmine/tabular.hpp"

#include "carmine/csv.hpp"
#include "carmine/error.hpp"
#include "carmine/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace carmine;

namespace {

NumericTable one_column(const std::vector<std::optional<double>>& values,
                        const std::string& name = "X") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < values.size(); ++i) ids.push_back("r" + std::to_string(i));
  NumericTable table(std::move(ids), {{name, "", ColumnRole::demographic}});
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) table.set(static_cast<Eigen::Index>(i), 0, *values[i]);
  }
  return table;
}

std::string snapshot_csv(int rows, int demographic_columns) {
  std::ostringstream out;
  out << "Country";
  for (int c = 0; c < demographic_columns; ++c) out << ",D" << c;
  out << ",DpM,CpM,TpM\n";
  Rng rng(7);
  for (int r = 0; r < rows; ++r) {
    out << "country" << r;
    for (int c = 0; c < demographic_columns + 3; ++c) out << "," << rng.uniform(0, 100);
    out << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("load_csv: 162-row snapshot with 22 demographic + 3 outcome columns") {
  std::istringstream in(snapshot_csv(162, 22));
  const auto schema = schema_from_header({"Country", "D0", "D1"});  // wrong size on purpose
  CHECK_THROWS_AS((void)load_csv(in, schema), Error);

  std::istringstream again(snapshot_csv(162, 22));
  const auto records = csv::read_records(again);
  const auto inferred = schema_from_header(records.front());
  CHECK(inferred.size() == 25);
  CHECK(inferred[22].name == "DpM");
  CHECK(inferred[22].role == ColumnRole::covid_outcome);
  CHECK(inferred[0].role == ColumnRole::demographic);

  std::istringstream data(snapshot_csv(162, 22));
  const LoadResult loaded = load_csv(data, inferred);
  CHECK(loaded.table.row_count() == 162);
  CHECK(loaded.table.column_count() == 25);
  CHECK(loaded.report.empty());
}

TEST_CASE("load_csv: header-only file gives an empty table") {
  std::istringstream in("Country,A,B\n");
  const LoadResult loaded = load_csv(in, schema_from_header({"Country", "A", "B"}));
  CHECK(loaded.table.row_count() == 0);
  CHECK(loaded.table.column_count() == 2);
}

TEST_CASE("load_csv: unparseable cell degrades to missing and is reported") {
  std::istringstream in("Country,A\nFrance,n/a\nSpain,4.5\n");
  const LoadResult loaded = load_csv(in, schema_from_header({"Country", "A"}));
  CHECK(loaded.table.row_count() == 2);
  CHECK(!loaded.table.value(0, 0).has_value());
  CHECK(loaded.table.value(1, 0) == 4.5);
  REQUIRE(loaded.report.size() == 1);
  CHECK(loaded.report[0].row_id == "France");
  CHECK(loaded.report[0].action == "cell_set_missing");
}

TEST_CASE("load_csv: duplicate row id is rejected with the offending id") {
  std::istringstream in("Country,A\nFrance,1\nFrance,2\n");
  CHECK_THROWS_WITH_AS((void)load_csv(in, schema_from_header({"Country", "A"})),
                       doctest::Contains("France"), Error);
}

TEST_CASE("load_csv: header/schema mismatch names the difference") {
  std::istringstream in("Country,A,B\nx,1,2\n");
  CHECK_THROWS_WITH_AS((void)load_csv(in, schema_from_header({"Country", "A", "C"})),
                       doctest::Contains("C"), Error);
}

TEST_CASE("load_csv: quoted identifiers round-trip through write_csv") {
  const std::string text = "Country,A\n\"Korea, South\",1\n\"Quote\"\"d\",2\n";
  std::istringstream in(text);
  const LoadResult loaded = load_csv(in, schema_from_header({"Country", "A"}));
  CHECK(loaded.table.row_ids()[0] == "Korea, South");
  std::ostringstream out;
  write_csv(loaded.table, out);
  CHECK(out.str() == text);
}

TEST_CASE("drop_invalid_rows: substring blocklist") {
  NumericTable table({"France", "Asian countries", "Spain"}, {{"A", "", ColumnRole::demographic}});
  table.set(0, 0, 1);
  table.set(1, 0, 2);
  table.set(2, 0, 3);

  SUBCASE("pattern hit removes the row and reports it") {
    const DropResult result = drop_invalid_rows(table, {"countries"});
    CHECK(result.table.row_count() == 2);
    CHECK(result.table.row_ids() == std::vector<std::string>{"France", "Spain"});
    REQUIRE(result.report.size() == 1);
    CHECK(result.report[0].row_id == "Asian countries");
    CHECK(result.report[0].action == "drop_row");
    // surviving cells untouched
    CHECK(result.table.value(0, 0) == 1.0);
    CHECK(result.table.value(1, 0) == 3.0);
  }
  SUBCASE("empty blocklist is the identity") {
    const DropResult result = drop_invalid_rows(table, {});
    CHECK(result.table.row_count() == 3);
    CHECK(result.report.empty());
  }
  SUBCASE("blocklist matching everything annihilates the table") {
    const DropResult result = drop_invalid_rows(table, {"a"});
    CHECK(result.table.row_count() == 0);
    CHECK(result.report.size() == 3);
  }
}

TEST_CASE("column_stats on [1,2,3,4,100]") {
  const auto table = one_column({1, 2, 3, 4, 100});
  const ColumnStats stats = column_stats(table, "X", 1.5);
  CHECK(stats.q1 == 2.0);
  CHECK(stats.median == 3.0);
  CHECK(stats.q3 == 4.0);
  CHECK(stats.iqr == 2.0);
  CHECK(stats.upper_fence == 7.0);
  CHECK(stats.lower_fence == -1.0);
  CHECK(stats.n_present == 5);
}

TEST_CASE("column_stats on constant and tiny columns") {
  const ColumnStats constant = column_stats(one_column({5, 5, 5}), "X");
  CHECK(constant.std == 0.0);
  CHECK(constant.iqr == 0.0);
  CHECK(constant.lower_fence == 5.0);
  CHECK(constant.upper_fence == 5.0);

  const ColumnStats triple = column_stats(one_column({1, 2, 3}), "X");
  CHECK(triple.mean == 2.0);
  CHECK(triple.std == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("column_stats: all-missing column names the column") {
  const auto table = one_column({std::nullopt, std::nullopt}, "Beds");
  CHECK_THROWS_WITH_AS((void)column_stats(table, "Beds"), doctest::Contains("Beds"), Error);
  CHECK_THROWS_AS((void)column_stats(table, "NoSuch"), Error);
}

TEST_CASE("iqr_outlier_flags") {
  SUBCASE("fenced value is flagged") {
    const auto flags = iqr_outlier_flags(one_column({1, 2, 3, 4, 100}), "X", 1.5);
    CHECK(flags == std::vector<bool>{false, false, false, false, true});
  }
  SUBCASE("constant column never flags") {
    const auto flags = iqr_outlier_flags(one_column({5, 5, 5}), "X", 1.5);
    CHECK(flags == std::vector<bool>{false, false, false});
  }
  SUBCASE("infinite k disables fencing") {
    const auto flags = iqr_outlier_flags(one_column({1, 2, 3, 4, 100}), "X",
                                         std::numeric_limits<double>::infinity());
    CHECK(flags == std::vector<bool>{false, false, false, false, false});
  }
  SUBCASE("missing cells are never flagged") {
    const auto flags = iqr_outlier_flags(one_column({1, 2, 3, 4, std::nullopt, 100}), "X", 1.5);
    CHECK(flags == std::vector<bool>{false, false, false, false, false, true});
  }
}

TEST_CASE("iqr flags follow rows under reordering") {
  Rng rng(11);
  std::vector<std::optional<double>> values;
  for (int i = 0; i < 40; ++i) values.push_back(rng.uniform(0, 10));
  values[7] = 1e4;
  const auto table = one_column(values);
  const auto flags = iqr_outlier_flags(table, "X", 1.5);

  std::vector<std::optional<double>> reversed(values.rbegin(), values.rend());
  const auto rflags = iqr_outlier_flags(one_column(reversed), "X", 1.5);
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(flags[i] == rflags[values.size() - 1 - i]);
  }
}

TEST_CASE("remove_outliers blanks the cell by default, drops the row on request") {
  const auto table = one_column({1, 2, 3, 4, 100});
  const OutlierResult blanked = remove_outliers(table, {"X"}, 1.5, false);
  CHECK(blanked.table.row_count() == 5);
  CHECK(!blanked.table.value(4, 0).has_value());
  CHECK(blanked.table.value(0, 0) == 1.0);
  REQUIRE(blanked.report.size() == 1);
  CHECK(blanked.report[0].action == "cell_set_missing");

  const OutlierResult dropped = remove_outliers(table, {"X"}, 1.5, true);
  CHECK(dropped.table.row_count() == 4);
  CHECK(dropped.report[0].action == "drop_row");
}

TEST_CASE("zscore_normalize") {
  SUBCASE("[1,2,3] maps to [-1,0,1]") {
    const NormalizeResult result = zscore_normalize(one_column({1, 2, 3}), {"X"});
    CHECK(result.table.value(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(result.table.value(1, 0) == doctest::Approx(0.0));
    CHECK(result.table.value(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(!result.stats[0].degenerate);
  }
  SUBCASE("constant column degenerates to zeros") {
    const NormalizeResult result = zscore_normalize(one_column({5, 5, 5}), {"X"});
    CHECK(result.table.value(0, 0) == 0.0);
    CHECK(result.table.value(2, 0) == 0.0);
    CHECK(result.stats[0].degenerate);
  }
  SUBCASE("missing cells stay missing") {
    const NormalizeResult result = zscore_normalize(one_column({1, std::nullopt, 3}), {"X"});
    CHECK(!result.table.value(1, 0).has_value());
  }
  SUBCASE("round trip restores values within 1e-9") {
    Rng rng(3);
    std::vector<std::optional<double>> values;
    for (int i = 0; i < 64; ++i) values.push_back(rng.uniform(-50, 150));
    const auto table = one_column(values);
    const NormalizeResult result = zscore_normalize(table, {"X"});
    const auto& s = result.stats[0];
    for (int i = 0; i < 64; ++i) {
      const double back = *result.table.value(i, 0) * s.std + s.mean;
      CHECK(back == doctest::Approx(*values[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("normalized columns have mean 0 and sample std 1") {
  Rng rng(17);
  for (int round = 0; round < 25; ++round) {
    std::vector<std::optional<double>> values;
    const int n = 3 + static_cast<int>(rng.index(200));
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(-1e3, 1e3));
    const NormalizeResult result = zscore_normalize(one_column(values), {"X"});
    REQUIRE(!result.stats[0].degenerate);
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += *result.table.value(i, 0);
    const double mean = sum / n;
    double sse = 0;
    for (int i = 0; i < n; ++i) {
      const double d = *result.table.value(i, 0) - mean;
      sse += d * d;
    }
    CHECK(std::fabs(mean) <= 1e-9);
    CHECK(std::fabs(std::sqrt(sse / (n - 1)) - 1.0) <= 1e-9);
  }
}

TEST_CASE("quartiles match the sort-and-interpolate oracle exactly") {
  Rng rng(29);
  for (int round = 0; round < 60; ++round) {
    const int n = 3 + static_cast<int>(rng.index(998));
    std::vector<std::optional<double>> cells;
    std::vector<double> plain;
    for (int i = 0; i < n; ++i) {
      const double v = rng.uniform(-1e4, 1e4);
      cells.push_back(v);
      plain.push_back(v);
    }
    const ColumnStats stats = column_stats(one_column(cells), "X");
    CHECK(stats.q1 == oracles::quantile(plain, 0.25));
    CHECK(stats.median == oracles::quantile(plain, 0.5));
    CHECK(stats.q3 == oracles::quantile(plain, 0.75));
  }
}

TEST_CASE("cleaning report serializes to the {row_id, column, action, reason} schema") {
  const CleaningReport report{{"France", "TpM", "cell_set_missing", "why"}};
  const std::string json = cleaning_report_json_text(report);
  CHECK(json.find("\"row_id\": \"France\"") != std::string::npos);
  CHECK(json.find("\"column\": \"TpM\"") != std::string::npos);
  CHECK(json.find("\"action\": \"cell_set_missing\"") != std::string::npos);
  CHECK(json.find("\"reason\": \"why\"") != std::string::npos);
}
