#include "carmine/stats.hpp"

#include "carmine/error.hpp"
#include "carmine/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace carmine;

namespace {

CategoricalTable two_columns(const std::vector<std::string>& x_labels,
                             const std::vector<int>& x_codes,
                             const std::vector<std::string>& y_labels,
                             const std::vector<int>& y_codes) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < x_codes.size(); ++i) ids.push_back("r" + std::to_string(i));
  CategoricalTable table(std::move(ids), "id", ThresholdConfig{});
  table.add_column({"X", x_labels, x_codes});
  table.add_column({"Y", y_labels, y_codes});
  return table;
}

CountMatrix counts2x2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  CountMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("contingency_table tallies co-present rows") {
  const auto table = two_columns({"L", "M"}, {0, 0, 1}, {"a", "b"}, {0, 1, 0});
  const ContingencyTable ct = contingency_table(table, "X", "Y");
  CHECK(ct.row_labels == std::vector<std::string>{"L", "M"});
  CHECK(ct.col_labels == std::vector<std::string>{"a", "b"});
  CHECK(ct.counts(0, 0) == 1);
  CHECK(ct.counts(0, 1) == 1);
  CHECK(ct.counts(1, 0) == 1);
  CHECK(ct.counts(1, 1) == 0);
  CHECK(ct.total == 3);
}

TEST_CASE("contingency_table: disjoint missingness is an error") {
  const auto table = two_columns({"L", "M"}, {0, -1, 1, -1}, {"a", "b"}, {-1, 0, -1, 1});
  CHECK_THROWS_AS((void)contingency_table(table, "X", "Y"), Error);
}

TEST_CASE("contingency_table: all-zero margins are pruned with a note") {
  // label "Z" never occurs
  const auto table = two_columns({"L", "M", "Z"}, {0, 0, 1, 1}, {"a", "b"}, {0, 1, 0, 1});
  const ContingencyTable ct = contingency_table(table, "X", "Y");
  CHECK(ct.row_labels == std::vector<std::string>{"L", "M"});
  REQUIRE(ct.pruned.size() == 1);
  CHECK(ct.pruned[0] == "x:Z");
}

TEST_CASE("contingency_table: single-category side is undefined") {
  const auto table = two_columns({"L"}, {0, 0, 0}, {"a", "b"}, {0, 1, 0});
  CHECK_THROWS_AS((void)contingency_table(table, "X", "Y"), Error);
}

TEST_CASE("4-category class against a 3-category attribute gives dof 6") {
  std::vector<int> x_codes, y_codes;
  for (int i = 0; i < 48; ++i) {
    x_codes.push_back(i % 3);
    y_codes.push_back((i / 3) % 4);
  }
  const auto table =
      two_columns({"L", "M", "H"}, x_codes, {"Min", "low", "moderate", "high"}, y_codes);
  const ChiSquareResult result = chi_square(contingency_table(table, "X", "Y"));
  CHECK(result.dof == 6);
}

TEST_CASE("chi_square: proportional table has statistic 0, p 1") {
  const ContingencyTable ct = make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(10, 10, 10, 10));
  const ChiSquareResult result = chi_square(ct);
  CHECK(result.statistic == 0.0);
  CHECK(result.dof == 1);
  CHECK(result.p_value == 1.0);
  CHECK(!result.p_underflow);
  CHECK(result.expected(0, 0) == 10.0);
}

TEST_CASE("chi_square: diagonal [[20,0],[0,20]] gives 40") {
  const ChiSquareResult result =
      chi_square(make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(20, 0, 0, 20)));
  CHECK(result.statistic == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(result.dof == 1);
}

TEST_CASE("chi_square: expected-count warning and Yates correction") {
  const ChiSquareResult plain =
      chi_square(make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(3, 1, 1, 3)));
  CHECK(plain.low_expected_warning);
  const ChiSquareResult yates =
      chi_square(make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(3, 1, 1, 3)), true);
  CHECK(yates.statistic < plain.statistic);
}

TEST_CASE("chi_square matches the 2x2 closed form on random tables") {
  Rng rng(41);
  for (int round = 0; round < 200; ++round) {
    const auto a = static_cast<std::int64_t>(1 + rng.index(200));
    const auto b = static_cast<std::int64_t>(1 + rng.index(200));
    const auto c = static_cast<std::int64_t>(1 + rng.index(200));
    const auto d = static_cast<std::int64_t>(1 + rng.index(200));
    const ChiSquareResult result =
        chi_square(make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(a, b, c, d)));
    const double closed = oracles::chi2_2x2(static_cast<double>(a), static_cast<double>(b),
                                            static_cast<double>(c), static_cast<double>(d));
    CHECK(result.statistic ==
          doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("chi_square statistic is invariant under permutation and transpose") {
  Rng rng(43);
  for (int round = 0; round < 50; ++round) {
    const int nr = 2 + static_cast<int>(rng.index(3));
    const int nc = 2 + static_cast<int>(rng.index(3));
    CountMatrix m(nr, nc);
    for (int r = 0; r < nr; ++r)
      for (int c = 0; c < nc; ++c) m(r, c) = static_cast<std::int64_t>(1 + rng.index(50));

    std::vector<std::string> rl, cl;
    for (int r = 0; r < nr; ++r) rl.push_back("r" + std::to_string(r));
    for (int c = 0; c < nc; ++c) cl.push_back("c" + std::to_string(c));
    const double base = chi_square(make_contingency(rl, cl, m)).statistic;

    CountMatrix swapped = m;
    swapped.row(0).swap(swapped.row(nr - 1));
    CHECK(chi_square(make_contingency(rl, cl, swapped)).statistic ==
          doctest::Approx(base).epsilon(1e-12));

    const CountMatrix transposed = m.transpose();
    CHECK(chi_square(make_contingency(cl, rl, transposed)).statistic ==
          doctest::Approx(base).epsilon(1e-12));

    const CountMatrix doubled = 2 * m;
    CHECK(chi_square(make_contingency(rl, cl, doubled)).statistic ==
          doctest::Approx(2 * base).epsilon(1e-12));
  }
}

TEST_CASE("chi_sq_sf basics") {
  for (int dof = 1; dof <= 20; ++dof) CHECK(chi_sq_sf(0, dof) == 1.0);
  CHECK_THROWS_AS((void)chi_sq_sf(-1, 3), Error);
  CHECK_THROWS_AS((void)chi_sq_sf(1, 0), Error);
}

TEST_CASE("chi_sq_sf(12.592, 6) sits at the 5% point") {
  const double sf = chi_sq_sf(12.592, 6);
  CHECK(sf == doctest::Approx(0.05).epsilon(0.02));
  CHECK(std::fabs(sf - 0.05) <= 1e-3);
  CHECK(std::fabs(sf - oracles::chi_sq_sf_integration(12.592, 6)) <= 1e-9);
}

TEST_CASE("chi_sq_sf agrees with the recurrence closed form") {
  Rng rng(47);
  for (int round = 0; round < 300; ++round) {
    const int dof = 1 + static_cast<int>(rng.index(24));
    const double x = rng.uniform(0.01, 80);
    const double mine = chi_sq_sf(x, dof);
    const double oracle = oracles::chi_sq_sf_recurrence(x, dof);
    CHECK(std::fabs(mine - oracle) <= 1e-10);
  }
}

TEST_CASE("chi_sq_sf in the underflow regime") {
  const double sf = chi_sq_sf(162.19, 9);
  CHECK(sf < 1e-16);
  CHECK(sf > 0);
  const double oracle = oracles::chi_sq_sf_recurrence(162.19, 9);
  CHECK(std::fabs(sf - oracle) / oracle <= 1e-9);
}

TEST_CASE("chi_sq_sf is strictly decreasing in x and bounded by [0,1]") {
  Rng rng(53);
  for (int round = 0; round < 200; ++round) {
    const int dof = 1 + static_cast<int>(rng.index(12));
    const double x1 = rng.uniform(0, 60);
    const double x2 = x1 + rng.uniform(0.1, 20);
    const double p1 = chi_sq_sf(x1, dof);
    const double p2 = chi_sq_sf(x2, dof);
    CHECK(p1 >= 0);
    CHECK(p1 <= 1);
    CHECK(p2 < p1);
  }
}

TEST_CASE("p-values below the floor carry the underflow marker") {
  const ChiSquareResult result =
      chi_square(make_contingency({"r0", "r1"}, {"c0", "c1"}, counts2x2(2000, 0, 0, 2000)));
  CHECK(result.p_underflow);
  CHECK(result.p_value == kPValueFloor);
}
