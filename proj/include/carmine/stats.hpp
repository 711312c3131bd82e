#pragma once

#include "carmine/discretizer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace carmine {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  CountMatrix counts;
  std::int64_t total = 0;
  std::vector<std::string> pruned;  // labels dropped for an all-zero margin
};

// Pairwise-complete tally of x against y. All-zero rows/columns are pruned
// (noted in `pruned`); fewer than 2 non-empty categories on either side is an
// error, as is an empty co-present set.
ContingencyTable contingency_table(const CategoricalTable& table, const std::string& x,
                                   const std::string& y);

// Same pruning/validation applied to an externally built count matrix.
ContingencyTable make_contingency(std::vector<std::string> row_labels,
                                  std::vector<std::string> col_labels, CountMatrix counts);

inline constexpr double kPValueFloor = 1e-300;

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  bool p_underflow = false;  // true when the tail mass fell below kPValueFloor
  Eigen::MatrixXd expected;
  bool low_expected_warning = false;  // some expected cell < 5
};

// Pearson statistic sum((obs-exp)^2/exp) with expected = outer(margins)/N.
// No continuity correction unless yates_correction is set. p-values below
// kPValueFloor clamp to the floor with the underflow flag raised.
ChiSquareResult chi_square(const ContingencyTable& ct, bool yates_correction = false);

// Upper-tail probability of the chi-square distribution, i.e. the
// regularized upper incomplete gamma Q(dof/2, x/2).
double chi_sq_sf(double x, int dof);

}  // namespace carmine
