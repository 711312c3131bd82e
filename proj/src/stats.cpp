#include "carmine/stats.hpp"

#include "carmine/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace carmine {

namespace {

// Lower regularized incomplete gamma P(a, x) by series, for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a, x) by modified Lentz continued
// fraction, for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double regularized_gamma_q(double a, double x) {
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_contfrac(a, x), 0.0, 1.0);
}

}  // namespace

ContingencyTable make_contingency(std::vector<std::string> row_labels,
                                  std::vector<std::string> col_labels, CountMatrix counts) {
  if (counts.rows() != static_cast<Eigen::Index>(row_labels.size()) ||
      counts.cols() != static_cast<Eigen::Index>(col_labels.size())) {
    throw Error("contingency: label/count shape mismatch");
  }
  if ((counts.array() < 0).any()) throw Error("contingency: negative count");

  ContingencyTable ct;
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    if (counts.row(r).sum() > 0) rows.push_back(r);
    else ct.pruned.push_back("x:" + row_labels[static_cast<std::size_t>(r)]);
  }
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    if (counts.col(c).sum() > 0) cols.push_back(c);
    else ct.pruned.push_back("y:" + col_labels[static_cast<std::size_t>(c)]);
  }
  if (rows.size() < 2 || cols.size() < 2) {
    throw Error("contingency: fewer than 2 non-empty categories on one side; test undefined");
  }

  ct.counts.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ct.row_labels.push_back(row_labels[static_cast<std::size_t>(rows[i])]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      ct.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          counts(rows[i], cols[j]);
    }
  }
  for (const auto c : cols) ct.col_labels.push_back(col_labels[static_cast<std::size_t>(c)]);
  ct.total = ct.counts.sum();
  return ct;
}

ContingencyTable contingency_table(const CategoricalTable& table, const std::string& x,
                                   const std::string& y) {
  const Eigen::Index cx = table.require_column(x);
  const Eigen::Index cy = table.require_column(y);
  const CatColumn& colx = table.columns()[static_cast<std::size_t>(cx)];
  const CatColumn& coly = table.columns()[static_cast<std::size_t>(cy)];

  CountMatrix counts = CountMatrix::Zero(static_cast<Eigen::Index>(colx.labels.size()),
                                         static_cast<Eigen::Index>(coly.labels.size()));
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    const int a = table.code(r, cx);
    const int b = table.code(r, cy);
    if (a < 0 || b < 0) continue;  // pairwise-complete
    ++counts(a, b);
  }
  if (counts.sum() == 0) {
    throw Error("contingency: no co-present rows for '" + x + "' and '" + y + "'");
  }
  return make_contingency(colx.labels, coly.labels, std::move(counts));
}

ChiSquareResult chi_square(const ContingencyTable& ct, bool yates_correction) {
  if (ct.total <= 0) throw Error("chi-square: empty contingency table");
  const Eigen::Index nr = ct.counts.rows();
  const Eigen::Index nc = ct.counts.cols();

  Eigen::VectorXd row_margin(nr), col_margin(nc);
  for (Eigen::Index r = 0; r < nr; ++r) row_margin(r) = static_cast<double>(ct.counts.row(r).sum());
  for (Eigen::Index c = 0; c < nc; ++c) col_margin(c) = static_cast<double>(ct.counts.col(c).sum());
  const double n = static_cast<double>(ct.total);

  ChiSquareResult result;
  result.expected = (row_margin * col_margin.transpose()) / n;
  result.dof = static_cast<int>((nr - 1) * (nc - 1));

  double statistic = 0;
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      const double expected = result.expected(r, c);
      if (expected < 5.0) result.low_expected_warning = true;
      double diff = std::fabs(static_cast<double>(ct.counts(r, c)) - expected);
      if (yates_correction) diff = std::max(0.0, diff - 0.5);
      statistic += diff * diff / expected;
    }
  }
  result.statistic = statistic;

  const double p = chi_sq_sf(statistic, result.dof);
  if (p < kPValueFloor) {
    result.p_value = kPValueFloor;
    result.p_underflow = true;
  } else {
    result.p_value = p;
  }
  return result;
}

double chi_sq_sf(double x, int dof) {
  if (dof < 1) throw Error("chi_sq_sf: dof must be positive");
  if (std::isnan(x) || x < 0) throw Error("chi_sq_sf: statistic must be >= 0");
  return regularized_gamma_q(static_cast<double>(dof) / 2.0, x / 2.0);
}

}  // namespace carmine
