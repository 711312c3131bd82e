// Test-side oracles, independent of the library implementations they check.
#pragma once

#include "carmine/rng.hpp"
#include "carmine/rules.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracles {

// Sort-and-interpolate quantile at position (n-1)*p.
inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return values[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Pearson chi-square of a 2x2 table, closed form N(ad-bc)^2/((a+b)(c+d)(a+c)(b+d)).
inline double chi2_2x2(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double det = a * d - b * c;
  return n * det * det / ((a + b) * (c + d) * (a + c) * (b + d));
}

// Adaptive Simpson integration of the chi-square density over [x, inf).
inline double chi_sq_sf_integration(double x, int dof) {
  const double a = dof / 2.0;
  const auto pdf = [a](double t) {
    if (t <= 0) return 0.0;
    return std::exp((a - 1) * std::log(t) - t / 2 - a * std::log(2.0) - std::lgamma(a));
  };
  std::function<double(double, double, double, double, double, double, int)> simpson =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int depth) {
        const double mid = (lo + hi) / 2;
        const double lmid = (lo + mid) / 2, rmid = (mid + hi) / 2;
        const double flm = pdf(lmid), frm = pdf(rmid);
        const double left = (mid - lo) / 6 * (flo + 4 * flm + fmid);
        const double right = (hi - mid) / 6 * (fmid + 4 * frm + fhi);
        if (depth <= 0 || std::fabs(left + right - whole) < 1e-13) {
          return left + right + (left + right - whole) / 15;
        }
        return simpson(lo, mid, flo, flm, fmid, left, depth - 1) +
               simpson(mid, hi, fmid, frm, fhi, right, depth - 1);
      };
  const double upper = x + 60.0 + 20.0 * dof;  // tail beyond is below double noise here
  const double mid = (x + upper) / 2;
  const double whole = (upper - x) / 6 * (pdf(x) + 4 * pdf(mid) + pdf(upper));
  return simpson(x, upper, pdf(x), pdf(mid), pdf(upper), whole, 48);
}

// Closed-form upper tail via the recurrence Q(a+1,x) = Q(a,x) + x^a e^-x / G(a+1),
// started at Q(1/2,x) = erfc(sqrt x) or Q(1,x) = e^-x.
inline double chi_sq_sf_recurrence(double stat, int dof) {
  const double x = stat / 2.0;
  double a, q;
  if (dof % 2 == 1) {
    a = 0.5;
    q = std::erfc(std::sqrt(x));
  } else {
    a = 1.0;
    q = std::exp(-x);
  }
  while (a + 0.5 < dof / 2.0 + 0.25) {
    q += std::exp(a * std::log(x) - x - std::lgamma(a + 1));
    a += 1.0;
  }
  return q;
}

// Exhaustive frequent-itemset enumeration over transaction bitmasks. Only for
// dictionaries of at most ~20 items.
inline std::map<std::vector<int>, std::int64_t> brute_force_frequent(
    const carmine::TransactionSet& ts, double min_support, int max_size) {
  const int m = ts.dictionary().size();
  if (m > 20) throw std::runtime_error("brute force oracle: too many items");
  std::vector<std::uint32_t> masks;
  masks.reserve(static_cast<std::size_t>(ts.size()));
  for (const auto& obs : ts.observations()) {
    std::uint32_t mask = 0;
    for (const int id : obs) mask |= 1u << id;
    masks.push_back(mask);
  }

  std::map<std::vector<int>, std::int64_t> out;
  for (std::uint32_t candidate = 1; candidate < (1u << m); ++candidate) {
    if (std::popcount(candidate) > max_size) continue;
    std::int64_t count = 0;
    for (const auto mask : masks) {
      if ((mask & candidate) == candidate) ++count;
    }
    if (carmine::meets_support(count, ts.size(), min_support)) {
      std::vector<int> items;
      for (int i = 0; i < m; ++i) {
        if (candidate & (1u << i)) items.push_back(i);
      }
      out.emplace(std::move(items), count);
    }
  }
  return out;
}

// Random transaction set honouring the one-item-per-attribute invariant.
// Attribute "A0" always exists and can serve as the class side.
inline carmine::TransactionSet random_transactions(carmine::Rng& rng, int max_items = 15,
                                                   int max_transactions = 40) {
  const int items = 4 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_items - 3)));
  const int attributes = 2 + static_cast<int>(rng.index(std::min(5, items - 1)));
  carmine::ItemDictionary dict;
  std::vector<std::vector<int>> by_attribute(static_cast<std::size_t>(attributes));
  for (int i = 0; i < items; ++i) {
    const int a = i % attributes;
    const int id = dict.add("A" + std::to_string(a), "c" + std::to_string(i), a == 0);
    by_attribute[static_cast<std::size_t>(a)].push_back(id);
  }

  const int n = 5 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_transactions - 4)));
  std::vector<carmine::Transaction> observations;
  observations.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    carmine::Transaction obs;
    for (const auto& pool : by_attribute) {
      if (rng.uniform01() < 0.65) {
        obs.push_back(pool[rng.index(pool.size())]);
      }
    }
    std::sort(obs.begin(), obs.end());
    observations.push_back(std::move(obs));
  }
  return carmine::TransactionSet(std::move(dict), std::move(observations));
}

// Spearman rank correlation with average ranks on ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracles
