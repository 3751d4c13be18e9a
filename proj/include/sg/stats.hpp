#pragma once

// Chi-square machinery: the regularized upper incomplete gamma survival
// function, contingency tables and the test of independence. Only what the
// validation analysis needs, computed exactly rather than via lookup tables.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sg/core.hpp"

namespace sg {

namespace detail {

inline constexpr double kGammaEps = 1e-15;
inline constexpr int kGammaMaxIter = 1000;

// Lower regularized gamma P(a,x) by series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
  if (x <= 0.0) return 0.0;
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < kGammaMaxIter; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a,x) by continued fraction (modified Lentz);
// valid for x >= a + 1.
inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxIter; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kGammaEps) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Regularized upper incomplete gamma Q(a, x), absolute error <= 1e-10.
inline double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw Error(Err::Internal, "regularized_gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_contfrac(a, x);
}

/// Survival function of the chi-square distribution: Q(df/2, x/2).
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw Error(Err::Internal, "chi_square_sf: df must be positive");
  if (x < 0.0) throw Error(Err::Internal, "chi_square_sf: x must be non-negative");
  return regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

/// Closed form for even df: e^(-x/2) * sum_{k<df/2} (x/2)^k / k!.
/// Independent cross-check route for the survival function.
inline double chi_square_sf_even_df(double x, int df) {
  if (df < 2 || df % 2 != 0) throw Error(Err::Internal, "chi_square_sf_even_df: df must be even");
  double half = 0.5 * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < df / 2; ++k) {
    term *= half / static_cast<double>(k);
    sum += term;
  }
  return std::exp(-half) * sum;
}

// ---------------------------------------------------------------------------
// Contingency tables

struct ContingencyTable {
  std::vector<std::string> row_labels;  // persona ids
  std::vector<std::string> col_labels;  // category names
  std::vector<std::vector<std::int64_t>> counts;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }

  std::int64_t row_total(std::size_t r) const {
    std::int64_t t = 0;
    for (auto v : counts[r]) t += v;
    return t;
  }
  std::int64_t col_total(std::size_t c) const {
    std::int64_t t = 0;
    for (const auto& row : counts) t += row[c];
    return t;
  }
  std::int64_t grand_total() const {
    std::int64_t t = 0;
    for (std::size_t r = 0; r < rows(); ++r) t += row_total(r);
    return t;
  }
};

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::int64_t n = 0;
  bool low_expected = false;  // some expected count < 5 (validity caveat)
  double cramers_v = 0.0;     // bonus effect size, not validated anywhere
};

/// Pearson chi-square test of independence. Throws DegenerateTable on any
/// zero marginal row/column. Yates continuity correction is off by default.
inline ChiSquareResult chi_square_independence(const ContingencyTable& table, bool yates = false) {
  std::size_t r = table.rows();
  std::size_t c = table.cols();
  if (r < 2 || c < 2) throw Error(Err::Degenerate, "table needs at least 2 rows and 2 columns");
  for (const auto& row : table.counts)
    if (row.size() != c) throw Error(Err::Degenerate, "ragged table");
  for (const auto& row : table.counts)
    for (auto v : row)
      if (v < 0) throw Error(Err::Degenerate, "negative cell count");

  std::vector<double> row_tot(r), col_tot(c);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double v = static_cast<double>(table.counts[i][j]);
      row_tot[i] += v;
      col_tot[j] += v;
      n += v;
    }
  for (std::size_t i = 0; i < r; ++i)
    if (row_tot[i] == 0.0) throw Error(Err::Degenerate, "zero marginal row: " + (i < table.row_labels.size() ? table.row_labels[i] : std::to_string(i)));
  for (std::size_t j = 0; j < c; ++j)
    if (col_tot[j] == 0.0) throw Error(Err::Degenerate, "zero marginal column: " + (j < table.col_labels.size() ? table.col_labels[j] : std::to_string(j)));

  ChiSquareResult out;
  out.df = static_cast<int>((r - 1) * (c - 1));
  out.n = static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double expected = row_tot[i] * col_tot[j] / n;
      if (expected < 5.0) out.low_expected = true;
      double diff = std::fabs(static_cast<double>(table.counts[i][j]) - expected);
      if (yates) diff = std::max(0.0, diff - 0.5);
      out.statistic += diff * diff / expected;
    }
  out.p_value = chi_square_sf(out.statistic, out.df);
  double k = static_cast<double>(std::min(r, c)) - 1.0;
  if (k > 0.0 && n > 0.0) out.cramers_v = std::sqrt(out.statistic / (n * k));
  return out;
}

// ---------------------------------------------------------------------------
// Latency statistics

struct LatencyStats {
  double mean_s = 0.0;
  double sd_s = 0.0;  // unbiased (n-1) estimator
  std::size_t n = 0;
};

/// Sample mean and unbiased sd of latencies given in seconds. Needs n >= 2.
inline LatencyStats latency_stats_seconds(const std::vector<double>& seconds) {
  if (seconds.size() < 2) throw Error(Err::Insufficient, "latency stats need at least 2 samples");
  LatencyStats out;
  out.n = seconds.size();
  double sum = 0.0;
  for (double s : seconds) sum += s;
  out.mean_s = sum / static_cast<double>(out.n);
  double ss = 0.0;
  for (double s : seconds) ss += (s - out.mean_s) * (s - out.mean_s);
  out.sd_s = std::sqrt(ss / static_cast<double>(out.n - 1));
  return out;
}

}  // namespace sg
