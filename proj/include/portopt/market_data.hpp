#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "portopt/common.hpp"
#include "portopt/dates.hpp"

namespace portopt {

/// Dated per-asset price series. Rows are assets, columns are dates.
struct PricePanel {
  std::vector<std::string> asset_ids;
  std::vector<Date> dates;
  Eigen::MatrixXd prices;  // assets x dates, strictly positive

  int num_assets() const { return static_cast<int>(asset_ids.size()); }
  int num_dates() const { return static_cast<int>(dates.size()); }

  void validate() const {
    if (prices.rows() != num_assets() || prices.cols() != num_dates())
      throw DataError("price panel dimensions do not match labels");
    for (std::size_t i = 1; i < dates.size(); ++i)
      if (!(dates[i - 1] < dates[i]))
        throw DataError("dates not strictly increasing at " + dates[i].iso());
    for (int n = 0; n < prices.rows(); ++n)
      for (int t = 0; t < prices.cols(); ++t)
        if (!(prices(n, t) > 0.0) || !std::isfinite(prices(n, t)))
          throw DataError("non-positive price for asset '" + asset_ids[n] +
                          "' on " + dates[t].iso());
  }
};

/// Per-asset return series over ordered periods. For daily panels `dates`
/// carries the calendar date of each period; monthly panels keep the
/// month-end date so covariance estimation can align with rebalancing.
struct ReturnsPanel {
  std::vector<std::string> asset_ids;
  std::vector<std::string> periods;
  std::vector<Date> dates;  // same length as periods when date-stamped
  Eigen::MatrixXd values;   // assets x periods

  int num_assets() const { return static_cast<int>(asset_ids.size()); }
  int num_periods() const { return static_cast<int>(periods.size()); }

  void validate() const {
    if (values.rows() != num_assets() || values.cols() != num_periods())
      throw DataError("returns panel dimensions do not match labels");
    if (!values.allFinite()) throw DataError("returns panel has NaN/Inf");
  }
};

/// Per-period symmetric covariance matrices.
struct CovariancePanel {
  std::vector<std::string> periods;
  std::vector<Date> dates;
  std::vector<Eigen::MatrixXd> matrices;  // each assets x assets

  int num_periods() const { return static_cast<int>(periods.size()); }

  void validate(double sym_tol = 1e-12, double psd_tol = -1e-10) const {
    for (const auto& m : matrices) {
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol)
        throw DataError("covariance matrix not symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                        Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < psd_tol)
        throw DataError("covariance matrix not positive semi-definite");
    }
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and stray CR from Windows line endings
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

/// Parses the price CSV: first column `date` (ISO-8601), one column per asset,
/// empty cell = missing. Missing cells are forward-filled from the most recent
/// prior price, and leading gaps backward-filled from the first observation.
inline PricePanel load_prices(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty price CSV");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "date")
    throw DataError("price CSV header must start with 'date' (line 1)");
  PricePanel panel;
  panel.asset_ids.assign(header.begin() + 1, header.end());
  const std::size_t n_assets = panel.asset_ids.size();

  constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> cols;  // one vector per date
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != n_assets + 1)
      throw DataError("malformed row at line " + std::to_string(line_no) +
                      ": expected " + std::to_string(n_assets + 1) +
                      " cells, got " + std::to_string(cells.size()));
    Date d;
    try {
      d = Date::parse(cells[0]);
    } catch (const DataError&) {
      throw DataError("malformed date at line " + std::to_string(line_no) +
                      ": '" + cells[0] + "'");
    }
    if (!panel.dates.empty() && !(panel.dates.back() < d))
      throw DataError("dates not strictly increasing at line " +
                      std::to_string(line_no));
    panel.dates.push_back(d);
    std::vector<double> row(n_assets, kMissing);
    for (std::size_t i = 0; i < n_assets; ++i) {
      if (cells[i + 1].empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(cells[i + 1].c_str(), &end);
      if (end == cells[i + 1].c_str() || *end != '\0' || !std::isfinite(v))
        throw DataError("malformed price at line " + std::to_string(line_no) +
                        ", asset '" + panel.asset_ids[i] + "'");
      if (!(v > 0.0))
        throw DataError("non-positive price for asset '" + panel.asset_ids[i] +
                        "' on " + d.iso());
      row[i] = v;
    }
    cols.push_back(std::move(row));
  }
  if (panel.dates.size() < 2)
    throw DataError("price CSV needs at least 2 dates");

  panel.prices.resize(static_cast<Eigen::Index>(n_assets),
                      static_cast<Eigen::Index>(panel.dates.size()));
  for (std::size_t n = 0; n < n_assets; ++n) {
    double last = kMissing;
    bool any = false;
    for (std::size_t t = 0; t < cols.size(); ++t) {
      if (!std::isnan(cols[t][n])) {
        last = cols[t][n];
        any = true;
      }
      panel.prices(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t)) =
          last;
    }
    if (!any)
      throw DataError("asset '" + panel.asset_ids[n] +
                      "' has zero price observations");
    // backward-fill the leading gap from the first available price
    double first = kMissing;
    for (std::size_t t = 0; t < cols.size(); ++t)
      if (!std::isnan(cols[t][n])) {
        first = cols[t][n];
        break;
      }
    for (std::size_t t = 0; t < cols.size(); ++t) {
      auto& cell = panel.prices(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(t));
      if (std::isnan(cell)) cell = first;
    }
  }
  panel.validate();
  return panel;
}

/// value[n][t] = ln(P_{n,t} / P_{n,t-1}); output has one fewer period.
inline ReturnsPanel log_returns(const PricePanel& panel) {
  if (panel.num_dates() < 2)
    throw DataError("log returns need at least 2 dates");
  ReturnsPanel out;
  out.asset_ids = panel.asset_ids;
  out.values.resize(panel.prices.rows(), panel.prices.cols() - 1);
  for (int t = 1; t < panel.num_dates(); ++t) {
    out.values.col(t - 1) =
        (panel.prices.col(t).array() / panel.prices.col(t - 1).array()).log();
    out.dates.push_back(panel.dates[static_cast<std::size_t>(t)]);
    out.periods.push_back(panel.dates[static_cast<std::size_t>(t)].iso());
  }
  out.validate();
  return out;
}

struct MonthlyAggregation {
  ReturnsPanel panel;  // one period per business month, labels "YYYY-MM"
  std::vector<std::string> warnings;
};

/// Sums daily log returns within each business month (time-additivity of
/// log returns). Months inside the span with no observations are excluded
/// with a warning record.
inline MonthlyAggregation aggregate_monthly(const ReturnsPanel& daily) {
  if (daily.dates.size() != daily.periods.size() || daily.dates.empty())
    throw DataError("monthly aggregation needs date-stamped daily returns");
  MonthlyAggregation out;
  out.panel.asset_ids = daily.asset_ids;

  const int first = daily.dates.front().month_index();
  const int last = daily.dates.back().month_index();
  std::vector<Eigen::VectorXd> sums;
  for (int mi = first; mi <= last; ++mi) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(daily.values.rows());
    Date month_end;
    int count = 0;
    for (std::size_t t = 0; t < daily.dates.size(); ++t) {
      if (daily.dates[t].month_index() != mi) continue;
      acc += daily.values.col(static_cast<Eigen::Index>(t));
      month_end = daily.dates[t];
      ++count;
    }
    const Date probe = Date{mi / 12, mi % 12 + 1, 1};
    if (count == 0) {
      out.warnings.push_back("month " + probe.month_label() +
                             " has no observations; excluded");
      continue;
    }
    out.panel.periods.push_back(probe.month_label());
    out.panel.dates.push_back(month_end);
    sums.push_back(acc);
  }
  out.panel.values.resize(daily.values.rows(),
                          static_cast<Eigen::Index>(sums.size()));
  for (std::size_t j = 0; j < sums.size(); ++j)
    out.panel.values.col(static_cast<Eigen::Index>(j)) = sums[j];
  out.panel.validate();
  return out;
}

struct RollingCovariance {
  CovariancePanel panel;
  std::vector<std::string> warnings;
};

/// Sample covariance (divisor window-1) of the `window` daily returns ending
/// at and including each monthly rebalancing date (the last business day of
/// each month present in the daily panel). Months whose month-end has fewer
/// than `window` prior observations are dropped with a warning.
inline RollingCovariance rolling_covariance(const ReturnsPanel& daily,
                                            int window) {
  if (window < 2) throw ConfigError("covariance window must be >= 2");
  if (daily.num_periods() < window)
    throw DataError("daily panel shorter than covariance window");
  if (daily.dates.size() != daily.periods.size())
    throw DataError("rolling covariance needs date-stamped daily returns");

  RollingCovariance out;
  const int T = daily.num_periods();
  for (int t = 0; t < T; ++t) {
    const bool month_end =
        t + 1 == T || daily.dates[static_cast<std::size_t>(t + 1)]
                              .month_index() !=
                          daily.dates[static_cast<std::size_t>(t)].month_index();
    if (!month_end) continue;
    const Date d = daily.dates[static_cast<std::size_t>(t)];
    if (t + 1 < window) {
      out.warnings.push_back("rebalancing date " + d.iso() + " dropped: only " +
                             std::to_string(t + 1) + " of " +
                             std::to_string(window) + " observations");
      continue;
    }
    const auto block = daily.values.middleCols(t - window + 1, window);
    const Eigen::VectorXd mean = block.rowwise().mean();
    const Eigen::MatrixXd centered = block.colwise() - mean;
    Eigen::MatrixXd cov =
        centered * centered.transpose() / static_cast<double>(window - 1);
    cov = ((cov + cov.transpose()) / 2.0).eval();  // enforce exact symmetry
    out.panel.periods.push_back(d.month_label());
    out.panel.dates.push_back(d);
    out.panel.matrices.push_back(std::move(cov));
  }
  return out;
}

/// Hodrick-Prescott trend: argmin over tau of
///   sum (y_t - tau_t)^2 + smoothing * sum (tau_{t+1} - 2 tau_t + tau_{t-1})^2,
/// solved exactly through the pentadiagonal normal equations (I + s D'D).
inline Eigen::VectorXd hp_filter(const Eigen::VectorXd& series,
                                 double smoothing) {
  const Eigen::Index T = series.size();
  if (T < 3) throw ConfigError("hp_filter needs a series of length >= 3");
  if (smoothing < 0.0) throw ConfigError("hp_filter smoothing must be >= 0");
  if (smoothing == 0.0) return series;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(5 * T));
  // rows of D are [1, -2, 1]; accumulate I + s * D'D directly
  Eigen::SparseMatrix<double> a(T, T);
  for (Eigen::Index i = 0; i < T; ++i) trips.emplace_back(i, i, 1.0);
  for (Eigen::Index r = 0; r + 2 < T; ++r) {
    const double c[3] = {1.0, -2.0, 1.0};
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q)
        trips.emplace_back(r + p, r + q, smoothing * c[p] * c[q]);
  }
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success)
    throw DataError("hp_filter: factorization failed");
  return solver.solve(series);
}

/// Discards exactly those assets whose return variance is strictly below the
/// cross-asset mean variance AND whose mean return is strictly below the
/// cross-asset mean of mean returns.
inline std::vector<std::string> filter_assets(const ReturnsPanel& returns) {
  const int n = returns.num_assets();
  if (n < 2) throw DataError("filter_assets needs at least 2 assets");
  const int T = returns.num_periods();
  Eigen::VectorXd means(n), vars(n);
  for (int i = 0; i < n; ++i) {
    const auto row = returns.values.row(i);
    means(i) = row.mean();
    vars(i) = T > 1 ? (row.array() - means(i)).square().sum() /
                          static_cast<double>(T - 1)
                    : 0.0;
  }
  const double mean_of_vars = vars.mean();
  const double mean_of_means = means.mean();
  std::vector<std::string> retained;
  for (int i = 0; i < n; ++i) {
    const bool discard = vars(i) < mean_of_vars && means(i) < mean_of_means;
    if (!discard) retained.push_back(returns.asset_ids[static_cast<std::size_t>(i)]);
  }
  return retained;
}

/// Restrict a returns panel to a subset of assets (order preserved).
inline ReturnsPanel select_assets(const ReturnsPanel& panel,
                                  const std::vector<std::string>& ids) {
  ReturnsPanel out;
  out.periods = panel.periods;
  out.dates = panel.dates;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), panel.values.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it =
        std::find(panel.asset_ids.begin(), panel.asset_ids.end(), ids[k]);
    if (it == panel.asset_ids.end())
      throw DataError("unknown asset '" + ids[k] + "'");
    out.asset_ids.push_back(ids[k]);
    out.values.row(static_cast<Eigen::Index>(k)) =
        panel.values.row(it - panel.asset_ids.begin());
  }
  return out;
}

inline PricePanel select_assets(const PricePanel& panel,
                                const std::vector<std::string>& ids) {
  PricePanel out;
  out.dates = panel.dates;
  out.prices.resize(static_cast<Eigen::Index>(ids.size()), panel.prices.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it =
        std::find(panel.asset_ids.begin(), panel.asset_ids.end(), ids[k]);
    if (it == panel.asset_ids.end())
      throw DataError("unknown asset '" + ids[k] + "'");
    out.asset_ids.push_back(ids[k]);
    out.prices.row(static_cast<Eigen::Index>(k)) =
        panel.prices.row(it - panel.asset_ids.begin());
  }
  return out;
}

}  // namespace portopt
