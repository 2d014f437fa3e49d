#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace varsmc {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; std::nullopt on any malformation.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

/// Aligned daily returns (percent) and realized variances (percent^2) for one market.
struct MarketSeries {
  std::string name;
  std::vector<Date> dates;
  std::vector<double> returns;
  std::vector<double> rv;

  std::size_t size() const noexcept { return returns.size(); }

  /// Throws DataError if lengths differ, length < 23, any rv < 0 or dates
  /// are not strictly increasing.
  void validate() const;

  /// Contiguous copy of rows [first, first + count).
  MarketSeries slice(std::size_t first, std::size_t count) const;
};

/// Daily inputs plus trailing-window aggregates. By default every trailing
/// window ends at (and includes) day t; with `window_includes_current` off
/// the window ends at t-1 instead. Each aggregate is NaN until its own
/// window is fully backed by data; all of them are defined from `valid_from`.
struct HarInputs {
  static constexpr std::size_t kWeek = 5;
  static constexpr std::size_t kMonth = 22;
  static constexpr std::size_t kLevMonth = 20;

  std::vector<double> rv_d;
  std::vector<double> rv_w;        ///< mean of rv_d over 5 days
  std::vector<double> rv_m;        ///< mean of rv_d over 22 days
  std::vector<double> rv_m20;      ///< mean of rv_d over 20 days (LevHAR)
  std::vector<double> sqrt_rv_d;
  std::vector<double> sqrt_rv_w;   ///< mean of sqrt(rv_d) over 5 days
  std::vector<double> sqrt_rv_m;   ///< mean of sqrt(rv_d) over 22 days
  std::vector<double> neg_ret_d;   ///< min(y_t, 0)
  std::vector<double> neg_ret_w;   ///< ybar_5 * I[ybar_5 < 0]
  std::vector<double> neg_ret_m;   ///< ybar_20 * I[ybar_20 < 0]
  std::size_t valid_from = kMonth;
  bool window_includes_current = true;

  std::size_t size() const noexcept { return rv_d.size(); }
};

/// In-sample / out-of-sample lengths. Applied to the trailing
/// in_sample_len + out_sample_len rows of a series.
struct SampleSplit {
  std::size_t in_sample_len = 2000;
  std::size_t out_sample_len = 1000;

  std::size_t total() const noexcept { return in_sample_len + out_sample_len; }
};

/// Column mapping for CSV ingestion. Exactly one of `return_column` /
/// `price_column` is used; prices take precedence when both are present in
/// the file and `price_column` is set.
struct CsvSchema {
  std::string date_column = "date";
  std::string return_column = "return";
  std::string price_column;  ///< empty: read returns directly
  std::string rv_column = "rv";
  char delimiter = ',';
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;  ///< rows with a missing value
};

MarketSeries load_market_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                             LoadReport* report = nullptr);

/// Writes date,return,rv with shortest round-trip formatting.
void write_market_csv(const std::filesystem::path& path, const MarketSeries& series);

HarInputs build_har_inputs(const MarketSeries& series, bool window_includes_current = true);
HarInputs build_har_inputs(std::span<const double> returns, std::span<const double> rv,
                           bool window_includes_current = true);

/// Trailing in+out rows of the series, split into (in-sample, out-of-sample).
std::pair<MarketSeries, MarketSeries> split(const MarketSeries& series, const SampleSplit& s);

/// The trailing s.total() rows of the series (the window the split applies to).
MarketSeries trim_to_split(const MarketSeries& series, const SampleSplit& s);

/// GARCH(1,1) with standardized Student-t innovations:
///   y_t = mu + sqrt(h_t) * e_t,  h_t = omega + a (y_{t-1} - mu)^2 + b h_{t-1},
///   rv_t = h_t * exp(rv_noise_sd * u_t),  u_t ~ N(0, 1).
/// h_1 is the unconditional variance.
struct DgpConfig {
  double mu = 0.03;
  double omega = 0.02;
  double arch = 0.08;
  double garch = 0.90;
  double nu = 6.0;
  double rv_noise_sd = 0.3;

  void validate() const;
  double unconditional_variance() const noexcept { return omega / (1.0 - arch - garch); }
  /// True conditional alpha-quantile of y_t given its conditional variance.
  double true_quantile(double cond_variance, double alpha) const;
};

struct SyntheticMarket {
  MarketSeries series;
  std::vector<double> cond_variance;  ///< h_t aligned with series rows
};

SyntheticMarket generate_synthetic_market(std::uint64_t seed, std::size_t length,
                                          const DgpConfig& dgp = {});

}  // namespace varsmc
