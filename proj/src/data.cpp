#include "varsmc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "varsmc/errors.hpp"
#include "varsmc/rng.hpp"
#include "varsmc/stats.hpp"

namespace varsmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
         cell == "null" || cell == "NULL";
}

std::optional<double> parse_double(std::string_view cell) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name,
                         const std::filesystem::path& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw DataError(path.string() + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// Trailing mean of xs over `window` days ending at t (inclusive) or t-1;
// NaN until the window is fully backed by data.
std::vector<double> trailing_mean(std::span<const double> xs, std::size_t window,
                                  bool include_current) {
  std::vector<double> out(xs.size(), kNaN);
  for (std::size_t t = include_current ? window - 1 : window; t < xs.size(); ++t) {
    const std::size_t last = include_current ? t : t - 1;
    double s = 0.0;
    for (std::size_t k = last + 1 - window; k <= last; ++k) s += xs[k];
    out[t] = s / static_cast<double>(window);
  }
  return out;
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [](std::string_view s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d))
    return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

void MarketSeries::validate() const {
  if (returns.size() != rv.size() || dates.size() != returns.size())
    throw DataError("market '" + name + "': dates, returns and rv lengths differ");
  if (returns.size() < HarInputs::kMonth + 1)
    throw DataError("market '" + name + "': need at least 23 observations, got " +
                    std::to_string(returns.size()));
  for (std::size_t i = 0; i < rv.size(); ++i) {
    if (!(rv[i] >= 0.0)) throw DataError("market '" + name + "': negative or NaN rv at index " + std::to_string(i));
    if (!std::isfinite(returns[i]))
      throw DataError("market '" + name + "': non-finite return at index " + std::to_string(i));
    if (i > 0 && !(dates[i - 1] < dates[i]))
      throw DataError("market '" + name + "': dates not strictly increasing at index " +
                      std::to_string(i));
  }
}

MarketSeries MarketSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw DataError("slice exceeds series length");
  MarketSeries out;
  out.name = name;
  out.dates.assign(dates.begin() + first, dates.begin() + first + count);
  out.returns.assign(returns.begin() + first, returns.begin() + first + count);
  out.rv.assign(rv.begin() + first, rv.begin() + first + count);
  return out;
}

MarketSeries load_market_csv(const std::filesystem::path& path, const CsvSchema& schema,
                             LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const std::string header_line = line;
  const auto header = split_line(header_line, schema.delimiter);

  const bool from_prices = !schema.price_column.empty();
  const std::size_t date_col = column_index(header, schema.date_column, path);
  const std::size_t value_col =
      column_index(header, from_prices ? schema.price_column : schema.return_column, path);
  const std::size_t rv_col = column_index(header, schema.rv_column, path);

  MarketSeries s;
  s.name = path.stem().string();
  std::vector<double> values;
  LoadReport rep;

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    ++rep.rows_read;
    const auto cells = split_line(line, schema.delimiter);
    const auto cell = [&](std::size_t idx) -> std::string_view {
      return idx < cells.size() ? cells[idx] : std::string_view{};
    };
    if (is_missing(cell(date_col)) || is_missing(cell(value_col)) || is_missing(cell(rv_col))) {
      ++rep.rows_dropped;
      continue;
    }
    const auto date = parse_iso_date(cell(date_col));
    if (!date)
      throw DataError(path.string() + ": row " + std::to_string(row) + ": malformed date '" +
                      std::string(cell(date_col)) + "'");
    const auto value = parse_double(cell(value_col));
    const auto rv = parse_double(cell(rv_col));
    if (!value || !rv)
      throw DataError(path.string() + ": row " + std::to_string(row) + ": unparseable number");
    if (*rv < 0.0)
      throw DataError(path.string() + ": row " + std::to_string(row) + ": negative realized variance");
    if (from_prices && !(*value > 0.0))
      throw DataError(path.string() + ": row " + std::to_string(row) + ": non-positive price");
    if (!s.dates.empty() && !(s.dates.back() < *date))
      throw DataError(path.string() + ": row " + std::to_string(row) + ": dates not strictly increasing");
    s.dates.push_back(*date);
    values.push_back(*value);
    s.rv.push_back(*rv);
  }
  if (rep.rows_dropped > 0)
    std::cerr << "warning: " << path.string() << ": dropped " << rep.rows_dropped
              << " row(s) with missing values\n";

  if (from_prices) {
    if (values.empty()) throw DataError(path.string() + ": no rows");
    s.returns.reserve(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i)
      s.returns.push_back(100.0 * (std::log(values[i]) - std::log(values[i - 1])));
    s.dates.erase(s.dates.begin());
    s.rv.erase(s.rv.begin());
  } else {
    s.returns = std::move(values);
  }
  if (report) *report = rep;
  return s;
}

void write_market_csv(const std::filesystem::path& path, const MarketSeries& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "date,return,rv\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format_iso_date(series.dates[i]) << ',' << format_double(series.returns[i]) << ','
        << format_double(series.rv[i]) << '\n';
}

HarInputs build_har_inputs(std::span<const double> returns, std::span<const double> rv,
                           bool window_includes_current) {
  if (returns.size() != rv.size()) throw DataError("build_har_inputs: returns/rv length mismatch");
  if (rv.size() < HarInputs::kMonth + 1)
    throw DataError("build_har_inputs: need at least 23 observations");

  HarInputs in;
  in.window_includes_current = window_includes_current;
  in.valid_from = HarInputs::kMonth;
  const std::size_t n = rv.size();

  in.rv_d.assign(rv.begin(), rv.end());
  in.rv_w = trailing_mean(rv, HarInputs::kWeek, window_includes_current);
  in.rv_m = trailing_mean(rv, HarInputs::kMonth, window_includes_current);
  in.rv_m20 = trailing_mean(rv, HarInputs::kLevMonth, window_includes_current);

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(rv[i]);
  in.sqrt_rv_w = trailing_mean(sq, HarInputs::kWeek, window_includes_current);
  in.sqrt_rv_m = trailing_mean(sq, HarInputs::kMonth, window_includes_current);
  in.sqrt_rv_d = std::move(sq);

  const auto neg_part = [](double x) { return x < 0.0 ? x : 0.0; };
  in.neg_ret_d.resize(n);
  for (std::size_t i = 0; i < n; ++i) in.neg_ret_d[i] = neg_part(returns[i]);
  in.neg_ret_w = trailing_mean(returns, HarInputs::kWeek, window_includes_current);
  in.neg_ret_m = trailing_mean(returns, HarInputs::kLevMonth, window_includes_current);
  for (auto* vec : {&in.neg_ret_w, &in.neg_ret_m})
    for (double& x : *vec)
      if (!std::isnan(x)) x = neg_part(x);
  return in;
}

HarInputs build_har_inputs(const MarketSeries& series, bool window_includes_current) {
  if (series.size() < HarInputs::kMonth + 1)
    throw DataError("build_har_inputs: series '" + series.name + "' shorter than 23 observations");
  return build_har_inputs(series.returns, series.rv, window_includes_current);
}

MarketSeries trim_to_split(const MarketSeries& series, const SampleSplit& s) {
  if (s.in_sample_len < 1 || s.out_sample_len < 1)
    throw ConfigError("split: in-sample and out-of-sample lengths must be >= 1");
  if (s.total() > series.size())
    throw ConfigError("split: " + std::to_string(s.in_sample_len) + "+" +
                      std::to_string(s.out_sample_len) + " exceeds series length " +
                      std::to_string(series.size()));
  return series.slice(series.size() - s.total(), s.total());
}

std::pair<MarketSeries, MarketSeries> split(const MarketSeries& series, const SampleSplit& s) {
  const MarketSeries window = trim_to_split(series, s);
  return {window.slice(0, s.in_sample_len), window.slice(s.in_sample_len, s.out_sample_len)};
}

void DgpConfig::validate() const {
  if (!(omega > 0.0) || arch < 0.0 || garch < 0.0)
    throw ConfigError("dgp: require omega > 0 and nonnegative arch/garch");
  if (arch + garch >= 1.0) throw ConfigError("dgp: arch + garch must be < 1 for stationarity");
  if (!(nu > 2.0)) throw ConfigError("dgp: nu must exceed 2");
  if (rv_noise_sd < 0.0) throw ConfigError("dgp: rv_noise_sd must be nonnegative");
}

double DgpConfig::true_quantile(double cond_variance, double alpha) const {
  return mu + std::sqrt(cond_variance) * stats::standardized_t_quantile(alpha, nu);
}

SyntheticMarket generate_synthetic_market(std::uint64_t seed, std::size_t length,
                                          const DgpConfig& dgp) {
  if (length < 100) throw ConfigError("synthetic market: length must be >= 100");
  dgp.validate();

  SyntheticMarket out;
  auto& s = out.series;
  s.name = "synthetic";
  s.dates.reserve(length);
  s.returns.reserve(length);
  s.rv.reserve(length);
  out.cond_variance.reserve(length);

  StreamRng rng(seed, StreamTag::synthetic, 0, 0);
  const double t_scale = std::sqrt((dgp.nu - 2.0) / dgp.nu);

  // Business days from 2000-01-03 (a Monday).
  std::chrono::sys_days day = std::chrono::sys_days{std::chrono::year{2000} / 1 / 3};
  double h = dgp.unconditional_variance();
  for (std::size_t t = 0; t < length; ++t) {
    while (std::chrono::weekday{day} == std::chrono::Saturday ||
           std::chrono::weekday{day} == std::chrono::Sunday)
      day += std::chrono::days{1};
    const double e = rng.student_t(dgp.nu) * t_scale;
    const double u = rng.normal();
    const double y = dgp.mu + std::sqrt(h) * e;
    s.dates.emplace_back(day);
    s.returns.push_back(y);
    s.rv.push_back(h * std::exp(dgp.rv_noise_sd * u));
    out.cond_variance.push_back(h);
    h = dgp.omega + dgp.arch * (y - dgp.mu) * (y - dgp.mu) + dgp.garch * h;
    day += std::chrono::days{1};
  }
  return out;
}

}  // namespace varsmc
