#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace varsmc::backtest {

/// (1/T) sum (y - q)(alpha - I(y <= q)).
double mean_quantile_score(std::span<const double> returns, std::span<const double> q_hat,
                           double alpha);

/// Fraction of days with y < q.
double vrate(std::span<const double> returns, std::span<const double> q_hat);

enum class DqVariant { dq1 = 1, dq2 = 2, dq3 = 3, dq4 = 4 };

struct DqResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool ridge_applied = false;
  std::size_t n_rows = 0;
};

/// Hit regressors: W_t = (1, H_{t-1}, ..., H_{t-lags}, VaR_t) with
/// H_t = I(y_t < VaR_t) - alpha, rows from t = lags.
std::vector<std::vector<double>> dq_design(std::span<const double> returns,
                                           std::span<const double> q_hat, double alpha, int lags,
                                           std::vector<double>* hits = nullptr);

DqResult dq_test(std::span<const double> returns, std::span<const double> q_hat, double alpha,
                 DqVariant variant);

struct TailLoss {
  double value = 0.0;
  bool defined = false;
};

/// sum max(0, y - VaR) / sum y; undefined when sum y == 0.
TailLoss tail_loss_ratio(std::span<const double> returns, std::span<const double> q_hat);

inline constexpr double kDqLevel = 0.05;

struct BacktestReport {
  std::string model_id;
  std::string market;
  double alpha = 0.0;
  double qs = 0.0;
  double vrate = 0.0;
  double vrate_ratio = 0.0;
  std::array<DqResult, 4> dq{};
  TailLoss tail_loss;
  std::size_t n_test = 0;

  int dq_rejections(double level = kDqLevel) const;
};

BacktestReport evaluate(std::string model_id, std::string market, double alpha,
                        std::span<const double> returns, std::span<const double> q_hat);

nlohmann::json to_json(const BacktestReport& r);
BacktestReport report_from_json(const nlohmann::json& j);
void write_report_json(const std::filesystem::path& path, const BacktestReport& r);
BacktestReport read_report_json(const std::filesystem::path& path);

enum class Metric { qs, vrate, dq, tail_loss };
inline constexpr std::array<Metric, 4> kMetrics{Metric::qs, Metric::vrate, Metric::dq,
                                                Metric::tail_loss};
std::string metric_name(Metric m);

struct MarketComparison {
  std::string market;
  std::vector<BacktestReport> reports;  ///< one per model, in table column order
  /// favoured[metric][model] is true for every model attaining the best value.
  std::array<std::vector<bool>, 4> favoured;
  std::array<bool, 4> tie{};
};

struct ComparisonTable {
  double alpha = 0.0;
  std::vector<std::string> models;
  std::vector<MarketComparison> markets;
};

/// Groups reports by market; every market must carry the same model set
/// (>= 2 models) and all reports the same alpha.
ComparisonTable compare(std::span<const BacktestReport> reports);

/// One row per market, model-major metric columns.
void write_comparison_csv(const std::filesystem::path& path, const ComparisonTable& table);
nlohmann::json to_json(const ComparisonTable& table);

}  // namespace varsmc::backtest
