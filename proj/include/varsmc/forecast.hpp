#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "varsmc/data.hpp"
#include "varsmc/inference.hpp"

namespace varsmc::forecast {

enum class ModelKind { rnn_har, har, sqrt_har, lev_har, rhargarch };

std::string_view to_string(ModelKind m);
/// Accepts the canonical names: rnn-har, har, sqrt-har, lev-har, rhargarch.
ModelKind model_from_string(std::string_view name);
const std::vector<std::string>& model_names();

enum class RefitMode { daily, once };

std::string_view to_string(RefitMode r);
RefitMode refit_from_string(std::string_view name);

/// One-step-ahead VaR path over the out-of-sample window.
struct ForecastRun {
  std::string model_id;
  std::string market;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<Date> dates;
  std::vector<double> returns;
  std::vector<double> q_hat;
  /// Per-day particle VaR values (RNN-HAR only, when requested).
  std::vector<std::vector<double>> predictive_draws;
  /// 5% / 95% quantiles of the per-day draws (RNN-HAR only).
  std::vector<double> draw_q05, draw_q95;
  /// Days whose forecast was carried forward after a failed fit (baselines).
  std::vector<bool> carried_forward;
  double seconds = 0.0;
  inference::SmcTrace in_sample_trace;
  std::vector<inference::LevelRecord> data_annealing_trace;
};

struct RnnHarOptions {
  inference::Prior prior;
  inference::SmcConfig smc;
  bool keep_draws = false;
  bool window_includes_current = true;
};

/// Likelihood annealing on the in-sample window, then for every test day:
/// per-particle VaR from the carried hidden state, point forecast = mean of
/// the particle values, then data annealing absorbs the realized return.
ForecastRun forecast_rnn_har(const MarketSeries& series, const SampleSplit& split, double alpha,
                             const RnnHarOptions& options);

struct BaselineOptions {
  RefitMode refit = RefitMode::daily;
  bool zero_mean = false;  ///< mu = 0 instead of the in-sample mean return
  std::uint64_t seed = 0;  ///< RHARGARCH optimizer restarts
  bool window_includes_current = true;
};

ForecastRun forecast_baseline(const MarketSeries& series, const SampleSplit& split, double alpha,
                              ModelKind model, const BaselineOptions& options = {});

void write_forecast_csv(const std::filesystem::path& path, const ForecastRun& run);
ForecastRun read_forecast_csv(const std::filesystem::path& path);

}  // namespace varsmc::forecast
