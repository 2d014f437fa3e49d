#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "varsmc/backtest.hpp"
#include "varsmc/data.hpp"
#include "varsmc/forecast.hpp"
#include "varsmc/inference.hpp"

namespace varsmc::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

struct SyntheticSpec {
  std::optional<std::uint64_t> seed;  ///< derived from the run seed when unset
  std::size_t length = 3000;
  DgpConfig dgp;
};

struct RunConfig {
  std::vector<std::filesystem::path> data;
  std::optional<SyntheticSpec> synthetic;
  CsvSchema schema;
  std::vector<std::string> models;
  std::vector<double> alphas{0.01, 0.025, 0.05};
  SampleSplit split;
  inference::SmcConfig smc;
  inference::Prior prior;
  std::filesystem::path out_dir = "varsmc-out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  forecast::RefitMode refit = forecast::RefitMode::daily;
  bool window_includes_current = true;
  bool zero_mean = false;
  bool keep_draws = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Fully resolved configuration (defaults included), stable key order.
nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);
/// 16 hex digits of FNV-1a over the compact resolved-config JSON, leaving
/// out the fields that cannot change results (jobs, out).
std::string config_hash(const RunConfig& c);

/// Human-readable dump of the resolved configuration.
std::string describe(const RunConfig& c);

std::uint64_t fnv1a(std::string_view s) noexcept;
std::uint64_t job_seed(std::uint64_t root, std::string_view market, std::string_view model,
                       double alpha) noexcept;

/// Loads every data path and, if configured, the synthetic market. Names
/// are file stems (or "synthetic"); duplicates are rejected.
std::vector<MarketSeries> load_markets(const RunConfig& c);

std::string alpha_tag(double alpha);

enum class Stage { fit, forecast, full };

struct RunResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> artifacts;  ///< relative to out_dir
  std::vector<std::string> failures;
};

/// Runs every (market, model, alpha) job with up to `jobs` workers and
/// writes artifacts plus manifest.json under out_dir. Job failures are
/// recorded in the manifest; the exit code follows the first failing job
/// (1 config, 2 data, 3 numerical).
RunResult run(const RunConfig& c, Stage stage = Stage::full);

/// Exit code for an exception: 1 ConfigError, 2 DataError, 3 NumericalError
/// (and anything else).
int exit_code_for(const std::exception& e) noexcept;

}  // namespace varsmc::pipeline
