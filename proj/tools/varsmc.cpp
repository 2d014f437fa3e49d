// varsmc command-line front end.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varsmc/backtest.hpp"
#include "varsmc/data.hpp"
#include "varsmc/errors.hpp"
#include "varsmc/forecast.hpp"
#include "varsmc/pipeline.hpp"

namespace {

using namespace varsmc;
namespace fs = std::filesystem;

struct Cli {
  pipeline::RunConfig cfg;
  std::vector<std::string> data;
  std::vector<std::string> models;
  std::vector<double> alphas;
  std::uint64_t seed = 0;
  std::string refit = "daily";
  std::string out = "varsmc-out";
  std::string from_manifest;
  bool synthetic = false;
  std::size_t synthetic_length = 3000;
  std::uint64_t synthetic_seed = 0;
  bool lagged_windows = false;
  std::string delimiter = ",";
  DgpConfig dgp;
};

CLI::Option* env(CLI::Option* opt, const std::string& name) { return opt->envname("VARSMC_" + name); }

void add_common_options(CLI::App& app, Cli& c) {
  auto& cfg = c.cfg;
  env(app.add_option("--data", c.data, "Market CSV files (comma-separated)")->delimiter(','), "DATA");
  env(app.add_option("--models", c.models,
                     "Models: rnn-har, har, lev-har, sqrt-har, rhargarch (comma-separated)")
          ->delimiter(','),
      "MODELS");
  env(app.add_option("--alpha", c.alphas, "VaR levels (default 0.01,0.025,0.05)")->delimiter(','),
      "ALPHA");
  env(app.add_option("--in-sample", cfg.split.in_sample_len, "In-sample length")
          ->capture_default_str(),
      "IN_SAMPLE");
  env(app.add_option("--out-sample", cfg.split.out_sample_len, "Out-of-sample length")
          ->capture_default_str(),
      "OUT_SAMPLE");
  env(app.add_option("--particles", cfg.smc.particles, "SMC particles M")->capture_default_str(),
      "PARTICLES");
  env(app.add_option("--ess-frac", cfg.smc.ess_frac, "Resampling threshold c")->capture_default_str(),
      "ESS_FRAC");
  env(app.add_option("--mh-steps-lik", cfg.smc.mh_steps_lik, "MH steps per likelihood-annealing move")
          ->capture_default_str(),
      "MH_STEPS_LIK");
  env(app.add_option("--mh-steps-data", cfg.smc.mh_steps_data, "MH steps per data-annealing move")
          ->capture_default_str(),
      "MH_STEPS_DATA");
  env(app.add_option("--max-levels", cfg.smc.max_levels, "Likelihood-annealing level cap K_max")
          ->capture_default_str(),
      "MAX_LEVELS");
  env(app.add_option("--seed", c.seed, "Root seed for every random stream"), "SEED");
  env(app.add_option("--jobs", cfg.jobs, "Concurrent (market, model, alpha) jobs")->capture_default_str(),
      "JOBS");
  env(app.add_option("--out", c.out, "Output directory")->capture_default_str(), "OUT");
  env(app.add_option("--refit", c.refit, "Baseline refit schedule")
          ->check(CLI::IsMember({"daily", "once"}))
          ->capture_default_str(),
      "REFIT");
  env(app.add_option("--prior-recurrent-sd", cfg.prior.recurrent_sd, "Prior sd of recurrent-cell weights")
          ->capture_default_str(),
      "PRIOR_RECURRENT_SD");
  env(app.add_option("--prior-beta-sd", cfg.prior.beta_sd, "Prior sd of output weights")
          ->capture_default_str(),
      "PRIOR_BETA_SD");
  env(app.add_option("--ig-shape", cfg.prior.ig_shape, "Inverse-gamma shape for the AL scale")
          ->capture_default_str(),
      "IG_SHAPE");
  env(app.add_option("--ig-scale", cfg.prior.ig_scale, "Inverse-gamma scale for the AL scale")
          ->capture_default_str(),
      "IG_SCALE");
  env(app.add_flag("--lagged-windows", c.lagged_windows,
                   "Weekly/monthly RV windows end at t-1 instead of t"),
      "LAGGED_WINDOWS");
  env(app.add_flag("--zero-mean", cfg.zero_mean, "Baselines use mu = 0"), "ZERO_MEAN");
  env(app.add_flag("--keep-draws", cfg.keep_draws, "Keep per-particle forecasts in memory"),
      "KEEP_DRAWS");
  env(app.add_option("--date-column", cfg.schema.date_column)->capture_default_str(), "DATE_COLUMN");
  env(app.add_option("--return-column", cfg.schema.return_column)->capture_default_str(),
      "RETURN_COLUMN");
  env(app.add_option("--price-column", cfg.schema.price_column, "Derive returns from prices"),
      "PRICE_COLUMN");
  env(app.add_option("--rv-column", cfg.schema.rv_column)->capture_default_str(), "RV_COLUMN");
  env(app.add_option("--delimiter", c.delimiter)->capture_default_str(), "DELIMITER");
  env(app.add_flag("--synthetic", c.synthetic, "Add a market drawn from the synthetic DGP"),
      "SYNTHETIC");
  env(app.add_option("--synthetic-length", c.synthetic_length)->capture_default_str(),
      "SYNTHETIC_LENGTH");
  env(app.add_option("--synthetic-seed", c.synthetic_seed, "DGP seed (default: derived from --seed)"),
      "SYNTHETIC_SEED");
  env(app.add_option("--dgp-mu", c.dgp.mu)->capture_default_str(), "DGP_MU");
  env(app.add_option("--dgp-omega", c.dgp.omega)->capture_default_str(), "DGP_OMEGA");
  env(app.add_option("--dgp-arch", c.dgp.arch)->capture_default_str(), "DGP_ARCH");
  env(app.add_option("--dgp-garch", c.dgp.garch)->capture_default_str(), "DGP_GARCH");
  env(app.add_option("--dgp-nu", c.dgp.nu)->capture_default_str(), "DGP_NU");
  env(app.add_option("--dgp-rv-noise-sd", c.dgp.rv_noise_sd)->capture_default_str(),
      "DGP_RV_NOISE_SD");
  app.add_option("--from-manifest", c.from_manifest,
                 "Reuse the resolved configuration recorded in a manifest.json")
      ->check(CLI::ExistingFile);
}

pipeline::RunConfig resolve(const CLI::App& app, Cli& c) {
  if (!c.from_manifest.empty()) {
    std::ifstream in(c.from_manifest);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(c.from_manifest + ": " + e.what());
    }
    if (!j.contains("config")) throw ConfigError(c.from_manifest + ": no config section");
    auto cfg = pipeline::config_from_json(j.at("config"));
    if (app.count("--out")) cfg.out_dir = c.out;
    if (app.count("--jobs")) cfg.jobs = c.cfg.jobs;
    return cfg;
  }
  auto cfg = c.cfg;
  for (const auto& d : c.data) cfg.data.emplace_back(d);
  cfg.models = c.models;
  if (!c.alphas.empty()) cfg.alphas = c.alphas;
  if (app.count("--seed")) cfg.seed = c.seed;
  cfg.refit = forecast::refit_from_string(c.refit);
  cfg.out_dir = c.out;
  cfg.window_includes_current = !c.lagged_windows;
  if (c.delimiter.size() != 1) throw ConfigError("delimiter must be a single character");
  cfg.schema.delimiter = c.delimiter[0];
  if (c.synthetic) {
    pipeline::SyntheticSpec s;
    s.length = c.synthetic_length;
    s.dgp = c.dgp;
    if (app.count("--synthetic-seed")) s.seed = c.synthetic_seed;
    cfg.synthetic = s;
  }
  return cfg;
}

int report_result(const pipeline::RunResult& r, const pipeline::RunConfig& cfg) {
  std::cout << r.artifacts.size() << " artifacts written under " << cfg.out_dir.string()
            << " (manifest.json)\n";
  for (const auto& f : r.failures) std::cerr << "error: " << f << '\n';
  return r.exit_code;
}

int cmd_simulate(const Cli& c, const CLI::App& root, std::size_t length, const std::string& out,
                 const std::string& truth) {
  if (!root.count("--seed")) throw ConfigError("simulate: --seed is required");
  c.dgp.validate();
  const auto m = generate_synthetic_market(c.seed, length, c.dgp);
  write_market_csv(out, m.series);
  if (!truth.empty()) {
    std::ofstream t(truth);
    if (!t) throw DataError("cannot write " + truth);
    t << "date,cond_variance,q_0.01,q_0.025,q_0.05\n";
    t.precision(17);
    for (std::size_t i = 0; i < m.series.size(); ++i)
      t << format_iso_date(m.series.dates[i]) << ',' << m.cond_variance[i] << ','
        << c.dgp.true_quantile(m.cond_variance[i], 0.01) << ','
        << c.dgp.true_quantile(m.cond_variance[i], 0.025) << ','
        << c.dgp.true_quantile(m.cond_variance[i], 0.05) << '\n';
  }
  std::cout << "wrote " << m.series.size() << " rows to " << out << '\n';
  return 0;
}

int cmd_backtest(const Cli& c, const std::string& forecast_path, std::string model,
                 std::string market, const std::string& out) {
  if (c.alphas.size() != 1) throw ConfigError("backtest: pass exactly one --alpha");
  const auto fr = forecast::read_forecast_csv(forecast_path);
  const std::string stem = fs::path(forecast_path).stem().string();
  const auto sep = stem.find("__");
  if (market.empty()) market = sep == std::string::npos ? stem : stem.substr(0, sep);
  if (model.empty()) {
    if (sep == std::string::npos) throw ConfigError("backtest: pass --model");
    const auto rest = stem.substr(sep + 2);
    model = rest.substr(0, rest.find("__"));
  }
  const auto report = backtest::evaluate(model, market, c.alphas.front(), fr.returns, fr.q_hat);
  if (out.empty()) {
    std::cout << backtest::to_json(report).dump(2) << '\n';
  } else {
    backtest::write_report_json(out, report);
    std::cout << "wrote " << out << '\n';
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out_dir) {
  std::map<double, std::vector<backtest::BacktestReport>> by_alpha;
  for (const auto& p : paths) {
    auto r = backtest::read_report_json(p);
    by_alpha[r.alpha].push_back(std::move(r));
  }
  fs::create_directories(out_dir);
  for (const auto& [alpha, reports] : by_alpha) {
    const auto table = backtest::compare(reports);
    const auto stem = fs::path(out_dir) / ("comparison_" + pipeline::alpha_tag(alpha));
    backtest::write_comparison_csv(stem.string() + ".csv", table);
    std::ofstream js(stem.string() + ".json");
    js << backtest::to_json(table).dump(2) << '\n';
    std::cout << "wrote " << stem.string() << ".{csv,json}\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varsmc: VaR forecasting with RNN-HAR under SMC, HAR-family baselines and backtests"};
  app.set_config("--config", "", "Read options from a key = value (TOML/INI) file");
  app.require_subcommand(1);
  Cli c;
  add_common_options(app, c);

  auto* validate = app.add_subcommand("validate", "Check the configuration and print resolved defaults");
  auto* run = app.add_subcommand("run", "fit -> forecast -> backtest -> compare");
  auto* fcst = app.add_subcommand("forecast", "Write forecast paths only");
  auto* fit = app.add_subcommand("fit", "Fit every model on the in-sample window");
  auto* bt = app.add_subcommand("backtest", "Score one forecast CSV");
  auto* rep = app.add_subcommand("report", "Build comparison tables from report JSONs");
  auto* sim = app.add_subcommand("simulate", "Write a synthetic market CSV");
  for (auto* sub : {validate, run, fcst, fit, bt, rep, sim}) sub->fallthrough();

  bool dry_run = false;
  run->add_flag("--dry-run", dry_run, "Validate and print the resolved configuration");

  std::string bt_forecast, bt_model, bt_market, bt_out;
  bt->add_option("--forecast", bt_forecast, "Forecast CSV")->required()->check(CLI::ExistingFile);
  bt->add_option("--model", bt_model, "Model id (default: from the file name)");
  bt->add_option("--market", bt_market, "Market name (default: from the file name)");
  bt->add_option("--report", bt_out, "Report JSON path (default: stdout)");

  std::vector<std::string> rep_paths;
  rep->add_option("--reports", rep_paths, "Report JSON files")->required()->check(CLI::ExistingFile);

  std::size_t sim_length = 3000;
  std::string sim_out, sim_truth;
  sim->add_option("--length", sim_length)->capture_default_str();
  sim->add_option("--file", sim_out, "Output CSV")->required();
  sim->add_option("--truth", sim_truth, "Optional CSV of conditional variances and true quantiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(c, app, sim_length, sim_out, sim_truth);
    if (*bt) return cmd_backtest(c, bt_forecast, bt_model, bt_market, bt_out);
    if (*rep) return cmd_report(rep_paths, c.out);

    const auto cfg = resolve(app, c);
    if (*validate || dry_run) {
      cfg.validate();
      for (const auto& m : pipeline::load_markets(cfg)) trim_to_split(m, cfg.split);
      std::cout << pipeline::describe(cfg);
      return 0;
    }
    const auto stage = *fit ? pipeline::Stage::fit
                       : *fcst ? pipeline::Stage::forecast
                               : pipeline::Stage::full;
    return report_result(pipeline::run(cfg, stage), cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pipeline::exit_code_for(e);
  }
}
