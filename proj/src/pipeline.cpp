#include "varsmc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "varsmc/errors.hpp"
#include "varsmc/models.hpp"
#include "varsmc/rhargarch.hpp"
#include "varsmc/rng.hpp"

namespace varsmc::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_baseline(const std::string& m) { return m != "rnn-har"; }

std::string artifact_stem(const std::string& market, const std::string& model,
                          std::optional<double> alpha) {
  std::string s = market + "__" + model;
  if (alpha) s += "__" + alpha_tag(*alpha);
  return s;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t job_seed(std::uint64_t root, std::string_view market, std::string_view model,
                       double alpha) noexcept {
  return hash_combine(hash_combine(hash_combine(mix64(root), fnv1a(market)), fnv1a(model)),
                      std::bit_cast<std::uint64_t>(alpha));
}

std::string alpha_tag(double alpha) { return "a" + shortest(alpha); }

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e)) return 2;
  return 3;
}

void RunConfig::validate() const {
  if (models.empty()) throw ConfigError("models: at least one model is required");
  for (const auto& m : models) forecast::model_from_string(m);
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j)
      if (models[i] == models[j]) throw ConfigError("models: '" + models[i] + "' listed twice");
  if (alphas.empty()) throw ConfigError("alpha: at least one level is required");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha: " + shortest(a) + " is outside (0, 1)");
  if (data.empty() && !synthetic) throw ConfigError("data: no data path and no synthetic market");
  if (split.in_sample_len < 100) throw ConfigError("in-sample: length must be >= 100");
  if (split.out_sample_len < 1) throw ConfigError("out-sample: length must be >= 1");
  smc.validate();
  prior.validate();
  if (jobs < 1) throw ConfigError("jobs: must be >= 1");
  const bool needs_seed = std::find(models.begin(), models.end(), "rnn-har") != models.end();
  if (needs_seed && !seed) throw ConfigError("seed: required when rnn-har is among the models");
  if (synthetic) {
    synthetic->dgp.validate();
    if (synthetic->length < split.total())
      throw ConfigError("synthetic: length " + std::to_string(synthetic->length) +
                        " is shorter than the in-sample + out-sample split");
    if (!synthetic->seed && !seed) throw ConfigError("synthetic: needs --seed or an explicit DGP seed");
  }
}

json to_json(const RunConfig& c) {
  json data = json::array();
  for (const auto& p : c.data) data.push_back(p.string());
  json fixed = json::object();
  for (std::size_t k = 0; k < c.prior.fixed.size(); ++k)
    if (c.prior.fixed[k]) fixed[std::to_string(k)] = *c.prior.fixed[k];
  json j{
      {"data", data},
      {"schema",
       {{"date_column", c.schema.date_column},
        {"return_column", c.schema.return_column},
        {"price_column", c.schema.price_column},
        {"rv_column", c.schema.rv_column},
        {"delimiter", std::string(1, c.schema.delimiter)}}},
      {"models", c.models},
      {"alpha", c.alphas},
      {"in_sample", c.split.in_sample_len},
      {"out_sample", c.split.out_sample_len},
      {"smc",
       {{"particles", c.smc.particles},
        {"ess_frac", c.smc.ess_frac},
        {"mh_steps_lik", c.smc.mh_steps_lik},
        {"mh_steps_data", c.smc.mh_steps_data},
        {"max_levels", c.smc.max_levels},
        {"jitter", c.smc.jitter}}},
      {"prior",
       {{"recurrent_sd", c.prior.recurrent_sd},
        {"beta_sd", c.prior.beta_sd},
        {"ig_shape", c.prior.ig_shape},
        {"ig_scale", c.prior.ig_scale},
        {"fixed", fixed}}},
      {"out", c.out_dir.string()},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"jobs", c.jobs},
      {"refit", std::string(forecast::to_string(c.refit))},
      {"window_includes_current", c.window_includes_current},
      {"zero_mean", c.zero_mean},
      {"keep_draws", c.keep_draws},
  };
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    j["synthetic"] = {{"seed", s.seed ? json(*s.seed) : json(nullptr)},
                      {"length", s.length},
                      {"mu", s.dgp.mu},
                      {"omega", s.dgp.omega},
                      {"arch", s.dgp.arch},
                      {"garch", s.dgp.garch},
                      {"nu", s.dgp.nu},
                      {"rv_noise_sd", s.dgp.rv_noise_sd}};
  } else {
    j["synthetic"] = nullptr;
  }
  return j;
}

RunConfig config_from_json(const json& j) {
  try {
    RunConfig c;
    for (const auto& p : j.at("data")) c.data.emplace_back(p.get<std::string>());
    const auto& s = j.at("schema");
    c.schema.date_column = s.at("date_column").get<std::string>();
    c.schema.return_column = s.at("return_column").get<std::string>();
    c.schema.price_column = s.at("price_column").get<std::string>();
    c.schema.rv_column = s.at("rv_column").get<std::string>();
    const auto delim = s.at("delimiter").get<std::string>();
    if (delim.size() != 1) throw ConfigError("schema.delimiter must be one character");
    c.schema.delimiter = delim[0];
    c.models = j.at("models").get<std::vector<std::string>>();
    c.alphas = j.at("alpha").get<std::vector<double>>();
    c.split.in_sample_len = j.at("in_sample").get<std::size_t>();
    c.split.out_sample_len = j.at("out_sample").get<std::size_t>();
    const auto& m = j.at("smc");
    c.smc.particles = m.at("particles").get<std::size_t>();
    c.smc.ess_frac = m.at("ess_frac").get<double>();
    c.smc.mh_steps_lik = m.at("mh_steps_lik").get<int>();
    c.smc.mh_steps_data = m.at("mh_steps_data").get<int>();
    c.smc.max_levels = m.at("max_levels").get<std::size_t>();
    c.smc.jitter = m.at("jitter").get<double>();
    const auto& p = j.at("prior");
    c.prior.recurrent_sd = p.at("recurrent_sd").get<double>();
    c.prior.beta_sd = p.at("beta_sd").get<double>();
    c.prior.ig_shape = p.at("ig_shape").get<double>();
    c.prior.ig_scale = p.at("ig_scale").get<double>();
    for (const auto& [k, v] : p.at("fixed").items()) {
      const auto idx = std::stoul(k);
      if (idx >= c.prior.fixed.size()) throw ConfigError("prior.fixed: index out of range");
      c.prior.fixed[idx] = v.get<double>();
    }
    c.out_dir = j.at("out").get<std::string>();
    if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    c.jobs = j.at("jobs").get<int>();
    c.refit = forecast::refit_from_string(j.at("refit").get<std::string>());
    c.window_includes_current = j.at("window_includes_current").get<bool>();
    c.zero_mean = j.at("zero_mean").get<bool>();
    c.keep_draws = j.at("keep_draws").get<bool>();
    if (!j.at("synthetic").is_null()) {
      const auto& y = j.at("synthetic");
      SyntheticSpec sp;
      if (!y.at("seed").is_null()) sp.seed = y.at("seed").get<std::uint64_t>();
      sp.length = y.at("length").get<std::size_t>();
      sp.dgp.mu = y.at("mu").get<double>();
      sp.dgp.omega = y.at("omega").get<double>();
      sp.dgp.arch = y.at("arch").get<double>();
      sp.dgp.garch = y.at("garch").get<double>();
      sp.dgp.nu = y.at("nu").get<double>();
      sp.dgp.rv_noise_sd = y.at("rv_noise_sd").get<double>();
      c.synthetic = sp;
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
}

std::string config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("jobs");
  j.erase("out");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string describe(const RunConfig& c) {
  std::ostringstream os;
  os << "SMC settings\n"
     << "  particles (M)          " << c.smc.particles << '\n'
     << "  ess fraction (c)       " << c.smc.ess_frac << '\n'
     << "  MH steps, likelihood   " << c.smc.mh_steps_lik << '\n'
     << "  MH steps, data         " << c.smc.mh_steps_data << '\n'
     << "  max levels (K_max)     " << c.smc.max_levels << '\n'
     << "Prior\n"
     << "  recurrent-cell sd      " << c.prior.recurrent_sd << '\n'
     << "  output-layer sd        " << c.prior.beta_sd << '\n'
     << "  inverse-gamma (a, b)   (" << c.prior.ig_shape << ", " << c.prior.ig_scale << ")\n"
     << "Run\n";
  os << "  models                 ";
  for (std::size_t i = 0; i < c.models.size(); ++i) os << (i ? "," : "") << c.models[i];
  os << "\n  alpha                  ";
  for (std::size_t i = 0; i < c.alphas.size(); ++i) os << (i ? "," : "") << shortest(c.alphas[i]);
  os << "\n  in-sample / out-sample " << c.split.in_sample_len << " / " << c.split.out_sample_len
     << "\n  refit                  " << forecast::to_string(c.refit)
     << "\n  seed                   " << (c.seed ? std::to_string(*c.seed) : "(unset)")
     << "\n  jobs                   " << c.jobs << "\n  out                    "
     << c.out_dir.string() << '\n';
  for (const auto& p : c.data) os << "  data                   " << p.string() << '\n';
  if (c.synthetic)
    os << "  synthetic market       length " << c.synthetic->length << '\n';
  os << "  config hash            " << config_hash(c) << '\n';
  return os.str();
}

std::vector<MarketSeries> load_markets(const RunConfig& c) {
  std::vector<MarketSeries> markets;
  for (const auto& p : c.data) {
    auto s = load_market_csv(p, c.schema);
    s.name = p.stem().string();
    markets.push_back(std::move(s));
  }
  if (c.synthetic) {
    const auto seed = c.synthetic->seed.value_or(
        hash_combine(mix64(*c.seed), static_cast<std::uint64_t>(StreamTag::synthetic)));
    auto m = generate_synthetic_market(seed, c.synthetic->length, c.synthetic->dgp);
    m.series.name = "synthetic";
    markets.push_back(std::move(m.series));
  }
  for (std::size_t i = 0; i < markets.size(); ++i)
    for (std::size_t j = i + 1; j < markets.size(); ++j)
      if (markets[i].name == markets[j].name)
        throw ConfigError("data: two markets share the name '" + markets[i].name + "'");
  return markets;
}

namespace {

struct Job {
  std::size_t market = 0;
  std::string model;
  std::optional<double> alpha;
};

struct JobOutcome {
  std::vector<fs::path> artifacts;
  std::optional<backtest::BacktestReport> report;
  std::string error;
  int exit_code = 0;
  double seconds = 0.0;
};

json posterior_summary(const inference::ParticleCloud& cloud) {
  const auto w = cloud.weights();
  json mean = json::array(), sd = json::array();
  for (std::size_t k = 0; k < rnn::kParamDim; ++k) {
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      m += w[i] * cloud.particles[i][k];
      m2 += w[i] * cloud.particles[i][k] * cloud.particles[i][k];
    }
    mean.push_back(m);
    sd.push_back(std::sqrt(std::max(0.0, m2 - m * m)));
  }
  return {{"mean", mean}, {"sd", sd}};
}

json rhargarch_json(const models::RharGarchFit& fit, const std::array<double, 11>& se) {
  static const char* names[] = {"mu", "omega", "beta", "gamma_d", "gamma_w", "gamma_m",
                                "xi", "phi",   "tau1", "tau2",    "sigma_u2"};
  const auto a = fit.params.to_array();
  json params = json::object(), errors = json::object();
  for (std::size_t k = 0; k < a.size(); ++k) {
    params[names[k]] = a[k];
    errors[names[k]] = std::isfinite(se[k]) ? json(se[k]) : json(nullptr);
  }
  return {{"params", params},
          {"standard_errors", errors},
          {"log_likelihood", fit.log_likelihood},
          {"converged", fit.converged},
          {"h0", fit.h0}};
}

JobOutcome run_fit_job(const RunConfig& c, const MarketSeries& series, const Job& job,
                       std::uint64_t seed) {
  JobOutcome out;
  const fs::path rel = fs::path("fits") / (artifact_stem(series.name, job.model, job.alpha) + ".json");
  const MarketSeries window = trim_to_split(series, c.split);
  const HarInputs inputs = build_har_inputs(window, c.window_includes_current);
  const std::size_t end = c.split.in_sample_len;
  json j{{"market", series.name}, {"model", job.model}, {"seed", seed}, {"in_sample", end}};

  const auto kind = forecast::model_from_string(job.model);
  if (kind == forecast::ModelKind::rnn_har) {
    auto smc = c.smc;
    smc.seed = seed;
    kernels::LossProblem pb{&inputs, window.returns, {rnn::first_target_day(inputs), end}, *job.alpha};
    auto res = inference::smc_likelihood_annealing(pb, c.prior, smc);
    if (!res.trace.completed) throw NumericalError("likelihood annealing did not reach gamma = 1");
    const fs::path cloud_rel = fs::path("fits") / (artifact_stem(series.name, job.model, job.alpha) + ".cloud.json");
    const fs::path trace_rel = fs::path("traces") / (artifact_stem(series.name, job.model, job.alpha) + ".trace.csv");
    inference::save_checkpoint(c.out_dir / cloud_rel, res.cloud);
    inference::write_trace_csv(c.out_dir / trace_rel, res.trace);
    out.artifacts.push_back(cloud_rel);
    out.artifacts.push_back(trace_rel);
    j["alpha"] = *job.alpha;
    j["levels"] = res.trace.levels.size();
    j["posterior"] = posterior_summary(res.cloud);
  } else if (kind == forecast::ModelKind::rhargarch) {
    models::RharGarchOptions opt;
    opt.seed = seed;
    const auto fit = models::fit_rhargarch(window.returns, inputs, end, opt);
    j.update(rhargarch_json(fit, models::rhargarch_standard_errors(fit, window.returns, inputs, end)));
  } else {
    const auto variant = models::har_variant_from_string(job.model);
    const auto fit = models::fit_linear_har(inputs, window.rv, variant, end);
    j["coefficients"] = fit.coeffs;
    j["residual_variance"] = fit.residual_variance;
    j["n_obs"] = fit.n_obs;
  }
  write_json(c.out_dir / rel, j);
  out.artifacts.insert(out.artifacts.begin(), rel);
  return out;
}

JobOutcome run_forecast_job(const RunConfig& c, const MarketSeries& series, const Job& job,
                            std::uint64_t seed, bool with_backtest) {
  JobOutcome out;
  const double alpha = *job.alpha;
  const auto kind = forecast::model_from_string(job.model);
  forecast::ForecastRun fr;
  if (kind == forecast::ModelKind::rnn_har) {
    forecast::RnnHarOptions opt;
    opt.prior = c.prior;
    opt.smc = c.smc;
    opt.smc.seed = seed;
    opt.keep_draws = c.keep_draws;
    opt.window_includes_current = c.window_includes_current;
    fr = forecast::forecast_rnn_har(series, c.split, alpha, opt);
  } else {
    forecast::BaselineOptions opt;
    opt.refit = c.refit;
    opt.zero_mean = c.zero_mean;
    opt.seed = seed;
    opt.window_includes_current = c.window_includes_current;
    fr = forecast::forecast_baseline(series, c.split, alpha, kind, opt);
  }
  out.seconds = fr.seconds;
  const std::string stem = artifact_stem(series.name, job.model, alpha);
  const fs::path csv_rel = fs::path("forecasts") / (stem + ".csv");
  forecast::write_forecast_csv(c.out_dir / csv_rel, fr);
  out.artifacts.push_back(csv_rel);
  if (kind == forecast::ModelKind::rnn_har) {
    const fs::path trace_rel = fs::path("traces") / (stem + ".trace.csv");
    inference::write_trace_csv(c.out_dir / trace_rel, fr.in_sample_trace);
    out.artifacts.push_back(trace_rel);
  }
  if (with_backtest) {
    auto report = backtest::evaluate(job.model, series.name, alpha, fr.returns, fr.q_hat);
    const fs::path rep_rel = fs::path("reports") / (stem + ".json");
    backtest::write_report_json(c.out_dir / rep_rel, report);
    out.artifacts.push_back(rep_rel);
    out.report = std::move(report);
  }
  return out;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json artifact_entry(const fs::path& out_dir, const fs::path& rel, const std::string& kind) {
  std::error_code ec;
  const auto bytes = fs::file_size(out_dir / rel, ec);
  return {{"path", rel.generic_string()}, {"kind", kind}, {"bytes", ec ? 0 : bytes}};
}

std::string kind_of(const fs::path& rel) {
  const auto top = rel.begin()->string();
  if (top == "forecasts") return "forecast";
  if (top == "reports") return "report";
  if (top == "traces") return "trace";
  if (top == "fits") return "fit";
  return "comparison";
}

}  // namespace

RunResult run(const RunConfig& c, Stage stage) {
  c.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  RunResult result;
  json failures = json::array();

  fs::create_directories(c.out_dir);
  for (const char* sub : {"forecasts", "reports", "traces", "fits"})
    fs::create_directories(c.out_dir / sub);

  std::vector<MarketSeries> markets;
  std::vector<Job> jobs;
  try {
    markets = load_markets(c);
    for (const auto& m : markets) trim_to_split(m, c.split);
  } catch (const std::exception& e) {
    result.exit_code = exit_code_for(e);
    result.failures.push_back(e.what());
    failures.push_back({{"stage", "load"}, {"error", e.what()}});
  }

  for (std::size_t mi = 0; mi < markets.size(); ++mi)
    for (const auto& model : c.models) {
      if (stage == Stage::fit && is_baseline(model)) {
        jobs.push_back({mi, model, std::nullopt});
        continue;
      }
      for (double a : c.alphas) jobs.push_back({mi, model, a});
    }

  std::vector<JobOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      const auto& job = jobs[i];
      const auto& series = markets[job.market];
      const std::uint64_t seed =
          job_seed(c.seed.value_or(0), series.name, job.model, job.alpha.value_or(0.0));
      try {
        outcomes[i] = stage == Stage::fit
                          ? run_fit_job(c, series, job, seed)
                          : run_forecast_job(c, series, job, seed, stage == Stage::full);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
        outcomes[i].exit_code = exit_code_for(e);
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  json job_log = json::array();
  std::vector<json> artifact_list;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& o = outcomes[i];
    json entry{{"market", markets[job.market].name},
               {"model", job.model},
               {"alpha", job.alpha ? json(*job.alpha) : json(nullptr)},
               {"status", o.error.empty() ? "ok" : "failed"},
               {"seconds", o.seconds}};
    if (!o.error.empty()) {
      entry["error"] = o.error;
      failures.push_back({{"stage", "job"},
                          {"market", markets[job.market].name},
                          {"model", job.model},
                          {"error", o.error}});
      result.failures.push_back(markets[job.market].name + "/" + job.model + ": " + o.error);
      if (result.exit_code == 0) result.exit_code = o.exit_code;
    }
    job_log.push_back(entry);
    for (const auto& a : o.artifacts) result.artifacts.push_back(a);
  }

  if (stage == Stage::full) {
    for (double a : c.alphas) {
      std::vector<backtest::BacktestReport> reports;
      for (std::size_t i = 0; i < jobs.size(); ++i)
        if (jobs[i].alpha == a && outcomes[i].report) reports.push_back(*outcomes[i].report);
      std::size_t models_present = 0;
      for (const auto& m : c.models)
        models_present += std::any_of(reports.begin(), reports.end(),
                                      [&](const auto& r) { return r.model_id == m; });
      if (models_present < 2) continue;
      try {
        const auto table = backtest::compare(reports);
        const fs::path csv_rel = "comparison_" + alpha_tag(a) + ".csv";
        const fs::path json_rel = "comparison_" + alpha_tag(a) + ".json";
        backtest::write_comparison_csv(c.out_dir / csv_rel, table);
        write_json(c.out_dir / json_rel, backtest::to_json(table));
        result.artifacts.push_back(csv_rel);
        result.artifacts.push_back(json_rel);
      } catch (const std::exception& e) {
        failures.push_back({{"stage", "compare"}, {"alpha", a}, {"error", e.what()}});
        result.failures.push_back(e.what());
        if (result.exit_code == 0) result.exit_code = exit_code_for(e);
      }
    }
  }

  json artifacts = json::array();
  for (const auto& a : result.artifacts) artifacts.push_back(artifact_entry(c.out_dir, a, kind_of(a)));
  json markets_json = json::array();
  for (const auto& m : markets)
    markets_json.push_back({{"name", m.name}, {"rows", m.size()}});

  const char* stage_name = stage == Stage::fit ? "fit" : stage == Stage::forecast ? "forecast" : "run";
  json manifest{
      {"tool", "varsmc"},
      {"stage", stage_name},
      {"status", result.exit_code == 0 ? "ok" : "failed"},
      {"exit_code", result.exit_code},
      {"config", to_json(c)},
      {"config_hash", config_hash(c)},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"versions",
       {{"varsmc", std::string(kVersion)},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                      std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                      std::to_string(BOOST_VERSION % 100)},
        {"threads", kernels::max_threads()}}},
      {"started_at", started},
      {"wall_clock_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count()},
      {"markets", markets_json},
      {"jobs", job_log},
      {"artifacts", artifacts},
      {"failures", failures},
  };
  write_json(c.out_dir / "manifest.json", manifest);
  return result;
}

}  // namespace varsmc::pipeline
