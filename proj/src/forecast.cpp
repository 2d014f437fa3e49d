#include "varsmc/forecast.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "varsmc/errors.hpp"
#include "varsmc/models.hpp"
#include "varsmc/rhargarch.hpp"
#include "varsmc/stats.hpp"

namespace varsmc::forecast {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

ForecastRun start_run(const MarketSeries& window, const SampleSplit& split, double alpha,
                      std::string model_id) {
  ForecastRun run;
  run.model_id = std::move(model_id);
  run.market = window.name;
  run.alpha = alpha;
  run.dates.assign(window.dates.begin() + split.in_sample_len, window.dates.end());
  run.returns.assign(window.returns.begin() + split.in_sample_len, window.returns.end());
  run.q_hat.reserve(split.out_sample_len);
  return run;
}

}  // namespace

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::rnn_har: return "rnn-har";
    case ModelKind::har: return "har";
    case ModelKind::sqrt_har: return "sqrt-har";
    case ModelKind::lev_har: return "lev-har";
    case ModelKind::rhargarch: return "rhargarch";
  }
  return "?";
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"rnn-har", "har", "lev-har", "sqrt-har", "rhargarch"};
  return names;
}

ModelKind model_from_string(std::string_view name) {
  for (auto m : {ModelKind::rnn_har, ModelKind::har, ModelKind::sqrt_har, ModelKind::lev_har,
                 ModelKind::rhargarch})
    if (name == to_string(m)) return m;
  std::string valid;
  for (const auto& n : model_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown model '" + std::string(name) + "' (valid models: " + valid + ")");
}

std::string_view to_string(RefitMode r) { return r == RefitMode::daily ? "daily" : "once"; }

RefitMode refit_from_string(std::string_view name) {
  if (name == "daily") return RefitMode::daily;
  if (name == "once") return RefitMode::once;
  throw ConfigError("refit mode must be 'daily' or 'once'");
}

ForecastRun forecast_rnn_har(const MarketSeries& series, const SampleSplit& split, double alpha,
                             const RnnHarOptions& options) {
  check_alpha(alpha);
  if (split.in_sample_len < 100) throw ConfigError("forecast_rnn_har: in-sample length must be >= 100");
  const auto t0 = std::chrono::steady_clock::now();
  const MarketSeries window = trim_to_split(series, split);
  const HarInputs inputs = build_har_inputs(window, options.window_includes_current);
  ForecastRun run = start_run(window, split, alpha, "rnn-har");
  run.seed = options.smc.seed;

  kernels::LossProblem problem{&inputs, window.returns,
                               {rnn::first_target_day(inputs), split.in_sample_len}, alpha};
  auto annealed = inference::smc_likelihood_annealing(problem, options.prior, options.smc);
  if (!annealed.trace.completed)
    throw NumericalError("likelihood annealing exhausted " + std::to_string(options.smc.max_levels) +
                         " levels at gamma = " + std::to_string(annealed.cloud.gamma));
  run.in_sample_trace = std::move(annealed.trace);
  auto& cloud = annealed.cloud;

  const std::size_t end = split.total();
  for (std::size_t day = split.in_sample_len; day < end; ++day) {
    const auto draws = inference::predict_next(cloud, inputs, options.smc.backend);
    double sum = 0.0;
    for (double q : draws) {
      if (!std::isfinite(q))
        throw NumericalError("forecast_rnn_har: non-finite particle forecast at test day " +
                             std::to_string(day - split.in_sample_len));
      sum += q;
    }
    run.q_hat.push_back(sum / static_cast<double>(draws.size()));
    run.draw_q05.push_back(stats::empirical_quantile(draws, 0.05));
    run.draw_q95.push_back(stats::empirical_quantile(draws, 0.95));
    if (options.keep_draws) run.predictive_draws.push_back(draws);

    if (day + 1 < end) {
      problem.range.end = day + 1;
      run.data_annealing_trace.push_back(
          inference::smc_data_annealing(cloud, problem, options.prior, options.smc));
    }
  }
  run.seconds = seconds_since(t0);
  return run;
}

ForecastRun forecast_baseline(const MarketSeries& series, const SampleSplit& split, double alpha,
                              ModelKind model, const BaselineOptions& options) {
  check_alpha(alpha);
  if (model == ModelKind::rnn_har) throw std::invalid_argument("forecast_baseline: rnn-har is not a baseline");
  if (split.in_sample_len < 100) throw ConfigError("forecast_baseline: in-sample length must be >= 100");
  const auto t0 = std::chrono::steady_clock::now();
  const MarketSeries window = trim_to_split(series, split);
  const HarInputs inputs = build_har_inputs(window, options.window_includes_current);
  ForecastRun run = start_run(window, split, alpha, std::string(to_string(model)));
  run.seed = options.seed;
  run.carried_forward.assign(split.out_sample_len, false);

  const double mu =
      options.zero_mean ? 0.0 : stats::mean(std::span(window.returns).first(split.in_sample_len));
  const std::size_t end = split.total();
  std::optional<double> last_q;

  if (model == ModelKind::rhargarch) {
    models::RharGarchOptions opt;
    opt.seed = options.seed;
    std::optional<models::RharGarchFit> fit;
    for (std::size_t day = split.in_sample_len; day < end; ++day) {
      const std::size_t t = day - 1;  // last observed day
      try {
        if (!fit || options.refit == RefitMode::daily) {
          if (fit) opt.warm_start = fit->params;
          fit = models::fit_rhargarch(window.returns, inputs, t + 1, opt);
        }
        std::vector<double> path;
        models::rhargarch_log_likelihood(fit->params, window.returns, inputs, t + 1, fit->h0, &path);
        const double h_next = models::rhargarch_next_variance(fit->params, inputs, t, path[t]);
        if (!(h_next > 0.0) || !std::isfinite(h_next)) throw NumericalError("non-positive variance forecast");
        last_q = fit->params.mu + stats::normal_quantile(alpha) * std::sqrt(h_next);
        run.q_hat.push_back(*last_q);
      } catch (const std::exception&) {
        if (!last_q) throw;
        run.q_hat.push_back(*last_q);
        run.carried_forward[day - split.in_sample_len] = true;
      }
    }
  } else {
    const auto variant = model == ModelKind::har        ? models::HarVariant::har
                         : model == ModelKind::sqrt_har ? models::HarVariant::sqrt_har
                                                        : models::HarVariant::lev_har;
    std::optional<models::LinearHarFit> fit;
    for (std::size_t day = split.in_sample_len; day < end; ++day) {
      const std::size_t t = day - 1;
      try {
        if (!fit || options.refit == RefitMode::daily)
          fit = models::fit_linear_har(inputs, window.rv, variant, t + 1);
        last_q = models::var_from_rv(models::forecast_rv(*fit, inputs, t), mu, alpha);
        run.q_hat.push_back(*last_q);
      } catch (const std::exception&) {
        if (!last_q) throw;
        run.q_hat.push_back(*last_q);
        run.carried_forward[day - split.in_sample_len] = true;
      }
    }
  }
  run.seconds = seconds_since(t0);
  return run;
}

void write_forecast_csv(const std::filesystem::path& path, const ForecastRun& run) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const bool quantiles = run.draw_q05.size() == run.q_hat.size() && !run.q_hat.empty();
  bool any_carried = false;
  for (bool b : run.carried_forward) any_carried = any_carried || b;

  out << "date,return,q_hat,violation";
  if (quantiles) out << ",q05,q95";
  if (any_carried) out << ",carried_forward";
  out << '\n';
  for (std::size_t i = 0; i < run.q_hat.size(); ++i) {
    out << format_iso_date(run.dates[i]) << ',' << fmt(run.returns[i]) << ',' << fmt(run.q_hat[i])
        << ',' << (run.returns[i] < run.q_hat[i] ? 1 : 0);
    if (quantiles) out << ',' << fmt(run.draw_q05[i]) << ',' << fmt(run.draw_q95[i]);
    if (any_carried) out << ',' << (run.carried_forward[i] ? 1 : 0);
    out << '\n';
  }
}

ForecastRun read_forecast_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("date,return,q_hat", 0) != 0)
    throw DataError(path.string() + ": not a forecast CSV");
  ForecastRun run;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string date, ret, q;
    std::getline(ss, date, ',');
    std::getline(ss, ret, ',');
    std::getline(ss, q, ',');
    const auto d = parse_iso_date(date);
    double r = 0.0, qv = 0.0;
    const auto ok_r = std::from_chars(ret.data(), ret.data() + ret.size(), r).ec == std::errc{};
    const auto ok_q = std::from_chars(q.data(), q.data() + q.size(), qv).ec == std::errc{};
    if (!d || !ok_r || !ok_q) throw DataError(path.string() + ": row " + std::to_string(row) + ": malformed");
    run.dates.push_back(*d);
    run.returns.push_back(r);
    run.q_hat.push_back(qv);
  }
  return run;
}

}  // namespace varsmc::forecast
