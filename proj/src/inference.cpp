#include "varsmc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "varsmc/errors.hpp"
#include "varsmc/rng.hpp"
#include "varsmc/stats.hpp"

namespace varsmc::inference {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of (sum w e^{d l})^2 / sum w^2 e^{2 d l} given normalized log-weights.
double ess_after(std::span<const double> log_w, std::span<const double> loglik, double delta) {
  double m = kNegInf;
  for (std::size_t j = 0; j < log_w.size(); ++j) m = std::max(m, log_w[j] + delta * loglik[j]);
  if (!std::isfinite(m)) return 0.0;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < log_w.size(); ++j) {
    const double e = std::exp(log_w[j] + delta * loglik[j] - m);
    s1 += e;
    s2 += e * e;
  }
  return s1 * s1 / s2;
}

std::vector<double> loglik_from_loss(const ParticleCloud& cloud, double alpha, const Prior& prior) {
  std::vector<double> ll(cloud.size());
  for (std::size_t j = 0; j < cloud.size(); ++j)
    ll[j] = log_marginal_likelihood(cloud.loss[j], cloud.n_obs(), alpha, prior.ig_shape,
                                    prior.ig_scale);
  return ll;
}

}  // namespace

void Prior::validate() const {
  if (!(recurrent_sd > 0.0) || !(beta_sd > 0.0) || !(ig_shape > 0.0) || !(ig_scale > 0.0))
    throw ConfigError("prior: standard deviations and inverse-Gamma hyperparameters must be positive");
  if (free_indices().empty()) throw ConfigError("prior: every parameter is fixed");
}

std::vector<std::size_t> Prior::free_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < kParamDim; ++k)
    if (is_free(k)) idx.push_back(k);
  return idx;
}

void SmcConfig::validate() const {
  if (particles < 2) throw ConfigError("smc: need at least 2 particles");
  if (!(ess_frac > 0.0 && ess_frac < 1.0)) throw ConfigError("smc: ESS fraction c must lie in (0, 1)");
  if (mh_steps_lik < 1 || mh_steps_data < 1) throw ConfigError("smc: MH step counts must be >= 1");
  if (max_levels < 1) throw ConfigError("smc: max_levels must be >= 1");
  if (!(jitter >= 0.0)) throw ConfigError("smc: jitter must be nonnegative");
}

double log_marginal_likelihood(double loss, std::size_t n, double alpha, double a, double b) {
  if (!std::isfinite(loss)) throw NumericalError("log_marginal_likelihood: non-finite loss");
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("log_marginal_likelihood: a, b must be positive");
  const double nd = static_cast<double>(n);
  return nd * std::log(alpha * (1.0 - alpha)) + a * std::log(b) + std::lgamma(nd + a) -
         std::lgamma(a) - (nd + a) * std::log(loss + b);
}

double log_marginal_likelihood(const ParamVector& theta, const kernels::LossProblem& problem,
                               const Prior& prior) {
  kernels::SweepOutput out;
  kernels::sweep_loss(std::span(&theta, 1), problem, out, kernels::Backend::serial);
  return log_marginal_likelihood(out.loss[0], problem.range.size(), problem.alpha, prior.ig_shape,
                                 prior.ig_scale);
}

double log_prior(const ParamVector& theta, const Prior& prior) {
  double lp = 0.0;
  for (std::size_t k = 0; k < kParamDim; ++k)
    if (prior.is_free(k)) lp += stats::normal_log_pdf(theta[k], 0.0, prior.sd(k));
  return lp;
}

double ess(std::span<const double> w) {
  double s = 0.0, s2 = 0.0;
  for (double x : w) {
    s += x;
    s2 += x * x;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("ess: weights are not normalized");
  return 1.0 / s2;
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> ParticleCloud::weights() const {
  std::vector<double> w(log_weights.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(log_weights[j]);
  return w;
}

double ParticleCloud::ess() const { return inference::ess(weights()); }

double next_temperature(const ParticleCloud& cloud, std::span<const double> loglik,
                        double target_ess) {
  if (cloud.gamma >= 1.0) throw std::logic_error("next_temperature: cloud already at gamma = 1");
  const double room = 1.0 - cloud.gamma;
  if (ess_after(cloud.log_weights, loglik, room) >= target_ess) return 1.0;

  const double floor = target_ess * (1.0 - 1e-9);
  double lo = 0.0, hi = room;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double e = ess_after(cloud.log_weights, loglik, mid);
    if (e >= floor)
      lo = mid;
    else
      hi = mid;
  }
  double g = cloud.gamma + hi;
  if (g <= cloud.gamma) g = std::nextafter(cloud.gamma, 2.0);
  return std::min(g, 1.0);
}

void reweight(ParticleCloud& cloud, std::span<const double> increments) {
  if (increments.size() != cloud.size()) throw std::invalid_argument("reweight: size mismatch");
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (std::isnan(increments[j])) throw NumericalError("reweight: NaN increment");
    cloud.log_weights[j] += increments[j];
  }
  const double z = log_sum_exp(cloud.log_weights);
  if (!std::isfinite(z)) throw NumericalError("reweight: all particle weights are zero");
  for (double& lw : cloud.log_weights) lw -= z;
}

std::vector<std::size_t> systematic_indices(std::span<const double> w, double u) {
  const std::size_t m = w.size();
  std::vector<std::size_t> idx(m);
  double cum = w[0];
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = (static_cast<double>(i) + u) / static_cast<double>(m);
    while (pos >= cum && k + 1 < m) cum += w[++k];
    idx[i] = k;
  }
  return idx;
}

void resample(ParticleCloud& cloud) {
  const auto w = cloud.weights();
  double total = 0.0;
  for (double x : w) total += x;
  if (!(std::abs(total - 1.0) < 1e-9)) throw NumericalError("resample: degenerate weights");
  StreamRng rng(cloud.seed, StreamTag::resample, cloud.level, 0);
  const auto idx = systematic_indices(w, rng.uniform());

  const std::size_t m = cloud.size();
  std::vector<ParamVector> particles(m);
  std::vector<double> loss(cloud.loss.empty() ? 0 : m);
  std::vector<rnn::HiddenState> hidden(cloud.hidden.empty() ? 0 : m);
  for (std::size_t i = 0; i < m; ++i) {
    particles[i] = cloud.particles[idx[i]];
    if (!loss.empty()) loss[i] = cloud.loss[idx[i]];
    if (!hidden.empty()) hidden[i] = cloud.hidden[idx[i]];
  }
  cloud.particles = std::move(particles);
  cloud.loss = std::move(loss);
  cloud.hidden = std::move(hidden);
  cloud.log_weights.assign(m, -std::log(static_cast<double>(m)));
}

TemperedPosterior::TemperedPosterior(const kernels::LossProblem& problem, const Prior& prior,
                                     double gamma, kernels::Backend backend)
    : problem_(problem), prior_(prior), gamma_(gamma), backend_(backend) {}

void TemperedPosterior::evaluate(std::span<const ParamVector> thetas, std::span<double> log_density,
                                 kernels::SweepOutput* aux) const {
  kernels::SweepOutput local;
  kernels::SweepOutput& out = aux ? *aux : local;
  kernels::sweep_loss(thetas, problem_, out, backend_);
  const std::size_t n = problem_.range.size();
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    if (!std::isfinite(out.loss[j])) {
      log_density[j] = kNegInf;
      continue;
    }
    const double ll = log_marginal_likelihood(out.loss[j], n, problem_.alpha, prior_.ig_shape,
                                              prior_.ig_scale);
    log_density[j] = gamma_ * ll + log_prior(thetas[j], prior_);
  }
}

double mh_accept_probability(double current, double proposed) noexcept {
  if (!std::isfinite(proposed)) return 0.0;
  if (!std::isfinite(current)) return 1.0;
  const double d = proposed - current;
  return d >= 0.0 ? 1.0 : std::exp(d);
}

MoveStats mh_move(ParticleCloud& cloud, const MoveTarget& target, int n_steps, const Prior& prior,
                  double jitter) {
  const std::size_t m = cloud.size();
  const auto free = prior.free_indices();
  const auto d = static_cast<Eigen::Index>(free.size());

  // Proposal covariance from the current (equally weighted) particles.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& p : cloud.particles)
    for (Eigen::Index k = 0; k < d; ++k) mean(k) += p[free[k]];
  mean /= static_cast<double>(m);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : cloud.particles) {
    Eigen::VectorXd x(d);
    for (Eigen::Index k = 0; k < d; ++k) x(k) = p[free[k]] - mean(k);
    cov.noalias() += x * x.transpose();
  }
  cov /= static_cast<double>(m > 1 ? m - 1 : 1);
  const double scale = 2.38 * 2.38 / static_cast<double>(d);
  Eigen::MatrixXd sigma = scale * (cov + jitter * Eigen::MatrixXd::Identity(d, d));
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  for (double extra = 1e-12; llt.info() != Eigen::Success && extra < 1.0; extra *= 100.0) {
    sigma.diagonal().array() += extra * (1.0 + sigma.diagonal().cwiseAbs().maxCoeff());
    llt.compute(sigma);
  }
  if (llt.info() != Eigen::Success || !sigma.allFinite())
    throw NumericalError("mh_move: proposal covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  std::vector<double> current(m), proposed_ld(m);
  const bool track = target.tracks_state();
  kernels::SweepOutput cur_aux, prop_aux;
  target.evaluate(cloud.particles, current, track ? &cur_aux : nullptr);
  if (track) {
    cloud.loss = cur_aux.loss;
    cloud.hidden = cur_aux.hidden;
  }

  std::vector<StreamRng> streams;
  streams.reserve(m);
  for (std::size_t j = 0; j < m; ++j) streams.emplace_back(cloud.seed, StreamTag::mh_move, cloud.level, j);

  MoveStats stats;
  stats.per_particle.assign(m, 0.0);
  std::vector<ParamVector> proposals(m);
  std::vector<double> uniforms(m);
  Eigen::VectorXd z(d);
  for (int step = 0; step < n_steps; ++step) {
    for (std::size_t j = 0; j < m; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) z(k) = streams[j].normal();
      const Eigen::VectorXd delta = chol * z;
      proposals[j] = cloud.particles[j];
      for (Eigen::Index k = 0; k < d; ++k) proposals[j][free[k]] += delta(k);
      uniforms[j] = streams[j].uniform();
    }
    target.evaluate(proposals, proposed_ld, track ? &prop_aux : nullptr);
    for (std::size_t j = 0; j < m; ++j) {
      if (uniforms[j] < mh_accept_probability(current[j], proposed_ld[j])) {
        cloud.particles[j] = proposals[j];
        current[j] = proposed_ld[j];
        if (track) {
          cloud.loss[j] = prop_aux.loss[j];
          cloud.hidden[j] = prop_aux.hidden[j];
        }
        stats.per_particle[j] += 1.0;
      }
    }
  }
  double total = 0.0;
  for (double& a : stats.per_particle) {
    a /= static_cast<double>(std::max(n_steps, 1));
    total += a;
  }
  stats.acceptance = total / static_cast<double>(m);
  return stats;
}

ParticleCloud sample_prior(const Prior& prior, const SmcConfig& config) {
  prior.validate();
  config.validate();
  ParticleCloud cloud;
  cloud.seed = config.seed;
  cloud.particles.resize(config.particles);
  for (std::size_t j = 0; j < config.particles; ++j) {
    StreamRng rng(config.seed, StreamTag::prior_draw, 0, j);
    for (std::size_t k = 0; k < kParamDim; ++k)
      cloud.particles[j][k] = prior.fixed[k] ? *prior.fixed[k] : prior.sd(k) * rng.normal();
  }
  cloud.log_weights.assign(config.particles, -std::log(static_cast<double>(config.particles)));
  return cloud;
}

AnnealingResult smc_likelihood_annealing(const kernels::LossProblem& problem, const Prior& prior,
                                         const SmcConfig& config) {
  const std::size_t n = problem.range.size();
  if (n > 0 && n < 30)
    throw ConfigError("smc_likelihood_annealing: need at least 30 observations, got " + std::to_string(n));

  AnnealingResult res;
  auto& cloud = res.cloud;
  cloud = sample_prior(prior, config);
  cloud.first_day = problem.range.first;
  cloud.horizon = problem.range.end;

  kernels::SweepOutput out;
  if (n > 0) {
    kernels::sweep_loss(cloud.particles, problem, out, config.backend);
    cloud.loss = std::move(out.loss);
    cloud.hidden = std::move(out.hidden);
  } else {
    cloud.loss.assign(cloud.size(), 0.0);
    cloud.hidden.assign(cloud.size(), rnn::HiddenState{});
  }
  auto loglik = loglik_from_loss(cloud, problem.alpha, prior);
  const double target = config.ess_frac * static_cast<double>(cloud.size());
  res.trace.levels.push_back({0, 0.0, cloud.horizon, cloud.ess(), std::numeric_limits<double>::quiet_NaN(), false});

  while (cloud.gamma < 1.0) {
    if (cloud.level >= config.max_levels) return res;  // incomplete: caller inspects trace
    const double g = next_temperature(cloud, loglik, target);
    std::vector<double> inc(cloud.size());
    for (std::size_t j = 0; j < cloud.size(); ++j) inc[j] = (g - cloud.gamma) * loglik[j];
    reweight(cloud, inc);
    cloud.gamma = g;
    ++cloud.level;

    LevelRecord rec{cloud.level, g, cloud.horizon, cloud.ess(), std::numeric_limits<double>::quiet_NaN(), false};
    if (rec.ess < target) {
      resample(cloud);
      const TemperedPosterior tp(problem, prior, g, config.backend);
      rec.acceptance = mh_move(cloud, tp, config.mh_steps_lik, prior, config.jitter).acceptance;
      rec.resampled = true;
      loglik = loglik_from_loss(cloud, problem.alpha, prior);
    }
    res.trace.levels.push_back(rec);
  }
  res.trace.completed = true;
  return res;
}

std::vector<double> predict_next(const ParticleCloud& cloud, const HarInputs& inputs,
                                 kernels::Backend backend) {
  auto hidden = cloud.hidden;
  std::vector<double> q(cloud.size());
  kernels::step_particles(cloud.particles, inputs, cloud.horizon - 1, hidden, q, backend);
  return q;
}

LevelRecord smc_data_annealing(ParticleCloud& cloud, const kernels::LossProblem& problem,
                               const Prior& prior, const SmcConfig& config) {
  const std::size_t day = cloud.horizon;
  if (problem.range.first != cloud.first_day || problem.range.end != day + 1)
    throw std::invalid_argument("smc_data_annealing: problem must extend the cloud by exactly one day");
  if (day >= problem.returns.size()) throw std::out_of_range("smc_data_annealing: no return for day");

  const std::size_t m = cloud.size();
  const std::size_t n_old = cloud.n_obs();
  std::vector<double> q(m);
  kernels::step_particles(cloud.particles, *problem.inputs, day - 1, cloud.hidden, q, config.backend);

  std::vector<double> inc(m);
  const double y = problem.returns[day];
  for (std::size_t j = 0; j < m; ++j) {
    const double s_old = cloud.loss[j];
    const double s_new = s_old + rnn::quantile_score(y, q[j], problem.alpha);
    inc[j] = log_marginal_likelihood(s_new, n_old + 1, problem.alpha, prior.ig_shape, prior.ig_scale) -
             log_marginal_likelihood(s_old, n_old, problem.alpha, prior.ig_shape, prior.ig_scale);
    cloud.loss[j] = s_new;
  }
  reweight(cloud, inc);
  cloud.horizon = day + 1;
  ++cloud.level;

  LevelRecord rec{cloud.level, cloud.gamma, cloud.horizon, cloud.ess(),
                  std::numeric_limits<double>::quiet_NaN(), false};
  if (rec.ess < config.ess_frac * static_cast<double>(m)) {
    resample(cloud);
    const TemperedPosterior tp(problem, prior, 1.0, config.backend);
    rec.acceptance = mh_move(cloud, tp, config.mh_steps_data, prior, config.jitter).acceptance;
    rec.resampled = true;
  }
  return rec;
}

void write_trace_csv(const std::filesystem::path& path, const SmcTrace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "level,gamma,horizon,ess,acceptance,resampled\n";
  for (const auto& r : trace.levels) {
    out << r.level << ',' << r.gamma << ',' << r.horizon << ',' << r.ess << ',';
    if (std::isfinite(r.acceptance)) out << r.acceptance;
    out << ',' << (r.resampled ? 1 : 0) << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParticleCloud& cloud) {
  nlohmann::json j;
  j["format"] = "varsmc-cloud-v1";
  j["gamma"] = cloud.gamma;
  j["first_day"] = cloud.first_day;
  j["horizon"] = cloud.horizon;
  j["seed"] = cloud.seed;
  j["level"] = cloud.level;
  j["particles"] = cloud.particles;
  j["log_weights"] = cloud.log_weights;
  j["loss"] = cloud.loss;
  auto& h = j["hidden"] = nlohmann::json::array();
  for (const auto& s : cloud.hidden) h.push_back({s.d, s.w, s.m});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

ParticleCloud load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "varsmc-cloud-v1") throw DataError(path.string() + ": unknown checkpoint format");
    ParticleCloud c;
    c.gamma = j.at("gamma");
    c.first_day = j.at("first_day");
    c.horizon = j.at("horizon");
    c.seed = j.at("seed");
    c.level = j.at("level");
    c.particles = j.at("particles").get<std::vector<ParamVector>>();
    c.log_weights = j.at("log_weights").get<std::vector<double>>();
    c.loss = j.at("loss").get<std::vector<double>>();
    for (const auto& s : j.at("hidden")) c.hidden.push_back({s.at(0), s.at(1), s.at(2)});
    if (c.log_weights.size() != c.size() || c.loss.size() != c.size() || c.hidden.size() != c.size())
      throw DataError(path.string() + ": inconsistent checkpoint sizes");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace varsmc::inference
