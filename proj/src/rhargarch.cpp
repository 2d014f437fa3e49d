#include "varsmc/rhargarch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "nelder_mead.hpp"
#include "varsmc/errors.hpp"
#include "varsmc/rng.hpp"
#include "varsmc/stats.hpp"

namespace varsmc::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// Unconstrained coordinates <-> natural parameters.
RharGarchParams from_unconstrained(const std::vector<double>& u) {
  RharGarchParams p;
  p.mu = u[0];
  p.omega = std::exp(u[1]);
  p.beta = logistic(u[2]);
  p.gamma_d = std::exp(u[3]);
  p.gamma_w = std::exp(u[4]);
  p.gamma_m = std::exp(u[5]);
  p.xi = u[6];
  p.phi = u[7];
  p.tau1 = u[8];
  p.tau2 = u[9];
  p.sigma_u2 = std::exp(u[10]);
  return p;
}

std::vector<double> to_unconstrained(const RharGarchParams& p) {
  auto pos = [](double v) { return std::log(std::max(v, 1e-10)); };
  return {p.mu,  pos(p.omega), logit(std::clamp(p.beta, 1e-6, 1.0 - 1e-6)),
          pos(p.gamma_d), pos(p.gamma_w), pos(p.gamma_m),
          p.xi,  p.phi, p.tau1, p.tau2, pos(p.sigma_u2)};
}

}  // namespace

std::array<double, RharGarchParams::kDim> RharGarchParams::to_array() const {
  return {mu, omega, beta, gamma_d, gamma_w, gamma_m, xi, phi, tau1, tau2, sigma_u2};
}

RharGarchParams RharGarchParams::from_array(const std::array<double, kDim>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8], a[9], a[10]};
}

double rhargarch_next_variance(const RharGarchParams& p, const HarInputs& in, std::size_t t,
                               double h_t) {
  return p.omega + p.beta * h_t + p.gamma_d * in.rv_d[t] + p.gamma_w * in.rv_w[t] +
         p.gamma_m * in.rv_m[t];
}

double rhargarch_log_likelihood(const RharGarchParams& p, std::span<const double> returns,
                                const HarInputs& in, std::size_t end, double h0,
                                std::vector<double>* h_path) {
  end = std::min({end, returns.size(), in.size()});
  if (!(p.sigma_u2 > 0.0)) return -std::numeric_limits<double>::infinity();
  const std::size_t first = in.valid_from + 1;
  if (h_path) h_path->assign(end, std::numeric_limits<double>::quiet_NaN());

  const double log_su2 = std::log(p.sigma_u2);
  double ll = 0.0;
  double h = h0;
  for (std::size_t t = first; t < end; ++t) {
    h = rhargarch_next_variance(p, in, t - 1, h);
    if (!(h > 0.0) || !std::isfinite(h)) return -std::numeric_limits<double>::infinity();
    if (h_path) (*h_path)[t] = h;
    const double z = (returns[t] - p.mu) / std::sqrt(h);
    const double u = in.rv_d[t] - p.xi - p.phi * h - p.tau1 * z - p.tau2 * (z * z - 1.0);
    ll += -0.5 * (kLog2Pi + std::log(h) + z * z) - 0.5 * (kLog2Pi + log_su2 + u * u / p.sigma_u2);
  }
  return ll;
}

RharGarchFit fit_rhargarch(std::span<const double> returns, const HarInputs& inputs,
                           std::size_t end, const RharGarchOptions& options) {
  end = std::min({end, returns.size(), inputs.size()});
  if (end < kRharGarchMinLength)
    throw DataError("fit_rhargarch: need at least " + std::to_string(kRharGarchMinLength) +
                    " observations, got " + std::to_string(end));

  const auto window = returns.first(end);
  const double h0 = stats::variance(window);
  const double ybar = stats::mean(window);
  const double rv_mean = stats::mean(std::span(inputs.rv_d).first(end));
  const double rv_var = stats::variance(std::span(inputs.rv_d).first(end));

  auto objective = [&](const std::vector<double>& u) {
    const double ll = rhargarch_log_likelihood(from_unconstrained(u), returns, inputs, end, h0);
    return std::isfinite(ll) ? -ll : 1e300;
  };

  std::vector<std::vector<double>> starts;
  std::size_t max_evals = options.max_evaluations;
  if (options.warm_start) {
    starts.push_back(to_unconstrained(*options.warm_start));
  } else {
    RharGarchParams base;
    base.mu = ybar;
    base.beta = 0.5;
    base.omega = 0.1 * h0;
    base.gamma_d = base.gamma_w = base.gamma_m = 0.4 * h0 / std::max(rv_mean, 1e-8) / 3.0;
    base.xi = 0.0;
    base.phi = rv_mean / std::max(h0, 1e-8);
    base.sigma_u2 = std::max(0.5 * rv_var, 1e-6);
    starts.push_back(to_unconstrained(base));
    for (int r = 1; r < options.restarts; ++r) {
      StreamRng rng(options.seed, StreamTag::optimizer, static_cast<std::uint64_t>(r), 0);
      auto u = starts.front();
      for (double& v : u) v += 0.5 * rng.normal();
      starts.push_back(std::move(u));
    }
  }

  detail::SimplexResult best;
  std::size_t evals = 0;
  for (const auto& x0 : starts) {
    auto res = detail::nelder_mead(objective, x0, 0.1, max_evals, options.tolerance);
    evals += res.evaluations;
    if (res.value < best.value) best = std::move(res);
  }
  // Restart from the incumbent until the simplex stops improving it.
  for (int polish = 0; polish < 20; ++polish) {
    auto res = detail::nelder_mead(objective, best.x, 0.05, max_evals, options.tolerance);
    evals += res.evaluations;
    const bool improved = res.value < best.value - 1e-9 * (std::abs(best.value) + 1.0);
    if (res.value < best.value) best = std::move(res);
    if (!improved) {
      best.converged = true;
      break;
    }
  }

  RharGarchFit fit;
  fit.params = from_unconstrained(best.x);
  fit.first_day = inputs.valid_from + 1;
  fit.h0 = h0;
  fit.evaluations = evals;
  fit.converged = best.converged && std::isfinite(best.value) && best.value < 1e299;
  fit.log_likelihood = rhargarch_log_likelihood(fit.params, returns, inputs, end, h0, &fit.h_path);
  return fit;
}

RharGarchFit fit_rhargarch(const MarketSeries& series, const HarInputs& inputs,
                           const RharGarchOptions& options) {
  return fit_rhargarch(series.returns, inputs, series.size(), options);
}

std::array<double, RharGarchParams::kDim> rhargarch_standard_errors(const RharGarchFit& fit,
                                                                    std::span<const double> returns,
                                                                    const HarInputs& inputs,
                                                                    std::size_t end) {
  constexpr std::size_t d = RharGarchParams::kDim;
  const auto theta = fit.params.to_array();
  auto ll = [&](const std::array<double, d>& x) {
    return rhargarch_log_likelihood(RharGarchParams::from_array(x), returns, inputs, end, fit.h0);
  };
  std::array<double, d> step{};
  for (std::size_t i = 0; i < d; ++i) step[i] = 1e-4 * std::max(std::abs(theta[i]), 1e-2);

  Eigen::MatrixXd H(d, d);
  const double f0 = ll(theta);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      auto x = theta;
      double v;
      if (i == j) {
        x[i] = theta[i] + step[i];
        const double fp = ll(x);
        x[i] = theta[i] - step[i];
        const double fm = ll(x);
        v = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
      } else {
        auto at = [&](double si, double sj) {
          auto y = theta;
          y[i] += si * step[i];
          y[j] += sj * step[j];
          return ll(y);
        };
        v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * step[i] * step[j]);
      }
      H(i, j) = H(j, i) = v;
    }
  }
  std::array<double, d> se;
  se.fill(std::numeric_limits<double>::quiet_NaN());
  Eigen::LLT<Eigen::MatrixXd> llt(-H);
  if (llt.info() != Eigen::Success) return se;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
  for (std::size_t i = 0; i < d; ++i) se[i] = std::sqrt(cov(i, i));
  return se;
}

RharGarchSample simulate_rhargarch(const RharGarchParams& p, std::size_t n, std::uint64_t seed,
                                   double h_init) {
  RharGarchSample s;
  s.returns.resize(n);
  s.rv.resize(n);
  s.h.resize(n);
  StreamRng rng(seed, StreamTag::synthetic, 1, 0);
  const double su = std::sqrt(p.sigma_u2);
  const std::size_t burn = HarInputs::kMonth + 1;
  for (std::size_t t = 0; t < n; ++t) {
    double h = h_init;
    if (t >= burn) {
      double w = 0.0, m = 0.0;
      for (std::size_t k = t - HarInputs::kWeek; k < t; ++k) w += s.rv[k];
      for (std::size_t k = t - HarInputs::kMonth; k < t; ++k) m += s.rv[k];
      h = p.omega + p.beta * s.h[t - 1] + p.gamma_d * s.rv[t - 1] +
          p.gamma_w * w / static_cast<double>(HarInputs::kWeek) +
          p.gamma_m * m / static_cast<double>(HarInputs::kMonth);
    }
    if (!(h > 0.0) || !std::isfinite(h))
      throw NumericalError("simulate_rhargarch: conditional variance left (0, inf) at t = " +
                           std::to_string(t));
    const double z = rng.normal();
    const double u = su * rng.normal();
    s.h[t] = h;
    s.returns[t] = p.mu + std::sqrt(h) * z;
    s.rv[t] = p.xi + p.phi * h + p.tau1 * z + p.tau2 * (z * z - 1.0) + u;
  }
  return s;
}

}  // namespace varsmc::models
