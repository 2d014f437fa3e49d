#include "varsmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "varsmc/errors.hpp"
#include "varsmc/stats.hpp"

namespace varsmc::models {

std::string_view to_string(HarVariant v) {
  switch (v) {
    case HarVariant::har: return "har";
    case HarVariant::sqrt_har: return "sqrt-har";
    case HarVariant::lev_har: return "lev-har";
  }
  return "?";
}

HarVariant har_variant_from_string(std::string_view name) {
  if (name == "har") return HarVariant::har;
  if (name == "sqrt-har" || name == "sqrthar") return HarVariant::sqrt_har;
  if (name == "lev-har" || name == "levhar") return HarVariant::lev_har;
  throw ConfigError("unknown HAR variant '" + std::string(name) + "'");
}

std::size_t coefficient_count(HarVariant v) { return v == HarVariant::lev_har ? 7 : 4; }

std::vector<double> regressors(const HarInputs& in, HarVariant variant, std::size_t t) {
  if (t < in.valid_from || t >= in.size())
    throw std::out_of_range("regressors: day outside the valid input range");
  switch (variant) {
    case HarVariant::har: return {1.0, in.rv_d[t], in.rv_w[t], in.rv_m[t]};
    case HarVariant::sqrt_har: return {1.0, in.sqrt_rv_d[t], in.sqrt_rv_w[t], in.sqrt_rv_m[t]};
    case HarVariant::lev_har:
      return {1.0, in.rv_d[t], in.rv_w[t], in.rv_m20[t], in.neg_ret_d[t], in.neg_ret_w[t], in.neg_ret_m[t]};
  }
  return {};
}

LinearHarFit fit_linear_har(const HarInputs& inputs, std::span<const double> targets,
                            HarVariant variant, std::size_t end) {
  end = std::min({end, inputs.size(), targets.size()});
  const std::size_t p = coefficient_count(variant);
  const std::size_t first = inputs.valid_from;
  const std::size_t n = end > first + 1 ? end - 1 - first : 0;
  if (n < 2 * p)
    throw DataError("fit_linear_har: " + std::to_string(n) + " observations, need at least " +
                    std::to_string(2 * p));

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = first + i;
    const auto row = regressors(inputs, variant, t);
    for (std::size_t k = 0; k < p; ++k) X(i, k) = row[k];
    y(i) = variant == HarVariant::sqrt_har ? std::sqrt(targets[t + 1]) : targets[t + 1];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(p))
    throw NumericalError("fit_linear_har: rank-deficient design (collinear regressors)");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;

  LinearHarFit fit;
  fit.variant = variant;
  fit.coeffs.assign(beta.data(), beta.data() + p);
  fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - p);
  fit.n_obs = n;
  return fit;
}

double forecast_rv(const LinearHarFit& fit, const HarInputs& inputs, std::size_t t) {
  const auto row = regressors(inputs, fit.variant, t);
  if (row.size() != fit.coeffs.size()) throw std::invalid_argument("forecast_rv: coefficient count mismatch");
  double pred = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) pred += fit.coeffs[k] * row[k];
  if (fit.variant == HarVariant::sqrt_har) {
    pred = std::max(pred, 0.0);
    pred *= pred;
  }
  if (!std::isfinite(pred)) throw NumericalError("forecast_rv: non-finite forecast");
  return std::max(pred, kRvFloor);
}

double var_from_rv(double rv_forecast, double mu, double alpha) {
  if (!(rv_forecast > 0.0)) throw std::domain_error("var_from_rv: RV forecast must be positive");
  return mu + stats::normal_quantile(alpha) * std::sqrt(rv_forecast);
}

}  // namespace varsmc::models
