#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "varsmc/data.hpp"

namespace varsmc::models {

enum class HarVariant { har, sqrt_har, lev_har };

std::string_view to_string(HarVariant v);
HarVariant har_variant_from_string(std::string_view name);

/// Number of regression coefficients for a variant (4, 4, 7).
std::size_t coefficient_count(HarVariant v);

/// Floor applied to every RV forecast so that sqrt(F) stays defined.
inline constexpr double kRvFloor = 1e-8;

/// OLS fit of a HAR-family regression of next-day RV on day-t regressors.
///   HAR:     RV_{t+1}       ~ 1, RV_t, RV^w_t, RV^m_t
///   SqrtHAR: sqrt(RV_{t+1}) ~ 1, sqrt(RV_t), mean5 sqrt(RV), mean22 sqrt(RV)
///   LevHAR:  RV_{t+1}       ~ 1, RV_t, RV^w_t, RV^(20)_t, y_t^-, ybar5^-, ybar20^-
struct LinearHarFit {
  HarVariant variant = HarVariant::har;
  std::vector<double> coeffs;
  double residual_variance = 0.0;
  std::size_t n_obs = 0;
};

/// Regressor row of `variant` at day t (requires t >= inputs.valid_from).
std::vector<double> regressors(const HarInputs& inputs, HarVariant variant, std::size_t t);

/// Fits on regressor rows t in [inputs.valid_from, end - 1) with targets
/// targets[t + 1]; `end` defaults to the full length. Targets are RV values;
/// the square-root transform is applied internally for SqrtHAR.
/// Throws NumericalError on a rank-deficient design and DataError when there
/// are fewer than 2 * p observations.
LinearHarFit fit_linear_har(const HarInputs& inputs, std::span<const double> targets,
                            HarVariant variant, std::size_t end = static_cast<std::size_t>(-1));

/// One-step RV forecast F_{t+1} from day-t regressors, floored at kRvFloor.
double forecast_rv(const LinearHarFit& fit, const HarInputs& inputs, std::size_t t);

/// VaR = mu + Phi^{-1}(alpha) * sqrt(F). Throws std::domain_error if F <= 0.
double var_from_rv(double rv_forecast, double mu, double alpha);

}  // namespace varsmc::models
