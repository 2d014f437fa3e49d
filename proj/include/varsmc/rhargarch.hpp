#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "varsmc/data.hpp"

namespace varsmc::models {

/// Realized-HAR-GARCH:
///   y_t  = mu + sqrt(h_t) z_t
///   h_t  = omega + beta h_{t-1} + gamma_d RV^d_{t-1} + gamma_w RV^w_{t-1} + gamma_m RV^m_{t-1}
///   RV_t = xi + phi h_t + tau1 z_t + tau2 (z_t^2 - 1) + u_t,   u_t ~ N(0, sigma_u2)
struct RharGarchParams {
  double mu = 0.0;
  double omega = 0.05;
  double beta = 0.5;
  double gamma_d = 0.1;
  double gamma_w = 0.1;
  double gamma_m = 0.1;
  double xi = 0.0;
  double phi = 1.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double sigma_u2 = 0.1;

  static constexpr std::size_t kDim = 11;
  std::array<double, kDim> to_array() const;
  static RharGarchParams from_array(const std::array<double, kDim>& a);
};

struct RharGarchFit {
  RharGarchParams params;
  std::vector<double> h_path;  ///< filtered h_t for t in [first_day, end); NaN before
  std::size_t first_day = 0;
  double h0 = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

struct RharGarchOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  std::size_t max_evaluations = 20000;  ///< per simplex run
  double tolerance = 1e-9;
  std::optional<RharGarchParams> warm_start;  ///< when set, a single local search from here
};

/// Minimum number of observations accepted by fit_rhargarch.
inline constexpr std::size_t kRharGarchMinLength = 250;

/// Joint Gaussian quasi-log-likelihood over days [valid_from + 1, end), with
/// h filtered from h0. Writes the filtered path when `h_path` is given.
/// Returns -inf if any h_t <= 0.
double rhargarch_log_likelihood(const RharGarchParams& p, std::span<const double> returns,
                                const HarInputs& inputs, std::size_t end, double h0,
                                std::vector<double>* h_path = nullptr);

/// Quasi-ML fit by Nelder-Mead on a positivity-preserving reparameterization
/// (log for omega, gammas and sigma_u2; logit for beta). h0 is the sample
/// variance of returns[0, end).
RharGarchFit fit_rhargarch(std::span<const double> returns, const HarInputs& inputs,
                           std::size_t end = static_cast<std::size_t>(-1),
                           const RharGarchOptions& options = {});
RharGarchFit fit_rhargarch(const MarketSeries& series, const HarInputs& inputs,
                           const RharGarchOptions& options = {});

/// h_{t+1} from the filtered h_t and day-t realized aggregates.
double rhargarch_next_variance(const RharGarchParams& p, const HarInputs& inputs, std::size_t t,
                               double h_t);

/// Asymptotic standard errors from the inverse observed information (central
/// finite-difference Hessian in the natural parameterization). NaN entries
/// where the Hessian is not negative definite.
std::array<double, RharGarchParams::kDim> rhargarch_standard_errors(const RharGarchFit& fit,
                                                                    std::span<const double> returns,
                                                                    const HarInputs& inputs,
                                                                    std::size_t end);

struct RharGarchSample {
  std::vector<double> returns;
  std::vector<double> rv;
  std::vector<double> h;
};

/// Simulates the model forward. The first 22 days use h = h_init and RV drawn
/// from the measurement equation so that the HAR aggregates are defined.
RharGarchSample simulate_rhargarch(const RharGarchParams& p, std::size_t n, std::uint64_t seed,
                                   double h_init);

}  // namespace varsmc::models
