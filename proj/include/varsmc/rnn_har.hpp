#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "varsmc/data.hpp"

namespace varsmc::rnn {

inline constexpr std::size_t kParamDim = 13;
using ParamVector = std::array<double, kParamDim>;

/// Flat layout of the 13 parameters:
///   [0..3]   beta0..beta3 (output layer)
///   [4..6]   daily cell   (bias, input weight, recurrent weight)
///   [7..9]   weekly cell
///   [10..12] monthly cell
enum ParamIndex : std::size_t {
  kBeta0 = 0,
  kBeta1,
  kBeta2,
  kBeta3,
  kDailyBias,
  kDailyInput,
  kDailyRecurrent,
  kWeeklyBias,
  kWeeklyInput,
  kWeeklyRecurrent,
  kMonthlyBias,
  kMonthlyInput,
  kMonthlyRecurrent,
};

/// Scalar tanh cell h' = tanh(bias + input * x + recurrent * h).
struct CellParams {
  double bias = 0.0;
  double input = 0.0;
  double recurrent = 0.0;

  double step(double x, double h) const noexcept;
};

struct RnnHarParams {
  std::array<double, 4> beta{};
  CellParams daily;
  CellParams weekly;
  CellParams monthly;

  ParamVector to_vector() const noexcept;
  static RnnHarParams from_vector(const ParamVector& v) noexcept;
  bool finite() const noexcept;
};

struct HiddenState {
  double d = 0.0;
  double w = 0.0;
  double m = 0.0;

  bool operator==(const HiddenState&) const = default;
};

/// Half-open range [first, end) of target days tau. The VaR for day tau is
/// built from realized measures observed through day tau - 1, so a range is
/// valid when first > inputs.valid_from.
struct TimeRange {
  std::size_t first = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > first ? end - first : 0; }
};

/// Smallest admissible first target day for `inputs`.
std::size_t first_target_day(const HarInputs& inputs) noexcept;

struct VarForecastPath {
  std::size_t first = 0;      ///< day index of q.front()
  std::vector<double> q;      ///< VaR_tau for tau in [first, first + q.size())
  HiddenState final_hidden;   ///< hidden state that produced q.back()
};

/// Advances the three cells with day-t inputs and returns the new state.
HiddenState advance(const RnnHarParams& p, const HarInputs& inputs, std::size_t t,
                    const HiddenState& h) noexcept;

/// VaR = beta0 + beta1 h^d + beta2 h^w + beta3 h^m.
double output(const RnnHarParams& p, const HiddenState& h) noexcept;

/// Runs the recursion over `range`. `init_hidden` is the state at day
/// range.first - 1 (zeros when absent). Throws std::out_of_range when the
/// range precedes the first valid input day or runs past the inputs.
VarForecastPath forward(const RnnHarParams& p, const HarInputs& inputs, TimeRange range,
                        std::optional<HiddenState> init_hidden = std::nullopt);

/// Check loss (y - q)(alpha - I(y < q)).
double quantile_score(double y, double q, double alpha) noexcept;

/// Sum of quantile scores of forward()'s path against returns over `range`.
double aggregate_loss(const RnnHarParams& p, const HarInputs& inputs,
                      std::span<const double> returns, TimeRange range, double alpha,
                      std::optional<HiddenState> init_hidden = std::nullopt);

}  // namespace varsmc::rnn
