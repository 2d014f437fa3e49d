#include "varsmc/rnn_har.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace varsmc::rnn {

double CellParams::step(double x, double h) const noexcept {
  return std::tanh(bias + input * x + recurrent * h);
}

ParamVector RnnHarParams::to_vector() const noexcept {
  return {beta[0],        beta[1],      beta[2],           beta[3],
          daily.bias,     daily.input,  daily.recurrent,   weekly.bias,
          weekly.input,   weekly.recurrent, monthly.bias,  monthly.input,
          monthly.recurrent};
}

RnnHarParams RnnHarParams::from_vector(const ParamVector& v) noexcept {
  RnnHarParams p;
  p.beta = {v[kBeta0], v[kBeta1], v[kBeta2], v[kBeta3]};
  p.daily = {v[kDailyBias], v[kDailyInput], v[kDailyRecurrent]};
  p.weekly = {v[kWeeklyBias], v[kWeeklyInput], v[kWeeklyRecurrent]};
  p.monthly = {v[kMonthlyBias], v[kMonthlyInput], v[kMonthlyRecurrent]};
  return p;
}

bool RnnHarParams::finite() const noexcept {
  for (double x : to_vector())
    if (!std::isfinite(x)) return false;
  return true;
}

std::size_t first_target_day(const HarInputs& inputs) noexcept { return inputs.valid_from + 1; }

HiddenState advance(const RnnHarParams& p, const HarInputs& in, std::size_t t,
                    const HiddenState& h) noexcept {
  return {p.daily.step(in.rv_d[t], h.d), p.weekly.step(in.rv_w[t], h.w),
          p.monthly.step(in.rv_m[t], h.m)};
}

double output(const RnnHarParams& p, const HiddenState& h) noexcept {
  return p.beta[0] + p.beta[1] * h.d + p.beta[2] * h.w + p.beta[3] * h.m;
}

namespace {

void check_range(const HarInputs& inputs, TimeRange range) {
  if (range.first < first_target_day(inputs))
    throw std::out_of_range("rnn forward: range starts at day " + std::to_string(range.first) +
                            " before first valid target day " +
                            std::to_string(first_target_day(inputs)));
  if (range.end > inputs.size() + 1)
    throw std::out_of_range("rnn forward: range extends past the inputs");
}

}  // namespace

VarForecastPath forward(const RnnHarParams& p, const HarInputs& inputs, TimeRange range,
                        std::optional<HiddenState> init_hidden) {
  check_range(inputs, range);
  VarForecastPath path;
  path.first = range.first;
  path.q.reserve(range.size());
  HiddenState h = init_hidden.value_or(HiddenState{});
  for (std::size_t tau = range.first; tau < range.end; ++tau) {
    h = advance(p, inputs, tau - 1, h);
    path.q.push_back(output(p, h));
  }
  path.final_hidden = h;
  return path;
}

double quantile_score(double y, double q, double alpha) noexcept {
  return (y - q) * (alpha - (y < q ? 1.0 : 0.0));
}

double aggregate_loss(const RnnHarParams& p, const HarInputs& inputs,
                      std::span<const double> returns, TimeRange range, double alpha,
                      std::optional<HiddenState> init_hidden) {
  if (range.end > returns.size()) throw std::out_of_range("aggregate_loss: range past returns");
  const auto path = forward(p, inputs, range, init_hidden);
  double s = 0.0;
  for (std::size_t i = 0; i < path.q.size(); ++i)
    s += quantile_score(returns[range.first + i], path.q[i], alpha);
  return s;
}

}  // namespace varsmc::rnn
