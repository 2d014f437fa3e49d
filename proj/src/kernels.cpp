#include "varsmc/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace varsmc::kernels {

namespace {

constexpr std::size_t kBlock = 64;

void check_problem(const LossProblem& pb) {
  if (pb.inputs == nullptr) throw std::invalid_argument("sweep_loss: no inputs");
  if (pb.range.first < rnn::first_target_day(*pb.inputs))
    throw std::out_of_range("sweep_loss: range precedes the first valid target day");
  if (pb.range.end > pb.returns.size() || pb.range.end > pb.inputs->size() + 1)
    throw std::out_of_range("sweep_loss: range extends past the data");
}

void sweep_serial(std::span<const rnn::ParamVector> particles, const LossProblem& pb,
                  SweepOutput& out) {
  for (std::size_t j = 0; j < particles.size(); ++j) {
    const auto p = rnn::RnnHarParams::from_vector(particles[j]);
    const auto path = rnn::forward(p, *pb.inputs, pb.range);
    double s = 0.0;
    for (std::size_t i = 0; i < path.q.size(); ++i)
      s += rnn::quantile_score(pb.returns[pb.range.first + i], path.q[i], pb.alpha);
    out.loss[j] = s;
    out.hidden[j] = path.final_hidden;
  }
}

// One block of up to kBlock particles in structure-of-arrays layout.
void sweep_block(const rnn::ParamVector* particles, std::size_t count, const LossProblem& pb,
                 double* loss, rnn::HiddenState* hidden) {
  alignas(64) std::array<std::array<double, kBlock>, rnn::kParamDim> c{};
  alignas(64) std::array<double, kBlock> hd{}, hw{}, hm{}, s{};
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t k = 0; k < rnn::kParamDim; ++k) c[k][j] = particles[j][k];

  const auto& in = *pb.inputs;
  const double* rv_d = in.rv_d.data();
  const double* rv_w = in.rv_w.data();
  const double* rv_m = in.rv_m.data();
  const double* y = pb.returns.data();
  const double alpha = pb.alpha;

  for (std::size_t tau = pb.range.first; tau < pb.range.end; ++tau) {
    const double xd = rv_d[tau - 1], xw = rv_w[tau - 1], xm = rv_m[tau - 1], yt = y[tau];
#pragma omp simd
    for (std::size_t j = 0; j < kBlock; ++j) {
      const double d = std::tanh(c[rnn::kDailyBias][j] + c[rnn::kDailyInput][j] * xd +
                                 c[rnn::kDailyRecurrent][j] * hd[j]);
      const double w = std::tanh(c[rnn::kWeeklyBias][j] + c[rnn::kWeeklyInput][j] * xw +
                                 c[rnn::kWeeklyRecurrent][j] * hw[j]);
      const double m = std::tanh(c[rnn::kMonthlyBias][j] + c[rnn::kMonthlyInput][j] * xm +
                                 c[rnn::kMonthlyRecurrent][j] * hm[j]);
      hd[j] = d;
      hw[j] = w;
      hm[j] = m;
      const double q = c[rnn::kBeta0][j] + c[rnn::kBeta1][j] * d + c[rnn::kBeta2][j] * w +
                       c[rnn::kBeta3][j] * m;
      s[j] += (yt - q) * (alpha - (yt < q ? 1.0 : 0.0));
    }
  }
  for (std::size_t j = 0; j < count; ++j) {
    loss[j] = s[j];
    hidden[j] = {hd[j], hw[j], hm[j]};
  }
}

}  // namespace

void sweep_loss(std::span<const rnn::ParamVector> particles, const LossProblem& pb,
                SweepOutput& out, Backend backend) {
  check_problem(pb);
  out.loss.resize(particles.size());
  out.hidden.resize(particles.size());
  if (backend == Backend::serial) {
    sweep_serial(particles, pb, out);
    return;
  }
  const auto n_blocks = static_cast<std::ptrdiff_t>((particles.size() + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < n_blocks; ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * kBlock;
    const std::size_t count = std::min(kBlock, particles.size() - first);
    sweep_block(particles.data() + first, count, pb, out.loss.data() + first,
                out.hidden.data() + first);
  }
}

void step_particles(std::span<const rnn::ParamVector> particles, const HarInputs& inputs,
                    std::size_t t, std::span<rnn::HiddenState> hidden, std::span<double> q,
                    Backend backend) {
  if (hidden.size() != particles.size() || q.size() != particles.size())
    throw std::invalid_argument("step_particles: size mismatch");
  if (t < inputs.valid_from || t >= inputs.size())
    throw std::out_of_range("step_particles: day outside the valid input range");
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
  auto body = [&](std::ptrdiff_t j) {
    const auto p = rnn::RnnHarParams::from_vector(particles[j]);
    hidden[j] = rnn::advance(p, inputs, t, hidden[j]);
    q[j] = rnn::output(p, hidden[j]);
  };
  if (backend == Backend::serial) {
    for (std::ptrdiff_t j = 0; j < n; ++j) body(j);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) body(j);
}

int max_threads() noexcept { return omp_get_max_threads(); }

}  // namespace varsmc::kernels
