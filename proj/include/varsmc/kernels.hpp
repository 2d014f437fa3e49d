#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "varsmc/data.hpp"
#include "varsmc/rnn_har.hpp"

// Particle sweeps: the hot loops of the SMC samplers. Each kernel has an
// OpenMP/SIMD implementation over particle blocks and a serial reference
// built on rnn::forward, kept for testing and benchmarking.
namespace varsmc::kernels {

enum class Backend { parallel, serial };

/// Data against which particles are scored: check loss of the RNN-HAR path
/// over `range`, hidden states starting from zero at range.first - 1.
struct LossProblem {
  const HarInputs* inputs = nullptr;
  std::span<const double> returns;
  rnn::TimeRange range;
  double alpha = 0.05;
};

struct SweepOutput {
  std::vector<double> loss;                ///< aggregate check loss per particle
  std::vector<rnn::HiddenState> hidden;    ///< state after the last day of the range
};

/// Aggregate loss and final hidden state for every particle.
void sweep_loss(std::span<const rnn::ParamVector> particles, const LossProblem& problem,
                SweepOutput& out, Backend backend = Backend::parallel);

/// Advances every particle's hidden state with day-t inputs and writes the
/// resulting VaR for day t + 1 into `q`.
void step_particles(std::span<const rnn::ParamVector> particles, const HarInputs& inputs,
                    std::size_t t, std::span<rnn::HiddenState> hidden, std::span<double> q,
                    Backend backend = Backend::parallel);

/// Worker threads the parallel backend will use.
int max_threads() noexcept;

}  // namespace varsmc::kernels
