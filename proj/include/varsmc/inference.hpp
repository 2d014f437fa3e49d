#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "varsmc/kernels.hpp"
#include "varsmc/rnn_har.hpp"

namespace varsmc::inference {

using rnn::kParamDim;
using rnn::ParamVector;

/// Independent zero-mean normal priors on the RNN-HAR parameters and an
/// inverse-Gamma(ig_shape, ig_scale) prior on the AL scale, which is
/// integrated out. Coordinates with a `fixed` value are held at that value
/// (point-mass prior) and never proposed.
struct Prior {
  double recurrent_sd = 0.1;
  double beta_sd = 1.0;
  double ig_shape = 1.0;
  double ig_scale = 1.0;
  std::array<std::optional<double>, kParamDim> fixed{};

  void validate() const;
  double sd(std::size_t k) const noexcept { return k < 4 ? beta_sd : recurrent_sd; }
  bool is_free(std::size_t k) const noexcept { return !fixed[k].has_value(); }
  std::vector<std::size_t> free_indices() const;
};

struct SmcConfig {
  std::size_t particles = 2000;
  double ess_frac = 0.8;
  int mh_steps_lik = 10;
  int mh_steps_data = 20;
  std::size_t max_levels = 10000;
  std::uint64_t seed = 0;
  double jitter = 1e-9;
  kernels::Backend backend = kernels::Backend::parallel;

  void validate() const;
};

/// log of the product of n AL densities integrated against IG(a, b) over the
/// scale:  n log(alpha(1-alpha)) + a log b + lgamma(n+a) - lgamma(a)
///         - (n+a) log(S+b),   S = aggregate check loss.
double log_marginal_likelihood(double loss, std::size_t n, double alpha, double ig_shape,
                               double ig_scale);
double log_marginal_likelihood(const ParamVector& theta, const kernels::LossProblem& problem,
                               const Prior& prior);

double log_prior(const ParamVector& theta, const Prior& prior);

/// 1 / sum(w^2) for normalized weights; throws std::invalid_argument when
/// |sum(w) - 1| > 1e-9.
double ess(std::span<const double> weights);

/// log-sum-exp with max subtraction.
double log_sum_exp(std::span<const double> xs);

struct ParticleCloud {
  std::vector<ParamVector> particles;
  std::vector<double> log_weights;       ///< normalized: log_sum_exp == 0
  double gamma = 0.0;                    ///< likelihood-annealing temperature
  std::size_t first_day = 0;             ///< first target day of the data
  std::size_t horizon = 0;               ///< one past the last target day absorbed
  std::vector<double> loss;              ///< cached aggregate loss per particle
  std::vector<rnn::HiddenState> hidden;  ///< state after day horizon - 1
  std::uint64_t seed = 0;
  std::uint64_t level = 0;               ///< annealing step counter (RNG stream address)

  std::size_t size() const noexcept { return particles.size(); }
  std::size_t n_obs() const noexcept { return horizon > first_day ? horizon - first_day : 0; }
  std::vector<double> weights() const;
  double ess() const;
};

struct LevelRecord {
  std::uint64_t level = 0;
  double gamma = 0.0;
  std::size_t horizon = 0;
  double ess = 0.0;
  double acceptance = 0.0;  ///< mean MH acceptance, NaN when no move
  bool resampled = false;
};

struct SmcTrace {
  std::vector<LevelRecord> levels;
  bool completed = false;
};

/// Bisects the temperature increment so that reweighting by
/// (gamma_new - gamma) * loglik puts the ESS at the target, from just below;
/// returns 1 when the ESS at gamma = 1 is already >= target.
double next_temperature(const ParticleCloud& cloud, std::span<const double> loglik,
                        double target_ess);

/// Adds increments to the log-weights and renormalizes. Throws
/// NumericalError when every weight becomes zero or an increment is NaN.
void reweight(ParticleCloud& cloud, std::span<const double> increments);

/// Systematic resampling offsets for normalized weights and one uniform u in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);

/// Systematic resampling of the cloud (particles and cached state); weights reset to 1/M.
void resample(ParticleCloud& cloud);

/// Batch log-density used by the Metropolis-Hastings move.
class MoveTarget {
 public:
  virtual ~MoveTarget() = default;
  /// Fills `log_density`; when `aux` is non-null and the target tracks
  /// per-particle loss/hidden state, fills it too.
  virtual void evaluate(std::span<const ParamVector> thetas, std::span<double> log_density,
                        kernels::SweepOutput* aux) const = 0;
  virtual bool tracks_state() const noexcept { return false; }
};

/// gamma * log p(y | theta) + log p(theta) for the RNN-HAR generalized posterior.
class TemperedPosterior final : public MoveTarget {
 public:
  TemperedPosterior(const kernels::LossProblem& problem, const Prior& prior, double gamma,
                    kernels::Backend backend = kernels::Backend::parallel);
  void evaluate(std::span<const ParamVector> thetas, std::span<double> log_density,
                kernels::SweepOutput* aux) const override;
  bool tracks_state() const noexcept override { return true; }

 private:
  kernels::LossProblem problem_;
  Prior prior_;
  double gamma_;
  kernels::Backend backend_;
};

struct MoveStats {
  double acceptance = 0.0;
  std::vector<double> per_particle;  ///< fraction of accepted steps
};

/// min(1, exp(proposed - current)); 0 for a non-finite proposal.
double mh_accept_probability(double current_log_density, double proposed_log_density) noexcept;

/// Random-walk MH on the free coordinates with proposal covariance
/// (2.38^2 / d) * (particle covariance + jitter I). Streams are addressed by
/// (cloud.seed, cloud.level, particle index).
MoveStats mh_move(ParticleCloud& cloud, const MoveTarget& target, int n_steps, const Prior& prior,
                  double jitter = 1e-9);

/// M draws from the prior with uniform weights, gamma = 0.
ParticleCloud sample_prior(const Prior& prior, const SmcConfig& config);

struct AnnealingResult {
  ParticleCloud cloud;
  SmcTrace trace;
};

/// Likelihood-annealing SMC from the prior to the generalized posterior on
/// problem.range. Resample-and-move happens only when ESS < c M. The trace
/// is marked incomplete if max_levels is exhausted before gamma reaches 1.
AnnealingResult smc_likelihood_annealing(const kernels::LossProblem& problem, const Prior& prior,
                                         const SmcConfig& config);

/// Absorbs day `cloud.horizon` (problem.range.end must equal cloud.horizon + 1):
/// reweights by the exact ratio of integrated likelihoods, then resamples and
/// moves (N_data steps) when ESS < c M.
LevelRecord smc_data_annealing(ParticleCloud& cloud, const kernels::LossProblem& problem,
                               const Prior& prior, const SmcConfig& config);

/// Per-particle VaR for day cloud.horizon, from each particle's carried state.
std::vector<double> predict_next(const ParticleCloud& cloud, const HarInputs& inputs,
                                 kernels::Backend backend = kernels::Backend::parallel);

void write_trace_csv(const std::filesystem::path& path, const SmcTrace& trace);
void save_checkpoint(const std::filesystem::path& path, const ParticleCloud& cloud);
ParticleCloud load_checkpoint(const std::filesystem::path& path);

}  // namespace varsmc::inference
