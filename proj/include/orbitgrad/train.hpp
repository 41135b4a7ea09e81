#ifndef ORBITGRAD_TRAIN_HPP
#define ORBITGRAD_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbitgrad/estimator.hpp"
#include "orbitgrad/groups.hpp"
#include "orbitgrad/kernels.hpp"
#include "orbitgrad/net.hpp"
#include "orbitgrad/parallel.hpp"

namespace orbitgrad {

/// How the regression target is formed.
///  - Baseline: x_0 ~ data, target x_0.
///  - Augment: x_0 ~ data, moved by a uniform group element, target the moved x_0.
///  - OrbDiff: x_0 ~ data, target the orbit-weighted average.
enum class Variant { Baseline, Augment, OrbDiff };

/// The symmetric learning problem: data, forward kernel and the group.
struct Problem {
  Dataset dataset;
  ForwardKernel kernel;
  GroupSampler haar;                   ///< uniform draws for augmentation and symmetrized data
  std::vector<GroupElement> elements;  ///< full enumeration of a finite group (may be empty)
};

struct TargetEstimator {
  std::string name = "orbdiff";
  Variant variant = Variant::OrbDiff;
  bool exact = true;                     ///< OrbDiff: enumerate Problem::elements instead of SNIS
  std::optional<GroupSampler> proposal;  ///< OrbDiff SNIS proposal nu_t; Problem::haar when unset
  std::size_t n_group_samples = 64;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  TargetEstimator estimator;
  int iterations = 20000;
  int batch = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  int log_every = 100;
};

struct TrainingExample {
  Point x0;
  Point xt;
  int t = 1;
  Point target;
};

/// One (x_0, t, x_t, target) draw from the item stream `seed`. A timestep t <= 0 is drawn
/// uniformly from {1..T}. Data, group, noise and SNIS draws use separate child streams,
/// so variants that share a seed share their noise.
TrainingExample draw_example(const Problem& problem, const TargetEstimator& est, int t, std::uint64_t seed);

/// Batch of draws for iteration `iteration`: item i uses derive_seed(seed, "train-item", iteration * batch + i).
std::vector<TrainingExample> draw_batch(const Problem& problem, const TargetEstimator& est, int iteration,
                                        int batch, std::uint64_t seed, Execution exec = Execution::Parallel);

/// Vector the network output is regressed onto: the target itself on R^d, the wrapped
/// displacement (target - x_t) on the torus.
std::vector<double> regression_vector(const TrainingExample& ex);

struct LossAndGrad {
  double loss = 0.0;  ///< mean over the batch of ||phi(x_t, t) - target||^2
  MlpParams grad;
};

LossAndGrad loss_and_grad(const Denoiser& net, std::span<const TrainingExample> batch, int steps);

struct LossRecord {
  int iteration = 0;
  double loss = 0.0;  ///< mean minibatch loss over the preceding logging window
};

struct TrainResult {
  Denoiser model;
  std::vector<double> losses;  ///< every minibatch loss
  std::vector<LossRecord> trace;
  bool diverged = false;       ///< a non-finite loss stopped training; model is the last finite state
  int completed = 0;
};

/// Adam on the configured loss. Deterministic given config.seed.
TrainResult train_loop(const Problem& problem, const TrainConfig& config, Denoiser init,
                       Execution exec = Execution::Parallel);

struct GradientStats {
  std::string estimator;
  int t = 0;
  int repeats = 0;
  double mean_grad_norm = 0.0;
  double grad_norm_var = 0.0;
  double mean_component_var = 0.0;
  std::vector<double> norms;
};

/// K single-draw gradients per (estimator, t) at frozen parameters. Cell (t_i, k) uses
/// derive_seed(seed, "variance-cell", i * K + k) for every estimator, so estimators are
/// compared on common random numbers.
std::vector<GradientStats> gradient_variance_sweep(const Denoiser& net, const Problem& problem,
                                                   std::span<const int> timesteps, int repeats,
                                                   std::span<const TargetEstimator> estimators, std::uint64_t seed,
                                                   Execution exec = Execution::Parallel);

/// One-sided bootstrap p-value for Var(lower) < Var(higher): the fraction of resamples in
/// which the resampled variance of `lower` is not below that of `higher`. Samples of equal
/// length are resampled jointly (paired).
double bootstrap_variance_pvalue(std::span<const double> lower, std::span<const double> higher, int resamples,
                                 std::uint64_t seed);

struct EquivarianceRecord {
  int t = 0;
  double error = 0.0;
};

/// Monte Carlo mean of RMSD(g o phi(x_t), phi(g o x_t)) per timestep, g uniform.
std::vector<EquivarianceRecord> equivariance_error(const Denoiser& net, const Problem& problem,
                                                   std::span<const int> timesteps, int probes, std::uint64_t seed,
                                                   Execution exec = Execution::Parallel);

}  // namespace orbitgrad

#endif  // ORBITGRAD_TRAIN_HPP
