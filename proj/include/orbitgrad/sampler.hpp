#ifndef ORBITGRAD_SAMPLER_HPP
#define ORBITGRAD_SAMPLER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "orbitgrad/net.hpp"
#include "orbitgrad/parallel.hpp"
#include "orbitgrad/point.hpp"
#include "orbitgrad/schedule.hpp"

namespace orbitgrad {

struct AncestralOptions {
  /// Draw samples in pairs whose second member uses the negated noise path.
  bool antithetic = false;
};

/// DDPM ancestral sampling with the x0-prediction parameterization.
/**
 * Starting from x_T ~ N(0, I), each step predicts x0_hat = phi(x_t, t / T) and draws
 * x_{t-1} from the Gaussian posterior q(x_{t-1} | x_t, x0_hat) with variance
 * beta_t (1 - abar_{t-1}) / (1 - abar_t). The final step adds no noise.
 *
 * Sample i uses the stream derive_seed(seed, "sample", i) (pairs share one stream when
 * antithetic), and samples are processed in fixed-size chunks, so results do not depend
 * on the number of threads. Throws NumericalDivergence on a non-finite state.
 */
std::vector<Point> ancestral_sample(const BatchDenoiser& denoiser, int dim, const NoiseSchedule& schedule, int n,
                                    std::uint64_t seed, AncestralOptions options = {},
                                    Execution exec = Execution::Parallel);

/// Batched velocity field: (d x n states, t) -> d x n velocities.
using VelocityField = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;

/// Forward Euler from t_min to 1 - t_min with x(t_min) ~ N(0, I).
std::vector<Point> flow_euler_sample(const VelocityField& velocity, int dim, const FlowCoefficients& coeffs,
                                     int steps, int n, std::uint64_t seed, Execution exec = Execution::Parallel);

}  // namespace orbitgrad

#endif  // ORBITGRAD_SAMPLER_HPP
