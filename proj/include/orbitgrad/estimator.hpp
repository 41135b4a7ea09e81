#ifndef ORBITGRAD_ESTIMATOR_HPP
#define ORBITGRAD_ESTIMATOR_HPP

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "orbitgrad/groups.hpp"
#include "orbitgrad/kernels.hpp"
#include "orbitgrad/parallel.hpp"
#include "orbitgrad/point.hpp"
#include "orbitgrad/rng.hpp"
#include "orbitgrad/schedule.hpp"

/**
 * \file
 * \brief Orbit-weighted denoising targets.
 *
 * The regression target for a noisy point x_t produced from x_0 is the kernel-weighted
 * average of the orbit of x_0,
 *
 *   phi*(x_0, x_t, t) = sum_g (g o x_0) q_t(x_t | g o x_0) / sum_g q_t(x_t | g o x_0),
 *
 * computed exactly for finite groups or by self-normalized importance sampling over
 * group draws g ~ nu_t with weights q_t(x_t | g o x_0) / nu_t(g). All weight arithmetic
 * is done in log space.
 *
 * On the torus the weighted average is taken in the chart centred at x_t: the target is
 * x_t plus the weighted mean of the wrapped displacements (g o x_0 - x_t). This keeps the
 * target equivariant under translations.
 */

namespace orbitgrad {

/// Empirical training distribution with uniform weights 1/|D|.
class Dataset {
 public:
  /// Throws InvalidInput on an empty set or mixed dimensions/spaces.
  explicit Dataset(std::vector<Point> points);

  [[nodiscard]] const std::vector<Point>& points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return points_.front().dim(); }
  [[nodiscard]] Space space() const noexcept { return points_.front().space; }

  /// {g o x : x in D, g in elements}, with duplicates removed.
  [[nodiscard]] Dataset symmetrized(std::span<const GroupElement> elements) const;

 private:
  std::vector<Point> points_;
};

struct NormalizedWeights {
  std::vector<double> weights;
  double ess = 0.0;
};

/// Max-shifted softmax of log weights with ESS = 1 / sum(w^2).
/// Throws DegenerateWeights if the shifted sum is not a positive finite number.
NormalizedWeights normalize_log_weights(std::span<const double> log_weights);

/// Self-normalized average of candidate points (chart centred at xt on the torus).
Point weighted_mean(const Point& xt, std::span<const Point> candidates, std::span<const double> weights);

struct OrbitTargetEstimate {
  Point target;
  std::vector<Point> orbit_samples;
  std::vector<double> log_weights;  ///< unnormalized log w^(i)
  std::vector<double> normalized_weights;
  double ess = 0.0;
  std::size_t n_samples = 0;
};

/// SNIS estimate of the orbit-weighted target from N group draws.
/**
 * When the sampler asks for it, the identity takes the place of the first draw so that
 * exactly N candidates are used. Enumeration samplers are visited in order (identity
 * first), which makes the estimate deterministic and exact whenever N is a multiple of
 * the group size.
 */
OrbitTargetEstimate snis_orbit_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                                      const GroupSampler& sampler, std::size_t n, Rng& rng);

/// Exact target over a finite group. Groups with at most 24 elements are checked for
/// closure (NotAGroup).
OrbitTargetEstimate exact_orbit_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                                       std::span<const GroupElement> elements);

/// Brute-force E[x_0 | x_t] over the full symmetrized support (dataset x group).
Point oracle_conditional_mean(const Dataset& dataset, const Point& xt, int t, const ForwardKernel& kernel,
                              std::span<const GroupElement> elements);

struct CounterexampleResult {
  double lhs = 0.0;  ///< phi*(x_t + a)
  double rhs = 0.0;  ///< phi*(x_t) + a
};

/// Minimizer of the plain loss on data {0, 1} is not translation equivariant:
/// phi*(x_t + 1) < 1 < phi*(x_t) + 1. Requires a == 1.
CounterexampleResult counterexample_check(double alpha, double sigma, double xt, double a = 1.0);

struct ExactTarget {
  std::vector<GroupElement> elements;
};
struct SnisTarget {};
using TargetMode = std::variant<ExactTarget, SnisTarget>;

/// Regression target for the orbit loss. The result is a constant: no gradient flows
/// through it.
Point rb_diffusion_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                          const GroupSampler& sampler, std::size_t n, Rng& rng, const TargetMode& mode);

/// h(t) x_t - g(t) x_0 + f(t) E[x_1 | x_t].
Point rb_flow_velocity_target(const Point& x0, const Point& x1, const Point& xt, double t,
                              const FlowCoefficients& coeffs, const Point& orbit_mean_x1);

/// Exact orbit average of the data endpoint x_1 given x_t and a single x_0, under the
/// interpolant path density N(x_t; (1 - t) x_0 + t x_1, sigma^2 t (1 - t)).
OrbitTargetEstimate flow_endpoint_orbit_target(const Point& x0, const Point& x1, const Point& xt, double t,
                                               const FlowCoefficients& coeffs,
                                               std::span<const GroupElement> elements);

struct TargetQuery {
  Point x0;
  Point xt;
  int t = 1;
  std::uint64_t seed = 0;
};

/// SNIS targets for many independent queries, one derived stream per query.
std::vector<OrbitTargetEstimate> batch_snis_targets(std::span<const TargetQuery> queries,
                                                    const ForwardKernel& kernel, const GroupSampler& sampler,
                                                    std::size_t n, Execution exec = Execution::Parallel);

}  // namespace orbitgrad

#endif  // ORBITGRAD_ESTIMATOR_HPP
