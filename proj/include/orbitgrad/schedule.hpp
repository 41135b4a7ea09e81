#ifndef ORBITGRAD_SCHEDULE_HPP
#define ORBITGRAD_SCHEDULE_HPP

#include <vector>

#include "orbitgrad/point.hpp"

namespace orbitgrad {

/// Discrete-time forward-process coefficients (alpha_t, sigma_t) for t = 1..T.
/// Index 0 is the clean data (alpha = 1, sigma = 0).
class NoiseSchedule {
 public:
  /// Tables hold entries for t = 1..T. Requires alpha in (0, 1], sigma >= 0, alpha
  /// non-increasing and sigma non-decreasing; throws InvalidConfig otherwise.
  static NoiseSchedule from_tables(std::vector<double> alpha, std::vector<double> sigma);

  [[nodiscard]] int steps() const noexcept { return static_cast<int>(alpha_.size()) - 1; }
  /// t in [0, T]; throws InvalidTime outside.
  [[nodiscard]] double alpha(int t) const;
  [[nodiscard]] double sigma(int t) const;

 private:
  NoiseSchedule(std::vector<double> alpha, std::vector<double> sigma)
      : alpha_(std::move(alpha)), sigma_(std::move(sigma)) {}
  std::vector<double> alpha_;
  std::vector<double> sigma_;
};

/// Variance-preserving DDPM schedule with beta linearly spaced in [beta_min, beta_max]:
/// alpha_t = sqrt(prod_{s<=t} (1 - beta_s)), sigma_t = sqrt(1 - alpha_t^2). T >= 2.
NoiseSchedule make_vp_schedule(int steps, double beta_min = 1e-4, double beta_max = 0.02);

/// Geometric noise levels sigma_t from sigma_min to sigma_max with alpha_t = 1.
/// Used for torus diffusion, where scaling is undefined.
NoiseSchedule make_geometric_schedule(int steps, double sigma_min, double sigma_max);

/// Stochastic-interpolant coefficients for flow matching:
///   x_t = (1 - t) x0 + t x1 + sigma sqrt(t (1 - t)) eps
///   v_t = h(t) x_t - g(t) x0 + f(t) x1
struct FlowCoefficients {
  double sigma = 0.1;
  double t_min = 1e-3;

  /// Throws InvalidTime unless t in [t_min, 1 - t_min].
  void check_time(double t) const;
  [[nodiscard]] double h(double t) const;
  [[nodiscard]] double g(double t) const;
  [[nodiscard]] double f(double t) const;
};

Point flow_interpolate(const Point& x0, const Point& x1, double t, const std::vector<double>& eps,
                       const FlowCoefficients& coeffs);

/// Conditional velocity written in terms of the noise: x1 - x0 + (1 - 2t) / (2 sqrt(t (1 - t))) eps.
std::vector<double> conditional_velocity(const Point& x0, const Point& x1, double t, const std::vector<double>& eps,
                                         const FlowCoefficients& coeffs);

}  // namespace orbitgrad

#endif  // ORBITGRAD_SCHEDULE_HPP
