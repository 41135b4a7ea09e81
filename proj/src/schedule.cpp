#include "orbitgrad/schedule.hpp"

#include <cmath>
#include <string>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

NoiseSchedule NoiseSchedule::from_tables(std::vector<double> alpha, std::vector<double> sigma) {
  if (alpha.empty() || alpha.size() != sigma.size()) {
    throw Error(ErrorCode::InvalidConfig, "alpha and sigma tables must be non-empty and equally long");
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0 && alpha[i] <= 1.0) || !(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) {
      throw Error(ErrorCode::InvalidConfig, "schedule entry " + std::to_string(i + 1) + " out of range");
    }
    if (i > 0 && (alpha[i] > alpha[i - 1] || sigma[i] < sigma[i - 1])) {
      throw Error(ErrorCode::InvalidConfig, "alpha must be non-increasing and sigma non-decreasing");
    }
  }
  alpha.insert(alpha.begin(), 1.0);
  sigma.insert(sigma.begin(), 0.0);
  return NoiseSchedule(std::move(alpha), std::move(sigma));
}

double NoiseSchedule::alpha(int t) const {
  if (t < 0 || t > steps()) throw Error(ErrorCode::InvalidTime, "timestep " + std::to_string(t) + " out of range");
  return alpha_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma(int t) const {
  if (t < 0 || t > steps()) throw Error(ErrorCode::InvalidTime, "timestep " + std::to_string(t) + " out of range");
  return sigma_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_vp_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 2) throw Error(ErrorCode::InvalidConfig, "VP schedule needs at least 2 steps");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < beta_min <= beta_max < 1");
  }
  std::vector<double> alpha(static_cast<std::size_t>(steps)), sigma(alpha.size());
  double alpha_bar = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double beta = beta_min + (beta_max - beta_min) * i / (steps - 1);
    alpha_bar *= 1.0 - beta;
    alpha[static_cast<std::size_t>(i)] = std::sqrt(alpha_bar);
    sigma[static_cast<std::size_t>(i)] = std::sqrt(1.0 - alpha_bar);
  }
  return NoiseSchedule::from_tables(std::move(alpha), std::move(sigma));
}

NoiseSchedule make_geometric_schedule(int steps, double sigma_min, double sigma_max) {
  if (steps < 2) throw Error(ErrorCode::InvalidConfig, "geometric schedule needs at least 2 steps");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < sigma_min <= sigma_max");
  }
  std::vector<double> alpha(static_cast<std::size_t>(steps), 1.0), sigma(alpha.size());
  const double ratio = std::log(sigma_max / sigma_min);
  for (int i = 0; i < steps; ++i) {
    sigma[static_cast<std::size_t>(i)] = sigma_min * std::exp(ratio * i / (steps - 1));
  }
  return NoiseSchedule::from_tables(std::move(alpha), std::move(sigma));
}

void FlowCoefficients::check_time(double t) const {
  if (!(t >= t_min && t <= 1.0 - t_min)) {
    throw Error(ErrorCode::InvalidTime, "flow time " + std::to_string(t) + " outside [t_min, 1 - t_min]");
  }
}

double FlowCoefficients::h(double t) const {
  check_time(t);
  return (1.0 - 2.0 * t) / (2.0 * sigma * t * (1.0 - t));
}

double FlowCoefficients::g(double t) const {
  check_time(t);
  return 1.0 + (1.0 - 2.0 * t) / (2.0 * sigma * t);
}

double FlowCoefficients::f(double t) const {
  check_time(t);
  return 1.0 - (1.0 - 2.0 * t) / (2.0 * sigma * (1.0 - t));
}

namespace {

void require_same_shape(const Point& a, const Point& b, std::size_t n) {
  if (a.dim() != b.dim() || a.dim() != n) throw Error(ErrorCode::InvalidShape, "flow endpoint shapes differ");
}

}  // namespace

Point flow_interpolate(const Point& x0, const Point& x1, double t, const std::vector<double>& eps,
                       const FlowCoefficients& coeffs) {
  coeffs.check_time(t);
  require_same_shape(x0, x1, eps.size());
  const double noise = coeffs.sigma * std::sqrt(t * (1.0 - t));
  Point out(std::vector<double>(x0.dim()));
  for (std::size_t i = 0; i < x0.dim(); ++i) out[i] = (1.0 - t) * x0[i] + t * x1[i] + noise * eps[i];
  return out;
}

std::vector<double> conditional_velocity(const Point& x0, const Point& x1, double t, const std::vector<double>& eps,
                                         const FlowCoefficients& coeffs) {
  coeffs.check_time(t);
  require_same_shape(x0, x1, eps.size());
  const double c = (1.0 - 2.0 * t) / (2.0 * std::sqrt(t * (1.0 - t)));
  std::vector<double> v(x0.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x1[i] - x0[i] + c * eps[i];
  return v;
}

}  // namespace orbitgrad
