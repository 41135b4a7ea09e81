#include "orbitgrad/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

namespace {

void require_space(const ForwardKernel& kernel, const Point& p) {
  if (p.space != kernel.space()) throw Error(ErrorCode::InvalidSpace, "point space does not match the kernel");
}


}  // namespace

int wrapped_normal_truncation(double sigma) {
  return std::max(3, static_cast<int>(std::ceil(8.0 * sigma)) + 1);
}

double wrapped_normal_log_pdf(double delta, double sigma, int z_max) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "wrapped normal needs sigma > 0");
  const double d = wrap_centered(delta);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  // |d| <= 0.5, so the z = 0 term dominates and serves as the log-sum-exp shift.
  const double lead = -d * d * inv2s2;
  double s = 0.0;
  for (int z = -z_max; z <= z_max; ++z) {
    const double r = d + z;
    s += std::exp(-r * r * inv2s2 - lead);
  }
  return lead + std::log(s) - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

int ForwardKernel::truncation(int t) const { return wrapped_normal_truncation(schedule_->sigma(t)); }

Point forward_from_noise(const ForwardKernel& kernel, const Point& x0, int t, std::span<const double> eps) {
  require_space(kernel, x0);
  if (eps.size() != x0.dim()) throw Error(ErrorCode::InvalidShape, "noise dimension mismatch");
  const double s = kernel.schedule().sigma(t);
  Point out(std::vector<double>(x0.dim()), x0.space);
  if (kernel.kind() == KernelKind::Gaussian) {
    const double a = kernel.schedule().alpha(t);
    for (std::size_t i = 0; i < x0.dim(); ++i) out[i] = a * x0[i] + s * eps[i];
  } else {
    for (std::size_t i = 0; i < x0.dim(); ++i) out[i] = wrap_unit(x0[i] + s * eps[i]);
  }
  return out;
}

Point sample_forward(const ForwardKernel& kernel, const Point& x0, int t, Rng& rng) {
  std::vector<double> eps(x0.dim());
  for (double& e : eps) e = rng.normal();
  return forward_from_noise(kernel, x0, t, eps);
}

double log_density_truncated(const ForwardKernel& kernel, const Point& xt, const Point& x0, int t, int z_max) {
  require_space(kernel, xt);
  require_space(kernel, x0);
  if (xt.dim() != x0.dim()) throw Error(ErrorCode::InvalidShape, "point dimensions differ");
  const double s = kernel.schedule().sigma(t);
  if (kernel.kind() == KernelKind::Gaussian) {
    const double a = kernel.schedule().alpha(t);
    double sq = 0.0;
    for (std::size_t i = 0; i < xt.dim(); ++i) {
      const double r = xt[i] - a * x0[i];
      sq += r * r;
    }
    return -0.5 * static_cast<double>(xt.dim()) * std::log(2.0 * std::numbers::pi * s * s) - sq / (2.0 * s * s);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < xt.dim(); ++i) total += wrapped_normal_log_pdf(xt[i] - x0[i], s, z_max);
  return total;
}

double log_density(const ForwardKernel& kernel, const Point& xt, const Point& x0, int t) {
  const int z = kernel.kind() == KernelKind::WrappedNormal ? kernel.truncation(t) : 0;
  return log_density_truncated(kernel, xt, x0, t, z);
}

double symmetrize_then_diffuse_density(const ForwardKernel& kernel, std::span<const Point> data,
                                       std::span<const GroupElement> elements, const Point& xt, int t) {
  double s = 0.0;
  for (const auto& x : data) {
    for (const auto& g : elements) s += std::exp(log_density(kernel, xt, act(g, x), t));
  }
  return s / static_cast<double>(data.size() * elements.size());
}

double diffuse_then_symmetrize_density(const ForwardKernel& kernel, std::span<const Point> data,
                                       std::span<const GroupElement> elements, const Point& xt, int t) {
  double s = 0.0;
  for (const auto& g : elements) {
    const Point gx = act(g, xt);
    for (const auto& x : data) s += std::exp(log_density(kernel, gx, x, t));
  }
  return s / static_cast<double>(data.size() * elements.size());
}

}  // namespace orbitgrad
