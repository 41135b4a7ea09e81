#ifndef ORBITGRAD_KERNELS_HPP
#define ORBITGRAD_KERNELS_HPP

#include <memory>
#include <span>
#include <vector>

#include "orbitgrad/groups.hpp"
#include "orbitgrad/point.hpp"
#include "orbitgrad/rng.hpp"
#include "orbitgrad/schedule.hpp"

namespace orbitgrad {

enum class KernelKind { Gaussian, WrappedNormal };

/// Forward noising kernel q_t(x_t | x_0).
///  - Gaussian: N(x_t; alpha_t x_0, sigma_t^2 I) on R^d.
///  - WrappedNormal: sum_z N(x_t; x_0 + z, sigma_t^2 I) over integer shifts, on [0,1)^d.
///    No alpha scaling: scaling is not defined modulo 1.
class ForwardKernel {
 public:
  ForwardKernel(KernelKind kind, std::shared_ptr<const NoiseSchedule> schedule)
      : kind_(kind), schedule_(std::move(schedule)) {}

  [[nodiscard]] KernelKind kind() const noexcept { return kind_; }
  [[nodiscard]] const NoiseSchedule& schedule() const noexcept { return *schedule_; }
  [[nodiscard]] std::shared_ptr<const NoiseSchedule> schedule_ptr() const noexcept { return schedule_; }
  [[nodiscard]] Space space() const noexcept {
    return kind_ == KernelKind::Gaussian ? Space::Euclidean : Space::Torus;
  }
  /// Per-dimension truncation of the wrapped sum at step t.
  [[nodiscard]] int truncation(int t) const;

 private:
  KernelKind kind_;
  std::shared_ptr<const NoiseSchedule> schedule_;
};

/// Number of integer shifts kept on each side of the wrapped sum: max(3, ceil(8 sigma) + 1).
int wrapped_normal_truncation(double sigma);

/// log of the 1-D wrapped normal density at delta (any real), with shifts |z| <= z_max.
/// Normalized so that it integrates to 1 over one period.
double wrapped_normal_log_pdf(double delta, double sigma, int z_max);

/// x_t drawn from q_t(. | x0).
Point sample_forward(const ForwardKernel& kernel, const Point& x0, int t, Rng& rng);

/// The same map with the standard-normal draw supplied by the caller.
Point forward_from_noise(const ForwardKernel& kernel, const Point& x0, int t, std::span<const double> eps);

/// log q_t(x_t | x_0), exact up to the truncation of the wrapped sum.
double log_density(const ForwardKernel& kernel, const Point& xt, const Point& x0, int t);

/// Like log_density, with an explicit truncation (for checking the default policy).
double log_density_truncated(const ForwardKernel& kernel, const Point& xt, const Point& x0, int t, int z_max);

/// Marginal density of x_t when x_0 is drawn uniformly from the symmetrized dataset
/// {g o x : x in data, g in elements} and then diffused.
double symmetrize_then_diffuse_density(const ForwardKernel& kernel, std::span<const Point> data,
                                       std::span<const GroupElement> elements, const Point& xt, int t);

/// Group average of the diffused (unsymmetrized) marginal: mean_g p_t(g o x_t).
double diffuse_then_symmetrize_density(const ForwardKernel& kernel, std::span<const Point> data,
                                       std::span<const GroupElement> elements, const Point& xt, int t);

}  // namespace orbitgrad

#endif  // ORBITGRAD_KERNELS_HPP
