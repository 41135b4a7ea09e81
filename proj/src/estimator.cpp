#include "orbitgrad/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitgrad/error.hpp"
#include "orbitgrad/parallel.hpp"

namespace orbitgrad {

namespace {

constexpr std::size_t kClosureCheckLimit = 24;

void check_closure(std::span<const GroupElement> elements) {
  if (elements.size() > kClosureCheckLimit) return;
  auto contains = [&](const GroupElement& g) {
    return std::any_of(elements.begin(), elements.end(),
                       [&](const GroupElement& h) { return approx_equal(g, h, 1e-9); });
  };
  for (const auto& a : elements) {
    for (const auto& b : elements) {
      if (!contains(compose(a, b))) throw Error(ErrorCode::NotAGroup, "element list is not closed under composition");
    }
  }
}

OrbitTargetEstimate finish(const Point& xt, std::vector<Point> orbit, std::vector<double> log_w) {
  auto norm = normalize_log_weights(log_w);
  OrbitTargetEstimate out;
  out.target = weighted_mean(xt, orbit, norm.weights);
  out.orbit_samples = std::move(orbit);
  out.log_weights = std::move(log_w);
  out.normalized_weights = std::move(norm.weights);
  out.ess = norm.ess;
  out.n_samples = out.orbit_samples.size();
  return out;
}

/// Enumeration order for SNIS: identity first when requested, otherwise list order.
std::vector<std::size_t> enumeration_order(const std::vector<GroupElement>& els, bool identity_first) {
  std::vector<std::size_t> order(els.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (identity_first) {
    auto it = std::find_if(order.begin(), order.end(), [&](std::size_t i) { return is_identity(els[i]); });
    std::rotate(order.begin(), it, it + 1);
  }
  return order;
}

}  // namespace

Dataset::Dataset(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::InvalidInput, "dataset must not be empty");
  for (const auto& p : points_) {
    if (p.dim() != points_.front().dim() || p.space != points_.front().space || p.dim() == 0) {
      throw Error(ErrorCode::InvalidInput, "dataset points must share one space and dimension");
    }
  }
}

Dataset Dataset::symmetrized(std::span<const GroupElement> elements) const {
  std::vector<Point> out;
  for (const auto& x : points_) {
    for (const auto& g : elements) {
      Point gx = act(g, x);
      const bool dup = std::any_of(out.begin(), out.end(), [&](const Point& p) { return distance(p, gx) < 1e-12; });
      if (!dup) out.push_back(std::move(gx));
    }
  }
  return Dataset(std::move(out));
}

NormalizedWeights normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw Error(ErrorCode::DegenerateWeights, "no weights");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(m)) throw Error(ErrorCode::DegenerateWeights, "largest log weight is not finite");
  NormalizedWeights out;
  out.weights.resize(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    out.weights[i] = std::exp(log_weights[i] - m);
    sum += out.weights[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) throw Error(ErrorCode::DegenerateWeights, "weights sum to zero");
  double sq = 0.0;
  for (double& w : out.weights) {
    w /= sum;
    sq += w * w;
  }
  out.ess = 1.0 / sq;
  return out;
}

Point weighted_mean(const Point& xt, std::span<const Point> candidates, std::span<const double> weights) {
  Point out(std::vector<double>(xt.dim(), 0.0), xt.space);
  if (xt.space == Space::Torus) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = 0; j < xt.dim(); ++j) out[j] += weights[i] * wrap_centered(candidates[i][j] - xt[j]);
    }
    for (std::size_t j = 0; j < xt.dim(); ++j) out[j] = wrap_unit(xt[j] + out[j]);
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = 0; j < xt.dim(); ++j) out[j] += weights[i] * candidates[i][j];
    }
  }
  return out;
}

OrbitTargetEstimate snis_orbit_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                                      const GroupSampler& sampler, std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "SNIS needs at least one group sample");
  std::vector<Point> orbit;
  std::vector<double> log_w;
  orbit.reserve(n);
  log_w.reserve(n);
  const auto* enumeration = std::get_if<GroupSampler::Enumeration>(&sampler.mode());
  std::vector<std::size_t> order;
  if (enumeration) order = enumeration_order(enumeration->elements, sampler.include_identity());
  for (std::size_t i = 0; i < n; ++i) {
    GroupElement g = enumeration                                  ? enumeration->elements[order[i % order.size()]]
                     : (i == 0 && sampler.include_identity()) ? sampler.identity()
                                                                  : sample(sampler, t, rng);
    orbit.push_back(act(g, x0));
    log_w.push_back(log_density(kernel, xt, orbit.back(), t) - log_density(sampler, g, t));
  }
  return finish(xt, std::move(orbit), std::move(log_w));
}

OrbitTargetEstimate exact_orbit_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                                       std::span<const GroupElement> elements) {
  if (elements.empty()) throw Error(ErrorCode::NotAGroup, "empty element list");
  check_closure(elements);
  std::vector<Point> orbit;
  std::vector<double> log_w;
  orbit.reserve(elements.size());
  log_w.reserve(elements.size());
  for (const auto& g : elements) {
    orbit.push_back(act(g, x0));
    log_w.push_back(log_density(kernel, xt, orbit.back(), t));
  }
  return finish(xt, std::move(orbit), std::move(log_w));
}

Point oracle_conditional_mean(const Dataset& dataset, const Point& xt, int t, const ForwardKernel& kernel,
                              std::span<const GroupElement> elements) {
  if (elements.empty()) throw Error(ErrorCode::NotAGroup, "empty element list");
  std::vector<Point> support;
  std::vector<double> log_w;
  for (const auto& x : dataset.points()) {
    for (const auto& g : elements) {
      support.push_back(act(g, x));
      log_w.push_back(log_density(kernel, xt, support.back(), t));
    }
  }
  return weighted_mean(xt, support, normalize_log_weights(log_w).weights);
}

CounterexampleResult counterexample_check(double alpha, double sigma, double xt, double a) {
  if (a != 1.0) throw Error(ErrorCode::InvalidInput, "the counterexample uses a translation by exactly 1");
  auto schedule = std::make_shared<const NoiseSchedule>(NoiseSchedule::from_tables({alpha}, {sigma}));
  const ForwardKernel kernel(KernelKind::Gaussian, schedule);
  const Dataset data({Point{0.0}, Point{1.0}});
  const std::vector<GroupElement> trivial{GroupElement::reflection(1)};
  const double shifted = oracle_conditional_mean(data, Point{xt + a}, 1, kernel, trivial)[0];
  const double base = oracle_conditional_mean(data, Point{xt}, 1, kernel, trivial)[0];
  return {shifted, base + a};
}

Point rb_diffusion_target(const Point& x0, const Point& xt, int t, const ForwardKernel& kernel,
                          const GroupSampler& sampler, std::size_t n, Rng& rng, const TargetMode& mode) {
  if (const auto* exact = std::get_if<ExactTarget>(&mode)) {
    return exact_orbit_target(x0, xt, t, kernel, exact->elements).target;
  }
  return snis_orbit_target(x0, xt, t, kernel, sampler, n, rng).target;
}

Point rb_flow_velocity_target(const Point& x0, const Point& x1, const Point& xt, double t,
                              const FlowCoefficients& coeffs, const Point& orbit_mean_x1) {
  const double h = coeffs.h(t), g = coeffs.g(t), f = coeffs.f(t);
  if (x1.dim() != x0.dim() || xt.dim() != x0.dim() || orbit_mean_x1.dim() != x0.dim()) {
    throw Error(ErrorCode::InvalidShape, "flow target shapes differ");
  }
  Point out(std::vector<double>(x0.dim()));
  for (std::size_t i = 0; i < x0.dim(); ++i) out[i] = h * xt[i] - g * x0[i] + f * orbit_mean_x1[i];
  return out;
}

OrbitTargetEstimate flow_endpoint_orbit_target(const Point& x0, const Point& x1, const Point& xt, double t,
                                               const FlowCoefficients& coeffs,
                                               std::span<const GroupElement> elements) {
  coeffs.check_time(t);
  // x_t - (1 - t) x_0 ~ N(t x_1, sigma^2 t (1 - t)): a one-step Gaussian kernel in x_1.
  auto schedule = std::make_shared<const NoiseSchedule>(
      NoiseSchedule::from_tables({t}, {coeffs.sigma * std::sqrt(t * (1.0 - t))}));
  const ForwardKernel kernel(KernelKind::Gaussian, schedule);
  Point shifted(std::vector<double>(xt.dim()));
  for (std::size_t i = 0; i < xt.dim(); ++i) shifted[i] = xt[i] - (1.0 - t) * x0[i];
  auto est = exact_orbit_target(x1, shifted, 1, kernel, elements);
  est.target = weighted_mean(xt, est.orbit_samples, est.normalized_weights);
  return est;
}

std::vector<OrbitTargetEstimate> batch_snis_targets(std::span<const TargetQuery> queries,
                                                    const ForwardKernel& kernel, const GroupSampler& sampler,
                                                    std::size_t n, Execution exec) {
  std::vector<OrbitTargetEstimate> out(queries.size());
  for_each_index(exec, queries.size(), [&](std::size_t i) {
    Rng rng(queries[i].seed);
    out[i] = snis_orbit_target(queries[i].x0, queries[i].xt, queries[i].t, kernel, sampler, n, rng);
  });
  return out;
}

}  // namespace orbitgrad
