#include "orbitgrad/checks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "orbitgrad/error.hpp"
#include "orbitgrad/estimator.hpp"
#include "orbitgrad/kernels.hpp"
#include "orbitgrad/schedule.hpp"

namespace orbitgrad {

namespace {

CheckResult row(std::string suite, std::string name, double deviation, double tolerance) {
  return {std::move(suite), std::move(name), deviation, tolerance, std::isfinite(deviation) && deviation <= tolerance};
}

double max_abs_diff(const Point& a, const Point& b) {
  double m = 0.0;
  for (double v : displacement(a, b)) m = std::max(m, std::abs(v));
  return m;
}

const std::vector<GroupElement> trivial{GroupElement::reflection(1)};

std::shared_ptr<const NoiseSchedule> vp() { return std::make_shared<const NoiseSchedule>(make_vp_schedule(1000)); }

void estimator_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const ForwardKernel kernel(KernelKind::Gaussian, vp());
  const auto refl = reflection_group();
  Rng rng(derive_seed(seed, "check-estimator"));

  double tanh_dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int t = 1 + static_cast<int>(rng.index(1000));
    const double x = -4.0 + 8.0 * rng.uniform();
    const double a = kernel.schedule().alpha(t);
    const double s = kernel.schedule().sigma(t);
    const auto est = exact_orbit_target(Point{1.0}, Point{x}, t, kernel, refl);
    tanh_dev = std::max(tanh_dev, std::abs(est.target[0] - std::tanh(a * x / (s * s))));
  }
  out.push_back(row("estimator", "reflection target vs tanh closed form", tanh_dev, 1e-12));

  double oracle_dev = 0.0;
  const Dataset data({Point{1.0}});
  for (int i = 0; i < 200; ++i) {
    const int t = 1 + static_cast<int>(rng.index(1000));
    const Point xt{-3.0 + 6.0 * rng.uniform()};
    const auto est = exact_orbit_target(Point{1.0}, xt, t, kernel, refl);
    const Point ref = oracle_conditional_mean(data.symmetrized(refl), xt, t, kernel, trivial);
    oracle_dev = std::max(oracle_dev, max_abs_diff(est.target, ref));
  }
  out.push_back(row("estimator", "exact target vs brute-force conditional mean", oracle_dev, 1e-10));

  const ForwardKernel torus(KernelKind::WrappedNormal,
                            std::make_shared<const NoiseSchedule>(make_geometric_schedule(100, 0.01, 0.5)));
  const auto cyclic = cyclic_translations(8);
  const auto perms = all_permutations(4);
  double equi_dev = 0.0;
  for (int i = 0; i < 300; ++i) {
    const int t = 1 + static_cast<int>(rng.index(100));
    // reflection
    {
      const Point x0{2.0 * rng.uniform() - 1.0};
      const Point xt{3.0 * rng.normal()};
      const auto& g = refl[rng.index(2)];
      const auto lhs = exact_orbit_target(x0, act(g, xt), 10 * t, kernel, refl).target;
      const auto rhs = act(g, exact_orbit_target(x0, xt, 10 * t, kernel, refl).target);
      equi_dev = std::max(equi_dev, max_abs_diff(lhs, rhs));
    }
    // torus translations of order 8 acting on two atoms
    {
      const Point x0({rng.uniform(), rng.uniform()}, Space::Torus);
      const Point xt({rng.uniform(), rng.uniform()}, Space::Torus);
      const auto& g = cyclic[rng.index(cyclic.size())];
      const auto lhs = exact_orbit_target(x0, act(g, xt), t, torus, cyclic).target;
      const auto rhs = act(g, exact_orbit_target(x0, xt, t, torus, cyclic).target);
      equi_dev = std::max(equi_dev, max_abs_diff(lhs, rhs));
    }
    // permutations of 4 scalar atoms
    {
      Point x0(std::vector<double>(4)), xt(std::vector<double>(4));
      for (int j = 0; j < 4; ++j) {
        x0.x[j] = rng.normal();
        xt.x[j] = rng.normal();
      }
      const auto& g = perms[rng.index(perms.size())];
      const auto lhs = exact_orbit_target(x0, act(g, xt), 10 * t, kernel, perms).target;
      const auto rhs = act(g, exact_orbit_target(x0, xt, 10 * t, kernel, perms).target);
      equi_dev = std::max(equi_dev, max_abs_diff(lhs, rhs));
    }
  }
  out.push_back(row("estimator", "target equivariance (reflection, C8 torus, S4)", equi_dev, 1e-10));

  // SNIS over an enumeration with N a multiple of |G| reproduces the exact target.
  double snis_dev = 0.0;
  const auto enum_sampler = GroupSampler::enumeration(perms, true);
  for (int i = 0; i < 20; ++i) {
    Point x0(std::vector<double>(4)), xt(std::vector<double>(4));
    for (int j = 0; j < 4; ++j) {
      x0.x[j] = rng.normal();
      xt.x[j] = rng.normal();
    }
    const int t = 1 + static_cast<int>(rng.index(1000));
    Rng r = rng.child("snis", i);
    const auto snis = snis_orbit_target(x0, xt, t, kernel, enum_sampler, perms.size(), r);
    const auto exact = exact_orbit_target(x0, xt, t, kernel, perms);
    snis_dev = std::max(snis_dev, max_abs_diff(snis.target, exact.target));
  }
  out.push_back(row("estimator", "enumerated SNIS equals exact target", snis_dev, 1e-12));
}

void counterexample_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "check-counterexample"));
  double closed_dev = 0.0;
  double violations = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double alpha = 0.2 + 0.8 * rng.uniform();
    const double sigma = 0.2 + 1.8 * rng.uniform();
    const double xt = -1.0 + 2.0 * rng.uniform();
    const auto r = counterexample_check(alpha, sigma, xt);
    const auto logistic = [&](double x) {
      return 1.0 / (1.0 + std::exp(-alpha * (x - alpha / 2.0) / (sigma * sigma)));
    };
    closed_dev = std::max({closed_dev, std::abs(r.lhs - logistic(xt + 1.0)), std::abs(r.rhs - logistic(xt) - 1.0)});
    if (!(r.lhs < 1.0 && 1.0 < r.rhs)) violations += 1.0;
  }
  out.push_back(row("counterexample", "translation target vs logistic closed form", closed_dev, 1e-12));
  out.push_back(row("counterexample", "lhs < 1 < rhs violations", violations, 0.0));
}

void kernel_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  double mass_dev = 0.0;
  for (double s : {0.01, 0.1, 0.5}) {
    const int n = 20000;
    double sum = 0.0;
    const int z = wrapped_normal_truncation(s);
    for (int i = 0; i < n; ++i) sum += std::exp(wrapped_normal_log_pdf(static_cast<double>(i) / n, s, z));
    mass_dev = std::max(mass_dev, std::abs(sum / n - 1.0));
  }
  out.push_back(row("kernels", "wrapped normal integrates to one", mass_dev, 1e-6));

  Rng rng(derive_seed(seed, "check-kernels"));
  double trunc_dev = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double s = 0.01 + 0.99 * rng.uniform();
    const double d = rng.uniform() - 0.5;
    const double a = wrapped_normal_log_pdf(d, s, wrapped_normal_truncation(s));
    const double b = wrapped_normal_log_pdf(d, s, 100);
    trunc_dev = std::max(trunc_dev, std::abs(std::exp(a) - std::exp(b)));
  }
  out.push_back(row("kernels", "truncation policy vs Z=100", trunc_dev, 1e-12));

  const ForwardKernel torus(KernelKind::WrappedNormal,
                            std::make_shared<const NoiseSchedule>(make_geometric_schedule(100, 0.005, 0.5)));
  double inv_dev = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int t = 1 + static_cast<int>(rng.index(100));
    const Point x0({rng.uniform(), rng.uniform(), rng.uniform()}, Space::Torus);
    const Point xt({rng.uniform(), rng.uniform(), rng.uniform()}, Space::Torus);
    const auto g = GroupElement::torus_translation({rng.uniform()});
    inv_dev = std::max(inv_dev, std::abs(log_density(torus, act(g, xt), act(g, x0), t) - log_density(torus, xt, x0, t)));
  }
  out.push_back(row("kernels", "wrapped normal translation invariance", inv_dev, 1e-10));
}

void lemma_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const ForwardKernel kernel(KernelKind::Gaussian, vp());
  const auto refl = reflection_group();
  Rng rng(derive_seed(seed, "check-lemmas"));
  const std::vector<Point> data{Point{0.3}, Point{1.2}};
  double l1 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Point xt{-4.0 + 8.0 * i / 999.0};
    const int t = 1 + static_cast<int>(rng.index(1000));
    l1 = std::max(l1, std::abs(symmetrize_then_diffuse_density(kernel, data, refl, xt, t) -
                               diffuse_then_symmetrize_density(kernel, data, refl, xt, t)));
  }
  out.push_back(row("lemmas", "symmetrize and diffuse commute", l1, 1e-10));

  const Dataset sym = Dataset(data).symmetrized(refl);
  double l2 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Point xt{-4.0 + 8.0 * rng.uniform()};
    const int t = 1 + static_cast<int>(rng.index(1000));
    const auto& g = refl[1];
    const Point lhs = oracle_conditional_mean(sym, act(g, xt), t, kernel, trivial);
    const Point rhs = act(g, oracle_conditional_mean(sym, xt, t, kernel, trivial));
    l2 = std::max(l2, max_abs_diff(lhs, rhs));
  }
  out.push_back(row("lemmas", "conditional mean equivariance on symmetrized data", l2, 1e-10));
}

void flow_suite(std::vector<CheckResult>& out, std::uint64_t seed) {
  const FlowCoefficients c;
  Rng rng(derive_seed(seed, "check-flow"));
  double rel = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = c.t_min + (1.0 - 2.0 * c.t_min) * rng.uniform();
    const Point x0{rng.normal()}, x1{rng.normal()};
    const std::vector<double> eps{rng.normal()};
    const Point xt = flow_interpolate(x0, x1, t, eps, c);
    const double v = conditional_velocity(x0, x1, t, eps, c)[0];
    const double w = c.h(t) * xt[0] - c.g(t) * x0[0] + c.f(t) * x1[0];
    rel = std::max(rel, std::abs(v - w) / std::max(1.0, std::abs(v)));
  }
  out.push_back(row("flow", "velocity coefficient identity", rel, 1e-8));
}

}  // namespace

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "estimator") known = true, estimator_suite(out, seed);
  if (all || suite == "counterexample") known = true, counterexample_suite(out, seed);
  if (all || suite == "kernels") known = true, kernel_suite(out, seed);
  if (all || suite == "lemmas") known = true, lemma_suite(out, seed);
  if (all || suite == "flow") known = true, flow_suite(out, seed);
  if (!known) throw Error(ErrorCode::InvalidConfig, "unknown check suite '" + suite + "'");
  return out;
}

}  // namespace orbitgrad
