#include "orbitgrad/train.hpp"

#include <cmath>
#include <numeric>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

namespace {

/// Point the network output stands for: phi itself on R^d, x_t + phi on the torus.
Point denoised_point(const std::vector<double>& out, const Point& xt) {
  Point p(out, xt.space);
  if (xt.space == Space::Torus) {
    for (std::size_t i = 0; i < p.dim(); ++i) p[i] = wrap_unit(xt[i] + out[i]);
  }
  return p;
}

double sample_variance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / (n - 1.0);
}

}  // namespace

TrainingExample draw_example(const Problem& problem, const TargetEstimator& est, int t, std::uint64_t seed) {
  const Rng root(seed);
  const int steps = problem.kernel.schedule().steps();
  if (t <= 0) t = static_cast<int>(root.child("time").index(static_cast<std::size_t>(steps))) + 1;
  if (t > steps) throw Error(ErrorCode::InvalidTime, "timestep beyond the schedule");

  Rng data = root.child("data");
  TrainingExample ex;
  ex.t = t;
  ex.x0 = problem.dataset.points()[data.index(problem.dataset.size())];
  if (est.variant == Variant::Augment) {
    Rng group = root.child("group");
    ex.x0 = act(sample(problem.haar, t, group), ex.x0);
  }
  Rng noise = root.child("noise");
  ex.xt = sample_forward(problem.kernel, ex.x0, t, noise);

  if (est.variant == Variant::OrbDiff) {
    Rng snis = root.child("snis");
    TargetMode mode = SnisTarget{};
    if (est.exact) {
      if (problem.elements.empty()) throw Error(ErrorCode::InvalidConfig, "exact targets need an enumerated group");
      mode = ExactTarget{problem.elements};
    }
    ex.target = rb_diffusion_target(ex.x0, ex.xt, t, problem.kernel, est.proposal.value_or(problem.haar),
                                    est.n_group_samples, snis, mode);
  } else {
    ex.target = ex.x0;
  }
  return ex;
}

std::vector<TrainingExample> draw_batch(const Problem& problem, const TargetEstimator& est, int iteration,
                                        int batch, std::uint64_t seed, Execution exec) {
  std::vector<TrainingExample> out(static_cast<std::size_t>(batch));
  const auto base = static_cast<std::uint64_t>(iteration) * static_cast<std::uint64_t>(batch);
  for_each_index(exec, out.size(), [&](std::size_t i) {
    out[i] = draw_example(problem, est, 0, derive_seed(seed, "train-item", base + i));
  });
  return out;
}

std::vector<double> regression_vector(const TrainingExample& ex) {
  if (ex.xt.space == Space::Torus) return displacement(ex.target, ex.xt);
  return ex.target.x;
}

LossAndGrad loss_and_grad(const Denoiser& net, std::span<const TrainingExample> batch, int steps) {
  if (batch.empty()) throw Error(ErrorCode::InvalidInput, "empty batch");
  const auto d = static_cast<Eigen::Index>(net.dim());
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(d, n), y(d, n);
  Eigen::VectorXd tn(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& ex = batch[static_cast<std::size_t>(j)];
    if (static_cast<Eigen::Index>(ex.xt.dim()) != d) throw Error(ErrorCode::InvalidShape, "example dimension");
    const auto target = regression_vector(ex);
    for (Eigen::Index i = 0; i < d; ++i) {
      x(i, j) = ex.xt[static_cast<std::size_t>(i)];
      y(i, j) = target[static_cast<std::size_t>(i)];
    }
    tn(j) = static_cast<double>(ex.t) / steps;
  }
  const Eigen::MatrixXd residual = net.forward(x, tn) - y;
  LossAndGrad out{residual.squaredNorm() / static_cast<double>(n), {}};
  out.grad = net.backward(x, tn, (2.0 / static_cast<double>(n)) * residual);
  return out;
}

TrainResult train_loop(const Problem& problem, const TrainConfig& config, Denoiser init, Execution exec) {
  if (config.iterations < 0 || config.batch < 1 || config.estimator.n_group_samples < 1 || config.log_every < 1) {
    throw Error(ErrorCode::InvalidConfig, "iterations >= 0, batch >= 1, group samples >= 1 and log_every >= 1");
  }
  TrainResult result{std::move(init), {}, {}, false, 0};
  Eigen::VectorXd theta = result.model.params().flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  const auto& adam = config.adam;
  const int steps = problem.kernel.schedule().steps();
  double window = 0.0;
  result.losses.reserve(static_cast<std::size_t>(config.iterations));

  for (int it = 0; it < config.iterations; ++it) {
    const auto batch = draw_batch(problem, config.estimator, it, config.batch, config.seed, exec);
    const auto lg = loss_and_grad(result.model, batch, steps);
    const Eigen::VectorXd g = lg.grad.flatten();
    if (!std::isfinite(lg.loss) || !g.allFinite()) {
      result.diverged = true;
      break;
    }
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(adam.beta1, it + 1);
    const double c2 = 1.0 - std::pow(adam.beta2, it + 1);
    const Eigen::VectorXd next =
        theta - adam.lr * ((m / c1).array() / ((v / c2).array().sqrt() + adam.eps)).matrix();
    if (!next.allFinite()) {
      result.diverged = true;
      break;
    }
    theta = next;
    result.model.params().assign(theta);
    result.losses.push_back(lg.loss);
    result.completed = it + 1;
    window += lg.loss;
    if ((it + 1) % config.log_every == 0) {
      result.trace.push_back({it + 1, window / config.log_every});
      window = 0.0;
    }
  }
  return result;
}

std::vector<GradientStats> gradient_variance_sweep(const Denoiser& net, const Problem& problem,
                                                   std::span<const int> timesteps, int repeats,
                                                   std::span<const TargetEstimator> estimators, std::uint64_t seed,
                                                   Execution exec) {
  if (repeats < 2) throw Error(ErrorCode::InvalidConfig, "variance needs at least 2 repeats");
  const int steps = problem.kernel.schedule().steps();
  const auto k_count = static_cast<std::size_t>(repeats);
  std::vector<GradientStats> out;
  for (const auto& est : estimators) {
    for (std::size_t ti = 0; ti < timesteps.size(); ++ti) {
      const int t = timesteps[ti];
      const auto p = static_cast<Eigen::Index>(net.params().size());
      Eigen::MatrixXd grads(p, static_cast<Eigen::Index>(k_count));
      for_each_index(exec, k_count, [&](std::size_t k) {
        const auto ex = draw_example(problem, est, t, derive_seed(seed, "variance-cell", ti * k_count + k));
        grads.col(static_cast<Eigen::Index>(k)) = loss_and_grad(net, std::span(&ex, 1), steps).grad.flatten();
      });
      GradientStats s;
      s.estimator = est.name;
      s.t = t;
      s.repeats = repeats;
      s.norms.resize(k_count);
      for (std::size_t k = 0; k < k_count; ++k) s.norms[k] = grads.col(static_cast<Eigen::Index>(k)).norm();
      s.mean_grad_norm = std::accumulate(s.norms.begin(), s.norms.end(), 0.0) / static_cast<double>(k_count);
      s.grad_norm_var = sample_variance(s.norms);
      const Eigen::VectorXd mean = grads.rowwise().mean();
      const Eigen::MatrixXd centered = grads.colwise() - mean;
      s.mean_component_var = centered.squaredNorm() / (static_cast<double>(k_count) - 1.0) / static_cast<double>(p);
      out.push_back(std::move(s));
    }
  }
  return out;
}

double bootstrap_variance_pvalue(std::span<const double> lower, std::span<const double> higher, int resamples,
                                 std::uint64_t seed) {
  if (lower.size() < 2 || higher.size() < 2 || resamples < 1) {
    throw Error(ErrorCode::InvalidInput, "bootstrap needs at least two samples per side");
  }
  const bool paired = lower.size() == higher.size();
  Rng rng(seed);
  std::vector<double> a(lower.size()), b(higher.size());
  int not_below = 0;
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = rng.index(a.size());
      a[i] = lower[j];
      if (paired) b[i] = higher[j];
    }
    if (!paired) {
      for (double& x : b) x = higher[rng.index(higher.size())];
    }
    if (sample_variance(a) >= sample_variance(b)) ++not_below;
  }
  return (1.0 + not_below) / (1.0 + resamples);
}

std::vector<EquivarianceRecord> equivariance_error(const Denoiser& net, const Problem& problem,
                                                   std::span<const int> timesteps, int probes, std::uint64_t seed,
                                                   Execution exec) {
  if (probes < 1) throw Error(ErrorCode::InvalidConfig, "need at least one probe");
  const int steps = problem.kernel.schedule().steps();
  const auto m_count = static_cast<std::size_t>(probes);
  const TargetEstimator symmetrized{"probe", Variant::Augment, false, std::nullopt, 1};
  std::vector<EquivarianceRecord> out;
  for (std::size_t ti = 0; ti < timesteps.size(); ++ti) {
    const int t = timesteps[ti];
    const double tn = static_cast<double>(t) / steps;
    std::vector<double> errors(m_count);
    for_each_index(exec, m_count, [&](std::size_t m) {
      const std::uint64_t cell = derive_seed(seed, "equivariance", ti * m_count + m);
      const auto ex = draw_example(problem, symmetrized, t, cell);
      Rng probe = Rng(cell).child("probe-group");
      const GroupElement g = sample(problem.haar, t, probe);
      const Point gxt = act(g, ex.xt);
      const Point a = act(g, denoised_point(net.forward(ex.xt.x, tn), ex.xt));
      const Point b = denoised_point(net.forward(gxt.x, tn), gxt);
      errors[m] = distance(a, b) / std::sqrt(static_cast<double>(a.dim()));
    });
    out.push_back({t, std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(m_count)});
  }
  return out;
}

}  // namespace orbitgrad
