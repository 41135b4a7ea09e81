#include "orbitgrad/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "orbitgrad/error.hpp"
#include "orbitgrad/rng.hpp"

namespace orbitgrad {

namespace {

constexpr int kChunk = 256;

/// Per-sample noise source; antithetic partners share a stream and flip the sign.
struct NoiseSource {
  Rng rng;
  double sign;
  double next() { return sign * rng.normal(); }
};

std::vector<NoiseSource> make_sources(std::uint64_t seed, int first, int count, bool antithetic) {
  std::vector<NoiseSource> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = first; i < first + count; ++i) {
    const auto stream = static_cast<std::uint64_t>(antithetic ? i / 2 : i);
    const double sign = (antithetic && i % 2 == 1) ? -1.0 : 1.0;
    out.push_back({Rng(derive_seed(seed, "sample", stream)), sign});
  }
  return out;
}

void fill_noise(Eigen::MatrixXd& z, std::vector<NoiseSource>& sources) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = sources[static_cast<std::size_t>(j)].next();
  }
}

void require_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw Error(ErrorCode::NumericalDivergence, "sampler state became non-finite");
}

template <class Chunk>
std::vector<Point> run_chunks(int n, int dim, Execution exec, Chunk&& chunk) {
  if (n < 1 || dim < 1) throw Error(ErrorCode::InvalidInput, "need n >= 1 samples of dimension >= 1");
  std::vector<Point> out(static_cast<std::size_t>(n));
  const int chunks = (n + kChunk - 1) / kChunk;
  for_each_index(exec, static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const int first = static_cast<int>(c) * kChunk;
    const int count = std::min(kChunk, n - first);
    const Eigen::MatrixXd x = chunk(first, count);
    for (int j = 0; j < count; ++j) {
      out[static_cast<std::size_t>(first + j)] = Point(std::vector<double>(x.col(j).data(), x.col(j).data() + dim));
    }
  });
  return out;
}

}  // namespace

std::vector<Point> ancestral_sample(const BatchDenoiser& denoiser, int dim, const NoiseSchedule& schedule, int n,
                                    std::uint64_t seed, AncestralOptions options, Execution exec) {
  const int steps = schedule.steps();
  for (int t = 1; t <= steps; ++t) {
    if (!(schedule.alpha(t) < 1.0)) throw Error(ErrorCode::InvalidConfig, "ancestral sampling needs alpha_t < 1 for t >= 1");
  }
  return run_chunks(n, dim, exec, [&](int first, int count) {
    auto sources = make_sources(seed, first, count, options.antithetic);
    Eigen::MatrixXd x(dim, count), z(dim, count);
    fill_noise(x, sources);
    for (int t = steps; t >= 1; --t) {
      const double ab = schedule.alpha(t) * schedule.alpha(t);
      const double ab_prev = schedule.alpha(t - 1) * schedule.alpha(t - 1);
      const double beta = 1.0 - ab / ab_prev;
      const double c_x0 = schedule.alpha(t - 1) * beta / (1.0 - ab);
      const double c_xt = (schedule.alpha(t) / schedule.alpha(t - 1)) * (1.0 - ab_prev) / (1.0 - ab);
      const Eigen::MatrixXd x0_hat = denoiser(x, static_cast<double>(t) / steps);
      x = c_x0 * x0_hat + c_xt * x;
      if (t > 1) {
        fill_noise(z, sources);
        x += std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) * z;
      }
      require_finite(x);
    }
    return x;
  });
}

std::vector<Point> flow_euler_sample(const VelocityField& velocity, int dim, const FlowCoefficients& coeffs,
                                     int steps, int n, std::uint64_t seed, Execution exec) {
  if (steps < 1) throw Error(ErrorCode::InvalidInput, "Euler sampling needs at least one step");
  const double dt = (1.0 - 2.0 * coeffs.t_min) / steps;
  return run_chunks(n, dim, exec, [&](int first, int count) {
    auto sources = make_sources(seed, first, count, false);
    Eigen::MatrixXd x(dim, count);
    fill_noise(x, sources);
    for (int k = 0; k < steps; ++k) {
      x += dt * velocity(x, coeffs.t_min + k * dt);
      require_finite(x);
    }
    return x;
  });
}

}  // namespace orbitgrad
