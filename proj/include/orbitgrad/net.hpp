#ifndef ORBITGRAD_NET_HPP
#define ORBITGRAD_NET_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "orbitgrad/rng.hpp"

namespace orbitgrad {

/// Weights of a 3-layer tanh MLP  (d + 1) -> H -> H -> d.
/// The extra input is the normalized time t / T.
struct MlpParams {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  /// Weights ~ N(0, 1 / fan_in), biases 0.
  static MlpParams init(int dim, int hidden, Rng& rng);
  static MlpParams zeros(int dim, int hidden);

  [[nodiscard]] int dim() const { return static_cast<int>(w3.rows()); }
  [[nodiscard]] int hidden() const { return static_cast<int>(w1.rows()); }
  [[nodiscard]] std::size_t size() const;

  /// Visit the six arrays in a fixed order (w1, b1, w2, b2, w3, b3).
  template <class F>
  void for_each(F&& f) {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
  }
  template <class F>
  void for_each(F&& f) const {
    f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
  }

  [[nodiscard]] Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  MlpParams& operator+=(const MlpParams& o);
  MlpParams& operator-=(const MlpParams& o);
  MlpParams& operator*=(double s);
};

enum class Architecture { Plain, EquiReflect };

/// phi(x_t, t). Plain: MLP(x_t, t). EquiReflect: MLP(x_t, t) - MLP(-x_t, t), odd in x_t.
class Denoiser {
 public:
  Denoiser(Architecture arch, MlpParams params) : arch_(arch), params_(std::move(params)) {}

  [[nodiscard]] Architecture architecture() const noexcept { return arch_; }
  [[nodiscard]] const MlpParams& params() const noexcept { return params_; }
  MlpParams& params() noexcept { return params_; }
  [[nodiscard]] int dim() const { return params_.dim(); }

  /// Column-batched forward: xt is d x n, t_norm has n entries; returns d x n.
  /// Throws InvalidShape on mismatched sizes.
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& xt, const Eigen::VectorXd& t_norm) const;
  [[nodiscard]] std::vector<double> forward(std::span<const double> xt, double t_norm) const;

  /// Gradient of sum_j <forward(x_j), upstream_j> with respect to all parameters.
  [[nodiscard]] MlpParams backward(const Eigen::MatrixXd& xt, const Eigen::VectorXd& t_norm,
                                   const Eigen::MatrixXd& upstream) const;

 private:
  Architecture arch_;
  MlpParams params_;
};

/// Binary checkpoint (little-endian):
///   "OGCK" | u32 version=1 | u32 arch | u32 dim | u32 hidden |
///   6 x (u32 rows | u32 cols | rows*cols f64, column-major)
void save_checkpoint(const Denoiser& net, const std::filesystem::path& path);
Denoiser load_checkpoint(const std::filesystem::path& path);

/// Batched x0-prediction callback used by the samplers: (d x n states, t_norm) -> d x n.
using BatchDenoiser = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;

/// Adapter from a network to the sampler callback.
BatchDenoiser as_batch_denoiser(const Denoiser& net);

}  // namespace orbitgrad

#endif  // ORBITGRAD_NET_HPP
