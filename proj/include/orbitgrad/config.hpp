#ifndef ORBITGRAD_CONFIG_HPP
#define ORBITGRAD_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "orbitgrad/groups.hpp"
#include "orbitgrad/net.hpp"
#include "orbitgrad/point.hpp"
#include "orbitgrad/train.hpp"

namespace orbitgrad {

/// Experiment description read from a sectioned key = value file:
///
///   [dataset]   space, points ("1" or "0.1,0.4;0.2,0.9": ';' between points)
///   [schedule]  kind (vp | geometric), steps, beta_min, beta_max, sigma_min, sigma_max
///   [group]     kind (reflection | rotation | torus | permutation), size, cyclic_order,
///               proposal (uniform | wrapped_normal | enumeration), bandwidth_scale,
///               exact, n_samples, include_identity
///   [net]       architecture (plain | equi_reflect), hidden
///   [train]     variant, iterations, batch, lr, beta1, beta2, eps, seed, log_every
///   [sample]    n, antithetic
///
/// Lines starting with '#' or ';' are comments. Missing keys take the defaults below.
struct ExperimentConfig {
  Space space = Space::Euclidean;
  std::vector<Point> points{Point{1.0}};

  std::string schedule_kind = "vp";
  int steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  double sigma_min = 0.005;
  double sigma_max = 0.5;

  GroupKind group_kind = GroupKind::Reflection;
  std::size_t group_size = 1;
  std::size_t cyclic_order = 0;  ///< torus only: enumerate {k / order} when > 0
  std::string proposal = "uniform";
  double bandwidth_scale = 2.0;
  bool exact = true;
  std::size_t n_group_samples = 64;
  bool include_identity = true;

  Architecture architecture = Architecture::EquiReflect;
  int hidden = 64;

  Variant variant = Variant::OrbDiff;
  int iterations = 20000;
  int batch = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  int log_every = 100;

  int n_samples = 10000;
  bool antithetic = true;
};

/// Throws Error(InvalidConfig) on unreadable files, unknown enum values or bad numbers.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);
void write_config(const ExperimentConfig& cfg, std::ostream& out);

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

Problem make_problem(const ExperimentConfig& cfg);
std::shared_ptr<const NoiseSchedule> make_schedule(const ExperimentConfig& cfg);

/// Named target estimators: baseline, augment, orbdiff (as configured), orbdiff_exact,
/// orbdiff_u (SNIS, uniform proposal), orbdiff_wn (SNIS, wrapped-normal proposal).
TargetEstimator make_estimator(const ExperimentConfig& cfg, const std::string& name);

TrainConfig make_train_config(const ExperimentConfig& cfg);

Denoiser make_initial_denoiser(const ExperimentConfig& cfg);

}  // namespace orbitgrad

#endif  // ORBITGRAD_CONFIG_HPP
