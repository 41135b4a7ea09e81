#ifndef ORBITGRAD_EVAL_HPP
#define ORBITGRAD_EVAL_HPP

#include <span>
#include <vector>

#include "orbitgrad/point.hpp"

namespace orbitgrad {

/// sqrt(mean_i min_j ||s_i - t_j||^2). Throws InvalidInput on empty input.
double rmsd_to_nearest(std::span<const Point> samples, std::span<const Point> targets);

/// W2 between two equal-size 1-D samples via the sorted (quantile) coupling.
double wasserstein2_1d(std::span<const double> a, std::span<const double> b);

/// atoms[i mod m] for i < n: an equal-mass atom set resized to n samples.
std::vector<double> tile_atoms(std::span<const double> atoms, std::size_t n);

}  // namespace orbitgrad

#endif  // ORBITGRAD_EVAL_HPP
