#ifndef ORBITGRAD_POINT_HPP
#define ORBITGRAD_POINT_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace orbitgrad {

enum class Space { Euclidean, Torus };

/// A flat coordinate vector tagged with the space it lives in.
/// Torus coordinates are kept in [0, 1).
struct Point {
  std::vector<double> x;
  Space space = Space::Euclidean;

  Point() = default;
  explicit Point(std::vector<double> coords, Space s = Space::Euclidean)
      : x(std::move(coords)), space(s) {}
  Point(std::initializer_list<double> coords, Space s = Space::Euclidean) : x(coords), space(s) {}

  [[nodiscard]] std::size_t dim() const noexcept { return x.size(); }
  double& operator[](std::size_t i) { return x[i]; }
  double operator[](std::size_t i) const { return x[i]; }
};

/// Map to [0, 1).
inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

/// Map to [-0.5, 0.5).
inline double wrap_centered(double v) {
  double w = v - std::floor(v + 0.5);
  return w >= 0.5 ? w - 1.0 : w;
}

/// Coordinate-wise difference a - b, wrapped on the torus.
inline std::vector<double> displacement(const Point& a, const Point& b) {
  std::vector<double> d(a.dim());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = a.space == Space::Torus ? wrap_centered(a[i] - b[i]) : a[i] - b[i];
  }
  return d;
}

/// Euclidean distance, or the flat-torus distance for torus points.
inline double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (double v : displacement(a, b)) s += v * v;
  return std::sqrt(s);
}

}  // namespace orbitgrad

#endif  // ORBITGRAD_POINT_HPP
