#ifndef ORBITGRAD_GROUPS_HPP
#define ORBITGRAD_GROUPS_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <variant>
#include <vector>

#include "orbitgrad/point.hpp"
#include "orbitgrad/rng.hpp"

/**
 * \file
 * \brief Symmetry groups: elements, their action on points, and sampling distributions.
 *
 * Four isometry groups are supported:
 *  - reflection x -> sign * x (Euclidean),
 *  - SO(3) rotations, acting on every consecutive 3-block of a point,
 *  - global torus translations, adding an offset of length k to every k-block mod 1,
 *  - permutations of n blocks (atoms) of equal size.
 */

namespace orbitgrad {

enum class GroupKind { Reflection, Rotation, TorusTranslation, Permutation };

struct Reflection {
  int sign = 1;
};

/// Unit quaternion (w, x, y, z).
struct Rotation {
  std::array<double, 4> q{1.0, 0.0, 0.0, 0.0};
};

/// Offset vector in [0, 1)^k.
struct TorusTranslation {
  std::vector<double> offset;
};

/// Block i of the input lands at block map[i] of the output.
struct Permutation {
  std::vector<std::size_t> map;
};

class GroupElement {
 public:
  using Value = std::variant<Reflection, Rotation, TorusTranslation, Permutation>;

  static GroupElement reflection(int sign);
  /// Normalizes q; throws InvalidAction on a zero quaternion.
  static GroupElement rotation(std::array<double, 4> q);
  static GroupElement rotation_axis_angle(std::array<double, 3> axis, double angle);
  /// Offsets are wrapped into [0, 1).
  static GroupElement torus_translation(std::vector<double> offset);
  /// Throws InvalidAction unless map is a bijection on {0..n-1}.
  static GroupElement permutation(std::vector<std::size_t> map);

  [[nodiscard]] GroupKind kind() const noexcept { return static_cast<GroupKind>(value_.index()); }
  [[nodiscard]] const Value& value() const noexcept { return value_; }

  template <class T>
  [[nodiscard]] const T& as() const {
    return std::get<T>(value_);
  }

 private:
  explicit GroupElement(Value v) : value_(std::move(v)) {}
  Value value_;
};

/// g o x. Throws InvalidAction if the element cannot act on x.
Point act(const GroupElement& g, const Point& x);

/// g o h, so that act(compose(g, h), x) == act(g, act(h, x)).
GroupElement compose(const GroupElement& g, const GroupElement& h);

GroupElement invert(const GroupElement& g);

/// Identity element with the same kind and size as g.
GroupElement identity_like(const GroupElement& g);

/// Identity of the given kind; `size` is k for translations, n for permutations.
GroupElement identity_element(GroupKind kind, std::size_t size = 1);

[[nodiscard]] bool is_identity(const GroupElement& g, double tol = 1e-12);

/// Element equality up to tol (q and -q are the same rotation; offsets compare mod 1).
[[nodiscard]] bool approx_equal(const GroupElement& a, const GroupElement& b, double tol = 1e-12);

/// Rotation angle in [0, pi].
double rotation_angle(const GroupElement& g);

/// Sampling distribution nu_t over a group.
class GroupSampler {
 public:
  struct Uniform {};
  struct WrappedNormal {
    std::function<double(int)> bandwidth;  ///< sigma_g(t) > 0
  };
  struct Enumeration {
    std::vector<GroupElement> elements;
  };
  using Mode = std::variant<Uniform, WrappedNormal, Enumeration>;

  /// Haar / uniform sampling; `size` is k for translations, n for permutations.
  static GroupSampler uniform(GroupKind kind, std::size_t size = 1, bool include_identity = false);
  /// Near-identity torus translations with offset = sigma_g(t) * eps mod 1.
  static GroupSampler wrapped_normal(std::size_t size, std::function<double(int)> bandwidth,
                                     bool include_identity = true);
  /// Throws InvalidSampler on an empty or repeated list, or a missing identity.
  static GroupSampler enumeration(std::vector<GroupElement> elements, bool include_identity = false);

  /// Only for validating the kind/mode pairing; prefer the named constructors.
  GroupSampler(GroupKind kind, std::size_t size, Mode mode, bool include_identity);

  [[nodiscard]] GroupKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] const Mode& mode() const noexcept { return mode_; }
  [[nodiscard]] bool include_identity() const noexcept { return include_identity_; }
  [[nodiscard]] GroupElement identity() const { return identity_element(kind_, size_); }

 private:
  GroupKind kind_;
  std::size_t size_;
  Mode mode_;
  bool include_identity_;
};

GroupElement sample(const GroupSampler& sampler, int t, Rng& rng);

/// log nu_t(g). Continuous Haar measures return 0 (the constant cancels under
/// self-normalization). Throws NotInSupport for elements outside an enumeration.
double log_density(const GroupSampler& sampler, const GroupElement& g, int t);

/// Every element of {k / order : k = 0..order-1}^size.
std::vector<GroupElement> cyclic_translations(std::size_t order, std::size_t size = 1);

/// All n! permutations of n blocks, identity first.
std::vector<GroupElement> all_permutations(std::size_t n);

/// {+1, -1}.
std::vector<GroupElement> reflection_group();

}  // namespace orbitgrad

#endif  // ORBITGRAD_GROUPS_HPP
