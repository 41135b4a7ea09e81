#include "orbitgrad/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "orbitgrad/error.hpp"
#include "orbitgrad/kernels.hpp"

namespace orbitgrad {

namespace {

using Quat = std::array<double, 4>;

Quat quat_mul(const Quat& a, const Quat& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

Quat quat_normalized(Quat q) {
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::InvalidAction, "rotation quaternion must be finite and non-zero");
  }
  for (double& c : q) c /= n;
  return q;
}

void rotate_block(const Quat& q, const double* in, double* out) {
  // v' = v + 2w (u x v) + 2 u x (u x v)
  const double ux = q[1], uy = q[2], uz = q[3], w = q[0];
  const double cx = uy * in[2] - uz * in[1];
  const double cy = uz * in[0] - ux * in[2];
  const double cz = ux * in[1] - uy * in[0];
  const double ccx = uy * cz - uz * cy;
  const double ccy = uz * cx - ux * cz;
  const double ccz = ux * cy - uy * cx;
  out[0] = in[0] + 2.0 * (w * cx + ccx);
  out[1] = in[1] + 2.0 * (w * cy + ccy);
  out[2] = in[2] + 2.0 * (w * cz + ccz);
}

const char* kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::Reflection: return "reflection";
    case GroupKind::Rotation: return "rotation";
    case GroupKind::TorusTranslation: return "torus translation";
    case GroupKind::Permutation: return "permutation";
  }
  return "?";
}

void require_same_kind(const GroupElement& g, const GroupElement& h) {
  if (g.kind() != h.kind()) {
    throw Error(ErrorCode::InvalidAction, std::string("cannot compose ") + kind_name(g.kind()) +
                                              " with " + kind_name(h.kind()));
  }
}

}  // namespace

GroupElement GroupElement::reflection(int sign) {
  if (sign != 1 && sign != -1) throw Error(ErrorCode::InvalidAction, "reflection sign must be +1 or -1");
  return GroupElement(Reflection{sign});
}

GroupElement GroupElement::rotation(std::array<double, 4> q) {
  return GroupElement(Rotation{quat_normalized(q)});
}

GroupElement GroupElement::rotation_axis_angle(std::array<double, 3> axis, double angle) {
  const double n = std::hypot(axis[0], axis[1], axis[2]);
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidAction, "rotation axis must be non-zero");
  const double s = std::sin(angle / 2.0) / n;
  return rotation({std::cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s});
}

GroupElement GroupElement::torus_translation(std::vector<double> offset) {
  if (offset.empty()) throw Error(ErrorCode::InvalidAction, "torus translation needs a non-empty offset");
  for (double& o : offset) {
    if (!std::isfinite(o)) throw Error(ErrorCode::InvalidAction, "torus offset must be finite");
    o = wrap_unit(o);
  }
  return GroupElement(TorusTranslation{std::move(offset)});
}

GroupElement GroupElement::permutation(std::vector<std::size_t> map) {
  std::vector<bool> seen(map.size(), false);
  for (std::size_t m : map) {
    if (m >= map.size() || seen[m]) throw Error(ErrorCode::InvalidAction, "permutation map is not a bijection");
    seen[m] = true;
  }
  if (map.empty()) throw Error(ErrorCode::InvalidAction, "empty permutation");
  return GroupElement(Permutation{std::move(map)});
}

Point act(const GroupElement& g, const Point& x) {
  Point out(std::vector<double>(x.dim()), x.space);
  switch (g.kind()) {
    case GroupKind::Reflection: {
      const double s = g.as<Reflection>().sign;
      for (std::size_t i = 0; i < x.dim(); ++i) {
        out[i] = x.space == Space::Torus ? wrap_unit(s * x[i]) : s * x[i];
      }
      break;
    }
    case GroupKind::Rotation: {
      if (x.space != Space::Euclidean || x.dim() % 3 != 0) {
        throw Error(ErrorCode::InvalidAction, "rotation needs a Euclidean point with dimension divisible by 3");
      }
      const auto& q = g.as<Rotation>().q;
      for (std::size_t i = 0; i < x.dim(); i += 3) rotate_block(q, &x.x[i], &out.x[i]);
      break;
    }
    case GroupKind::TorusTranslation: {
      const auto& off = g.as<TorusTranslation>().offset;
      if (x.space != Space::Torus || x.dim() % off.size() != 0) {
        throw Error(ErrorCode::InvalidAction,
                    "torus translation needs a torus point with dimension divisible by the offset size");
      }
      for (std::size_t i = 0; i < x.dim(); ++i) out[i] = wrap_unit(x[i] + off[i % off.size()]);
      break;
    }
    case GroupKind::Permutation: {
      const auto& map = g.as<Permutation>().map;
      if (x.dim() % map.size() != 0) {
        throw Error(ErrorCode::InvalidAction, "permutation size must divide the point dimension");
      }
      const std::size_t block = x.dim() / map.size();
      for (std::size_t i = 0; i < map.size(); ++i) {
        std::copy_n(x.x.begin() + static_cast<std::ptrdiff_t>(i * block), block,
                    out.x.begin() + static_cast<std::ptrdiff_t>(map[i] * block));
      }
      break;
    }
  }
  return out;
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  require_same_kind(g, h);
  switch (g.kind()) {
    case GroupKind::Reflection:
      return GroupElement::reflection(g.as<Reflection>().sign * h.as<Reflection>().sign);
    case GroupKind::Rotation:
      return GroupElement::rotation(quat_mul(g.as<Rotation>().q, h.as<Rotation>().q));
    case GroupKind::TorusTranslation: {
      const auto& a = g.as<TorusTranslation>().offset;
      const auto& b = h.as<TorusTranslation>().offset;
      if (a.size() != b.size()) throw Error(ErrorCode::InvalidAction, "translation sizes differ");
      std::vector<double> c(a.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
      return GroupElement::torus_translation(std::move(c));
    }
    case GroupKind::Permutation: {
      const auto& a = g.as<Permutation>().map;
      const auto& b = h.as<Permutation>().map;
      if (a.size() != b.size()) throw Error(ErrorCode::InvalidAction, "permutation sizes differ");
      std::vector<std::size_t> c(a.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[b[i]];
      return GroupElement::permutation(std::move(c));
    }
  }
  throw Error(ErrorCode::InvalidAction, "unknown group kind");
}

GroupElement invert(const GroupElement& g) {
  switch (g.kind()) {
    case GroupKind::Reflection:
      return g;
    case GroupKind::Rotation: {
      const auto& q = g.as<Rotation>().q;
      return GroupElement::rotation({q[0], -q[1], -q[2], -q[3]});
    }
    case GroupKind::TorusTranslation: {
      auto off = g.as<TorusTranslation>().offset;
      for (double& o : off) o = -o;
      return GroupElement::torus_translation(std::move(off));
    }
    case GroupKind::Permutation: {
      const auto& map = g.as<Permutation>().map;
      std::vector<std::size_t> inv(map.size());
      for (std::size_t i = 0; i < map.size(); ++i) inv[map[i]] = i;
      return GroupElement::permutation(std::move(inv));
    }
  }
  throw Error(ErrorCode::InvalidAction, "unknown group kind");
}

GroupElement identity_element(GroupKind kind, std::size_t size) {
  switch (kind) {
    case GroupKind::Reflection: return GroupElement::reflection(1);
    case GroupKind::Rotation: return GroupElement::rotation({1.0, 0.0, 0.0, 0.0});
    case GroupKind::TorusTranslation: return GroupElement::torus_translation(std::vector<double>(size, 0.0));
    case GroupKind::Permutation: {
      std::vector<std::size_t> map(size);
      std::iota(map.begin(), map.end(), std::size_t{0});
      return GroupElement::permutation(std::move(map));
    }
  }
  throw Error(ErrorCode::InvalidAction, "unknown group kind");
}

GroupElement identity_like(const GroupElement& g) {
  switch (g.kind()) {
    case GroupKind::TorusTranslation:
      return identity_element(g.kind(), g.as<TorusTranslation>().offset.size());
    case GroupKind::Permutation:
      return identity_element(g.kind(), g.as<Permutation>().map.size());
    default:
      return identity_element(g.kind());
  }
}

bool is_identity(const GroupElement& g, double tol) { return approx_equal(g, identity_like(g), tol); }

bool approx_equal(const GroupElement& a, const GroupElement& b, double tol) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case GroupKind::Reflection:
      return a.as<Reflection>().sign == b.as<Reflection>().sign;
    case GroupKind::Rotation: {
      const auto& p = a.as<Rotation>().q;
      const auto& q = b.as<Rotation>().q;
      double dplus = 0.0, dminus = 0.0;
      for (int i = 0; i < 4; ++i) {
        dplus = std::max(dplus, std::abs(p[i] - q[i]));
        dminus = std::max(dminus, std::abs(p[i] + q[i]));
      }
      return std::min(dplus, dminus) <= tol;
    }
    case GroupKind::TorusTranslation: {
      const auto& p = a.as<TorusTranslation>().offset;
      const auto& q = b.as<TorusTranslation>().offset;
      if (p.size() != q.size()) return false;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::abs(wrap_centered(p[i] - q[i])) > tol) return false;
      }
      return true;
    }
    case GroupKind::Permutation:
      return a.as<Permutation>().map == b.as<Permutation>().map;
  }
  return false;
}

double rotation_angle(const GroupElement& g) {
  const double w = std::min(1.0, std::abs(g.as<Rotation>().q[0]));
  return 2.0 * std::acos(w);
}

GroupSampler::GroupSampler(GroupKind kind, std::size_t size, Mode mode, bool include_identity)
    : kind_(kind), size_(size), mode_(std::move(mode)), include_identity_(include_identity) {
  if (size_ == 0) throw Error(ErrorCode::InvalidSampler, "group size must be positive");
  if (std::holds_alternative<WrappedNormal>(mode_)) {
    if (kind_ != GroupKind::TorusTranslation) {
      throw Error(ErrorCode::InvalidSampler, "wrapped-normal sampling is only defined for torus translations");
    }
    if (!std::get<WrappedNormal>(mode_).bandwidth) {
      throw Error(ErrorCode::InvalidSampler, "wrapped-normal sampler needs a bandwidth function");
    }
  }
  if (const auto* e = std::get_if<Enumeration>(&mode_)) {
    const auto& els = e->elements;
    if (els.empty()) throw Error(ErrorCode::InvalidSampler, "empty enumeration");
    for (std::size_t i = 0; i < els.size(); ++i) {
      if (els[i].kind() != kind_) throw Error(ErrorCode::InvalidSampler, "mixed element kinds in enumeration");
      for (std::size_t j = 0; j < i; ++j) {
        if (approx_equal(els[i], els[j])) throw Error(ErrorCode::InvalidSampler, "repeated element in enumeration");
      }
    }
    if (include_identity_ &&
        std::none_of(els.begin(), els.end(), [](const GroupElement& g) { return is_identity(g); })) {
      throw Error(ErrorCode::InvalidSampler, "enumeration must contain the identity when include_identity is set");
    }
  }
}

GroupSampler GroupSampler::uniform(GroupKind kind, std::size_t size, bool include_identity) {
  return GroupSampler(kind, size, Uniform{}, include_identity);
}

GroupSampler GroupSampler::wrapped_normal(std::size_t size, std::function<double(int)> bandwidth,
                                          bool include_identity) {
  return GroupSampler(GroupKind::TorusTranslation, size, WrappedNormal{std::move(bandwidth)}, include_identity);
}

GroupSampler GroupSampler::enumeration(std::vector<GroupElement> elements, bool include_identity) {
  if (elements.empty()) throw Error(ErrorCode::InvalidSampler, "empty enumeration");
  const GroupKind kind = elements.front().kind();
  std::size_t size = 1;
  if (kind == GroupKind::TorusTranslation) size = elements.front().as<TorusTranslation>().offset.size();
  if (kind == GroupKind::Permutation) size = elements.front().as<Permutation>().map.size();
  return GroupSampler(kind, size, Enumeration{std::move(elements)}, include_identity);
}

GroupElement sample(const GroupSampler& sampler, int t, Rng& rng) {
  if (const auto* e = std::get_if<GroupSampler::Enumeration>(&sampler.mode())) {
    return e->elements[rng.index(e->elements.size())];
  }
  if (const auto* wn = std::get_if<GroupSampler::WrappedNormal>(&sampler.mode())) {
    const double bw = wn->bandwidth(t);
    std::vector<double> off(sampler.size());
    for (double& o : off) o = bw * rng.normal();
    return GroupElement::torus_translation(std::move(off));
  }
  switch (sampler.kind()) {
    case GroupKind::Reflection:
      return GroupElement::reflection(rng.uniform() < 0.5 ? 1 : -1);
    case GroupKind::Rotation: {
      // Uniform unit quaternion (Shoemake's subgroup algorithm).
      const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
      const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
      const double tau = 2.0 * std::numbers::pi;
      return GroupElement::rotation({b * std::cos(tau * u3), a * std::sin(tau * u2), a * std::cos(tau * u2),
                                     b * std::sin(tau * u3)});
    }
    case GroupKind::TorusTranslation: {
      std::vector<double> off(sampler.size());
      for (double& o : off) o = rng.uniform();
      return GroupElement::torus_translation(std::move(off));
    }
    case GroupKind::Permutation: {
      std::vector<std::size_t> map(sampler.size());
      std::iota(map.begin(), map.end(), std::size_t{0});
      std::shuffle(map.begin(), map.end(), rng.engine());
      return GroupElement::permutation(std::move(map));
    }
  }
  throw Error(ErrorCode::InvalidSampler, "unknown group kind");
}

double log_density(const GroupSampler& sampler, const GroupElement& g, int t) {
  if (g.kind() != sampler.kind()) throw Error(ErrorCode::NotInSupport, "element kind differs from sampler kind");
  if (const auto* e = std::get_if<GroupSampler::Enumeration>(&sampler.mode())) {
    const bool found = std::any_of(e->elements.begin(), e->elements.end(),
                                   [&](const GroupElement& h) { return approx_equal(g, h, 1e-9); });
    if (!found) throw Error(ErrorCode::NotInSupport, "element is not in the enumerated support");
    return -std::log(static_cast<double>(e->elements.size()));
  }
  if (const auto* wn = std::get_if<GroupSampler::WrappedNormal>(&sampler.mode())) {
    const double bw = wn->bandwidth(t);
    const int z = wrapped_normal_truncation(bw);
    double s = 0.0;
    for (double o : g.as<TorusTranslation>().offset) s += wrapped_normal_log_pdf(wrap_centered(o), bw, z);
    return s;
  }
  switch (sampler.kind()) {
    case GroupKind::Reflection: return -std::numbers::ln2;
    case GroupKind::Permutation: return -std::lgamma(static_cast<double>(sampler.size()) + 1.0);
    default: return 0.0;
  }
}

std::vector<GroupElement> cyclic_translations(std::size_t order, std::size_t size) {
  std::vector<GroupElement> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < size; ++i) total *= order;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<double> off(size);
    std::size_t c = code;
    for (std::size_t i = 0; i < size; ++i, c /= order) {
      off[i] = static_cast<double>(c % order) / static_cast<double>(order);
    }
    out.push_back(GroupElement::torus_translation(std::move(off)));
  }
  return out;
}

std::vector<GroupElement> all_permutations(std::size_t n) {
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  std::vector<GroupElement> out;
  do {
    out.push_back(GroupElement::permutation(map));
  } while (std::next_permutation(map.begin(), map.end()));
  return out;
}

std::vector<GroupElement> reflection_group() {
  return {GroupElement::reflection(1), GroupElement::reflection(-1)};
}

}  // namespace orbitgrad
