#include "orbitgrad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

double rmsd_to_nearest(std::span<const Point> samples, std::span<const Point> targets) {
  if (samples.empty() || targets.empty()) throw Error(ErrorCode::InvalidInput, "rmsd needs samples and targets");
  double total = 0.0;
  for (const auto& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : targets) {
      if (t.dim() != s.dim()) throw Error(ErrorCode::InvalidInput, "sample and target dimensions differ");
      const double d = distance(s, t);
      best = std::min(best, d * d);
    }
    total += best;
  }
  return std::sqrt(total / static_cast<double>(samples.size()));
}

double wasserstein2_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size()) throw Error(ErrorCode::InvalidInput, "W2 needs two non-empty samples of equal size");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += (sa[i] - sb[i]) * (sa[i] - sb[i]);
  return std::sqrt(s / static_cast<double>(sa.size()));
}

std::vector<double> tile_atoms(std::span<const double> atoms, std::size_t n) {
  if (atoms.empty()) throw Error(ErrorCode::InvalidInput, "no atoms to tile");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = atoms[i % atoms.size()];
  return out;
}

}  // namespace orbitgrad
