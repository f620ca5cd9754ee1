#pragma once

// Euclidean projection onto the box-cut polytope {0 <= a_j <= 1, sum_j a_j <= cap}.

#include <algorithm>
#include <span>
#include <vector>

#include "noah/common.hpp"

namespace noah {

struct BoxCut {
  std::size_t dim = 1;
  double cap = 1.0;

  BoxCut() = default;
  BoxCut(std::size_t d, double c) : dim(d), cap(c) {
    if (d < 1) throw ValidationError("BoxCut: dim must be at least 1");
    if (!(c > 0.0)) throw ValidationError("BoxCut: cap must be positive");
  }
};

namespace detail {

struct Breakpoint {
  double at;
  int delta_active;  // +1 when a coordinate leaves its upper bound, -1 when it reaches zero
};

}  // namespace detail

/// Writes the projection of z onto {0 <= a <= 1, sum(a) <= cap} into out.
///
/// After clipping to the unit box the cap is either already satisfied, or the
/// answer is clip(z - mu, 0, 1) for the unique mu > 0 at which the clipped sum
/// equals cap. That sum is piecewise linear and nonincreasing in mu with kinks
/// at z_j - 1 and z_j, so mu is found by a sorted scan over the kinks.
/// `scratch` is reused across calls to avoid allocation in hot loops.
inline void project_boxcut_into(std::span<const double> z, double cap, std::span<double> out,
                                std::vector<detail::Breakpoint>& scratch) {
  const std::size_t n = z.size();
  if (out.size() != n) throw DimensionError("project_boxcut: output length mismatch");
  double clipped_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::clamp(z[j], 0.0, 1.0);
    clipped_sum += out[j];
  }
  if (clipped_sum <= cap) return;

  // Slope of f(mu) = sum clip(z - mu, 0, 1) just right of mu = 0 is minus the
  // number of coordinates in (0, 1]; later kinks adjust it.
  scratch.clear();
  int active = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = z[j];
    if (v <= 0.0) continue;
    if (v <= 1.0) {
      ++active;
    } else {
      scratch.push_back({v - 1.0, +1});
    }
    scratch.push_back({v, -1});
  }
  std::sort(scratch.begin(), scratch.end(),
            [](const detail::Breakpoint& a, const detail::Breakpoint& b) { return a.at < b.at; });

  double mu = 0.0;
  double f = clipped_sum;
  bool found = false;
  std::size_t k = 0;
  while (k < scratch.size()) {
    const double next = scratch[k].at;
    const double f_next = f - static_cast<double>(active) * (next - mu);
    if (active > 0 && f_next <= cap) {
      mu += (f - cap) / static_cast<double>(active);
      found = true;
      break;
    }
    mu = next;
    f = f_next;
    while (k < scratch.size() && scratch[k].at == next) {
      active += scratch[k].delta_active;
      ++k;
    }
  }
  if (!found) mu += (f - cap) / static_cast<double>(std::max(active, 1));

  double total = 0.0;
  std::size_t fractional = 0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::clamp(z[j] - mu, 0.0, 1.0);
    total += out[j];
    if (out[j] > 0.0 && out[j] < 1.0) ++fractional;
  }
  // mu carries rounding error proportional to |z|; push any excess back
  // onto the fractional coordinates so the cap holds tightly.
  if (total > cap && fractional > 0) {
    const double excess = (total - cap) / static_cast<double>(fractional);
    for (std::size_t j = 0; j < n; ++j)
      if (out[j] > 0.0 && out[j] < 1.0) out[j] = std::clamp(out[j] - excess, 0.0, 1.0);
  }
}

inline std::vector<double> project_boxcut(std::span<const double> z, const BoxCut& box) {
  if (z.size() != box.dim) {
    throw DimensionError("project_boxcut: |z| = " + std::to_string(z.size()) + " but box dim = " +
                         std::to_string(box.dim));
  }
  std::vector<double> out(z.size());
  std::vector<detail::Breakpoint> scratch;
  project_boxcut_into(z, box.cap, out, scratch);
  return out;
}

}  // namespace noah
