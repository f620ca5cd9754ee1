#pragma once

// Per-unit discrete level selection under a single coupling constraint by
// Lagrangian relaxation: inner argmax per unit, then a doubling/bisection
// search on the multiplier driven by the sign of the subgradient.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "noah/common.hpp"

namespace noah {

/// U x P tables stored row-major (unit-major).
struct SelectionInstance {
  std::size_t units = 0;
  std::size_t levels = 0;
  std::vector<double> rev;
  std::vector<double> cost;
  double c_roas = 1.0;

  double rev_at(std::size_t u, std::size_t p) const { return rev[u * levels + p]; }
  double cost_at(std::size_t u, std::size_t p) const { return cost[u * levels + p]; }

  void check() const {
    if (units < 1 || levels < 1) throw ValidationError("selection: need at least one unit and one level");
    if (rev.size() != units * levels || cost.size() != units * levels)
      throw DimensionError("selection: rev/cost must both be units x levels");
    for (std::size_t k = 0; k < rev.size(); ++k) {
      if (!std::isfinite(rev[k]) || rev[k] < 0.0 || !std::isfinite(cost[k]) || cost[k] < 0.0)
        throw ValidationError("selection: entry " + std::to_string(k) + " must be finite and nonnegative");
    }
    if (!(c_roas > 0.0) || !std::isfinite(c_roas)) throw ValidationError("selection: c_roas must be positive");
  }
};

/// Discrete budget allocation: maximize total revenue with total cost <= budget.
struct AllocationInstance {
  std::size_t units = 0;
  std::size_t levels = 0;
  std::vector<double> rev;
  std::vector<double> cost;
  double budget = 0.0;

  void check() const {
    SelectionInstance probe{units, levels, rev, cost, 1.0};
    probe.check();
    if (!(budget >= 0.0) || !std::isfinite(budget)) throw ValidationError("allocation: budget must be nonnegative");
  }
};

struct Selection {
  std::vector<std::size_t> choice;  // 0-based level per unit
  double total_rev = 0.0;
  double total_cost = 0.0;
  double lambda_final = 0.0;
  bool feasible = false;
  bool zero_branch = false;     // returned the unconstrained argmax
  bool exact_break = false;     // bisection hit a zero subgradient
  double lambda_min = 0.0;      // final bracket
  double lambda_max = 0.0;
  double subgradient_min = 0.0;  // subgradient at lambda_min (NaN if never evaluated)
  double subgradient_max = 0.0;
  double subgradient = 0.0;      // at the returned selection
  int doublings = 0;
  int bisections = 0;
};

inline constexpr int kMaxDoublings = 60;

namespace detail {

/// Generic search. score(u, p, lambda) is the per-unit Lagrangian term;
/// subgradient(choice) is its derivative in lambda at a fixed choice
/// (nonnegative means the coupling constraint holds).
class LagrangianSearch {
 public:
  using ScoreFn = std::function<double(std::size_t, std::size_t, double)>;
  using SubgradFn = std::function<double(const std::vector<std::size_t>&)>;

  LagrangianSearch(std::size_t units, std::size_t levels, ScoreFn score, SubgradFn subgrad)
      : units_(units), levels_(levels), score_(std::move(score)), subgrad_(std::move(subgrad)) {}

  std::vector<std::size_t> argmax(double lambda) const {
    std::vector<std::size_t> choice(units_);
    for (std::size_t u = 0; u < units_; ++u) {
      std::size_t best = 0;
      double best_v = score_(u, 0, lambda);
      for (std::size_t p = 1; p < levels_; ++p) {
        const double v = score_(u, p, lambda);
        if (v > best_v) {  // strict: ties keep the lowest index
          best = p;
          best_v = v;
        }
      }
      choice[u] = best;
    }
    return choice;
  }

  Selection run(double lambda_init, double eps) const {
    if (!(lambda_init > 0.0) || !std::isfinite(lambda_init))
      throw ValidationError("select: lambda_init must be positive");
    if (!(eps > 0.0) || !(eps < lambda_init)) throw ValidationError("select: need 0 < eps < lambda_init");
    Selection s;
    s.subgradient_min = std::numeric_limits<double>::quiet_NaN();

    auto finish = [&](std::vector<std::size_t> choice, double lambda, double sg) {
      s.choice = std::move(choice);
      s.lambda_final = lambda;
      s.subgradient = sg;
      s.feasible = sg >= 0.0;
      return s;
    };

    auto p0 = argmax(0.0);
    const double sg0 = subgrad_(p0);
    s.subgradient_min = sg0;
    if (sg0 >= 0.0) {
      s.zero_branch = true;
      s.lambda_max = 0.0;
      s.subgradient_max = sg0;
      return finish(std::move(p0), 0.0, sg0);
    }

    double lo = 0.0, hi = lambda_init;
    double sg_lo = sg0;
    auto sel_hi = argmax(hi);
    double sg_hi = subgrad_(sel_hi);
    while (sg_hi < 0.0) {
      if (s.doublings == kMaxDoublings) {
        s.lambda_min = lo;
        s.lambda_max = hi;
        s.subgradient_min = sg_lo;
        s.subgradient_max = sg_hi;
        return finish(std::move(sel_hi), hi, sg_hi);  // flagged infeasible
      }
      lo = hi;
      sg_lo = sg_hi;
      hi *= 2.0;
      ++s.doublings;
      sel_hi = argmax(hi);
      sg_hi = subgrad_(sel_hi);
    }

    while (hi - lo > eps) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // bracket below double resolution
      ++s.bisections;
      auto sel = argmax(mid);
      const double sg = subgrad_(sel);
      if (sg > 0.0) {
        hi = mid;
        sg_hi = sg;
        sel_hi = std::move(sel);
      } else if (sg < 0.0) {
        lo = mid;
        sg_lo = sg;
      } else {
        s.exact_break = true;
        s.lambda_min = lo;
        s.lambda_max = hi;
        s.subgradient_min = sg_lo;
        s.subgradient_max = sg_hi;
        return finish(std::move(sel), mid, sg);
      }
    }
    s.lambda_min = lo;
    s.lambda_max = hi;
    s.subgradient_min = sg_lo;
    s.subgradient_max = sg_hi;
    return finish(std::move(sel_hi), hi, sg_hi);
  }

 private:
  std::size_t units_, levels_;
  ScoreFn score_;
  SubgradFn subgrad_;
};

}  // namespace detail

/// Maximizes total revenue subject to total revenue / total cost >= c_roas.
/// Returns the unconstrained argmax when it already satisfies the ratio;
/// otherwise the selection at the smallest multiplier known to satisfy it
/// (or the selection at an exactly zero subgradient, if bisection lands on one).
inline Selection select_levels(const SelectionInstance& inst, double lambda_init = 1.0, double eps = 1e-9) {
  inst.check();
  auto score = [&](std::size_t u, std::size_t p, double lambda) {
    return (1.0 + lambda) * inst.rev_at(u, p) - lambda * inst.c_roas * inst.cost_at(u, p);
  };
  auto subgrad = [&](const std::vector<std::size_t>& choice) {
    CompensatedSum r, c;
    for (std::size_t u = 0; u < choice.size(); ++u) {
      r.add(inst.rev_at(u, choice[u]));
      c.add(inst.cost_at(u, choice[u]));
    }
    return r.value() - inst.c_roas * c.value();
  };
  Selection s = detail::LagrangianSearch(inst.units, inst.levels, score, subgrad).run(lambda_init, eps);
  CompensatedSum r, c;
  for (std::size_t u = 0; u < s.choice.size(); ++u) {
    r.add(inst.rev_at(u, s.choice[u]));
    c.add(inst.cost_at(u, s.choice[u]));
  }
  s.total_rev = r.value();
  s.total_cost = c.value();
  return s;
}

/// Maximizes total revenue subject to total cost <= budget, with the same
/// search; the per-unit term is rev - lambda * cost.
inline Selection allocate_budget(const AllocationInstance& inst, double lambda_init = 1.0, double eps = 1e-9) {
  inst.check();
  const std::size_t P = inst.levels;
  auto score = [&](std::size_t u, std::size_t p, double lambda) {
    return inst.rev[u * P + p] - lambda * inst.cost[u * P + p];
  };
  auto subgrad = [&](const std::vector<std::size_t>& choice) {
    CompensatedSum c;
    for (std::size_t u = 0; u < choice.size(); ++u) c.add(inst.cost[u * P + choice[u]]);
    return inst.budget - c.value();
  };
  Selection s = detail::LagrangianSearch(inst.units, inst.levels, score, subgrad).run(lambda_init, eps);
  CompensatedSum r, c;
  for (std::size_t u = 0; u < s.choice.size(); ++u) {
    r.add(inst.rev[u * P + s.choice[u]]);
    c.add(inst.cost[u * P + s.choice[u]]);
  }
  s.total_rev = r.value();
  s.total_cost = c.value();
  return s;
}

/// True when the returned selection attains the Lagrangian upper bound
/// g(lambda_final) = rev + lambda_final * subgradient, i.e. it is feasible and
/// lambda_final * subgradient == 0. Weak duality then makes it optimal.
inline bool gap_free(const Selection& s) {
  return s.feasible && (s.lambda_final == 0.0 || s.subgradient == 0.0);
}

}  // namespace noah
