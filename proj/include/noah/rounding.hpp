#pragma once

// Randomized recovery of integer send decisions from a fractional primal.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "noah/common.hpp"
#include "noah/core.hpp"

namespace noah {

struct SendDecision {
  std::vector<std::size_t> chosen;  // ascending column indices within the member block
};

inline constexpr double kCapSlack = 1e-9;

/// Draws m = floor(sum(a) + 0.5) distinct indices by successive weighted
/// sampling without replacement, weights proportional to a. Indices with
/// a_j = 0 are never chosen. When m covers the whole support the support is
/// returned without touching the generator.
inline SendDecision sample_sends(std::span<const double> a, std::int64_t cap, Rng& rng) {
  if (cap < 1) throw ValidationError("sample_sends: cap must be positive");
  CompensatedSum total_sum;
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!std::isfinite(a[j]) || a[j] < -kCapSlack || a[j] > 1.0 + kCapSlack)
      throw ValidationError("sample_sends: a[" + std::to_string(j) + "] = " + fmt_double(a[j]) + " outside [0,1]");
    if (a[j] > 0.0) {
      support.push_back(j);
      total_sum.add(a[j]);
    }
  }
  const double total = total_sum.value();
  if (total > static_cast<double>(cap) + kCapSlack)
    throw ValidationError("sample_sends: sum(a) = " + fmt_double(total) + " exceeds cap " + std::to_string(cap));

  const auto m = static_cast<std::size_t>(std::floor(total + 0.5));
  if (m > support.size()) throw ContractError("sample_sends: sample size exceeds support");
  SendDecision out;
  if (m == support.size()) {
    out.chosen = std::move(support);
    return out;
  }
  std::vector<double> w(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) w[k] = a[support[k]];
  out.chosen.reserve(m);
  for (std::size_t draw = 0; draw < m; ++draw) {
    CompensatedSum rem;
    for (double x : w) rem.add(x);
    const double target = uniform01(rng) * rem.value();
    double acc = 0.0;
    std::size_t pick = w.size();
    std::size_t last_live = w.size();
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] <= 0.0) continue;
      last_live = k;
      acc += w[k];
      if (target < acc) {
        pick = k;
        break;
      }
    }
    if (pick == w.size()) pick = last_live;  // target landed on the rounded top end
    out.chosen.push_back(support[pick]);
    w[pick] = 0.0;
  }
  std::sort(out.chosen.begin(), out.chosen.end());
  return out;
}

/// Rounds every member block of a primal. Each member draws from its own
/// stream derived from (seed, member id), so the result does not depend on
/// member order or worker count.
inline std::vector<SendDecision> round_blocks(const ConstraintSystem& sys, std::span<const double> a,
                                              std::uint64_t seed, unsigned workers = 1) {
  sys.check();
  if (a.size() != sys.num_cols()) throw DimensionError("round_blocks: primal length mismatch");
  if (sys.cap != std::floor(sys.cap)) throw ValidationError("round_blocks: frequency cap must be an integer");
  const auto cap = static_cast<std::int64_t>(sys.cap);
  const bool named = sys.member_ids.size() == sys.num_members();
  const std::size_t U = sys.num_members();
  std::vector<SendDecision> per(U);
  Executor(workers).parallel_for(U, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      const std::size_t off = sys.member_offsets[u];
      const std::size_t len = sys.member_offsets[u + 1] - off;
      Rng rng = make_stream(seed, named ? hash_string(sys.member_ids[u]) : u);
      per[u] = sample_sends(a.subspan(off, len), cap, rng);
    }
  });
  return per;
}

struct RoundedSend {
  std::string member_id;
  std::string campaign_id;
};

/// Flattens round_blocks into (member, campaign) id pairs; systems without
/// provenance use block and column indices as ids.
inline std::vector<RoundedSend> round_primal(const ConstraintSystem& sys, std::span<const double> a,
                                             std::uint64_t seed, unsigned workers = 1) {
  const auto per = round_blocks(sys, a, seed, workers);
  const bool named = sys.member_ids.size() == sys.num_members() && sys.column_campaign.size() == sys.num_cols();
  std::vector<RoundedSend> out;
  for (std::size_t u = 0; u < per.size(); ++u) {
    for (std::size_t k : per[u].chosen) {
      const std::size_t col = sys.member_offsets[u] + k;
      if (named)
        out.push_back({sys.member_ids[u], sys.campaign_ids[sys.column_campaign[col]]});
      else
        out.push_back({std::to_string(u), std::to_string(k)});
    }
  }
  return out;
}

}  // namespace noah
