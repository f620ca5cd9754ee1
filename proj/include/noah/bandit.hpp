#pragma once

// Bayesian linear / probit regression with independent Gaussian weight
// posteriors, updated online by moment matching, and Thompson sampling over
// candidate feature vectors.

#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noah/common.hpp"

namespace noah {

enum class Link { Linear, Probit };

inline std::string to_string(Link l) { return l == Link::Linear ? "linear" : "probit"; }

inline Link parse_link(std::string_view s) {
  if (s == "linear") return Link::Linear;
  if (s == "probit") return Link::Probit;
  throw ParseError("unknown link '" + std::string(s) + "' (expected linear or probit)");
}

struct BanditState {
  std::vector<double> mu;
  std::vector<double> sigma2;
  double beta2 = 1.0;
  Link link = Link::Linear;

  std::size_t dim() const { return mu.size(); }

  void check() const {
    if (mu.size() != sigma2.size()) throw DimensionError("bandit state: |mu| != |sigma2|");
    if (!all_finite(mu)) throw ValidationError("bandit state: non-finite mean");
    for (double s : sigma2)
      if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("bandit state: variances must be positive");
    if (!(beta2 > 0.0) || !std::isfinite(beta2)) throw ValidationError("bandit state: beta2 must be positive");
  }

  static BanditState prior(std::size_t dim, double mean, double variance, double beta2, Link link) {
    BanditState s{std::vector<double>(dim, mean), std::vector<double>(dim, variance), beta2, link};
    s.check();
    return s;
  }
};

inline nlohmann::ordered_json to_json(const BanditState& s) {
  nlohmann::ordered_json j;
  j["mu"] = s.mu;
  j["sigma2"] = s.sigma2;
  j["beta2"] = s.beta2;
  j["link"] = to_string(s.link);
  return j;
}

inline BanditState bandit_state_from_json(const nlohmann::json& j) {
  try {
    BanditState s;
    s.mu = j.at("mu").get<std::vector<double>>();
    s.sigma2 = j.at("sigma2").get<std::vector<double>>();
    s.beta2 = j.at("beta2").get<double>();
    s.link = parse_link(j.at("link").get<std::string>());
    s.check();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bandit state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Truncated-Gaussian correction functions
// ---------------------------------------------------------------------------

inline double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

inline constexpr double kMillsSwitch = -6.0;

namespace detail {

/// For x >= 6 returns 1 - S(x), where S(x) = x * Mills(x) has the asymptotic
/// series 1 - 1/x^2 + 3/x^4 - 15/x^6 + ... . Summed up to the smallest term.
inline double mills_series_tail(double x) {
  const double inv2 = 1.0 / (x * x);
  double term = 1.0;  // (2k-1)!! / x^(2k), signed
  double tail = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double next = -term * (2.0 * k - 1.0) * inv2;
    if (std::abs(next) >= std::abs(term) && k > 1) break;
    term = next;
    tail -= term;
  }
  return tail;
}

}  // namespace detail

/// pdf(t) / Phi(t).
inline double probit_v(double t) {
  if (t < kMillsSwitch) {
    const double x = -t;
    return x / (1.0 - detail::mills_series_tail(x));
  }
  return normal_pdf(t) / normal_cdf(t);
}

/// v(t) * (v(t) + t), in (0, 1).
inline double probit_w(double t) {
  if (t < kMillsSwitch) {
    // v = x / S and v + t = x (1 - S) / S, so w = x^2 (1 - S) / S^2 without cancellation.
    const double x = -t;
    const double tail = detail::mills_series_tail(x);
    const double S = 1.0 - tail;
    return x * x * tail / (S * S);
  }
  const double v = probit_v(t);
  return v * (v + t);
}

// ---------------------------------------------------------------------------
// Posterior update
// ---------------------------------------------------------------------------

struct UpdateIntermediates {
  double eta = 0.0;
  double tau2 = 0.0;
  double delta = 0.0;
  double gamma_mm = 0.0;  // variance ratio of the matched message over tau2
};

inline UpdateIntermediates update_intermediates(const BanditState& s, std::span<const double> x, double y) {
  s.check();
  if (x.size() != s.dim()) throw DimensionError("bandit update: |x| != state dimension");
  if (!all_finite(x) || !std::isfinite(y)) throw ValidationError("bandit update: non-finite input");
  if (s.link == Link::Probit && y != 1.0 && y != -1.0)
    throw ValidationError("bandit update: probit label must be -1 or +1");
  CompensatedSum eta, var;
  for (std::size_t i = 0; i < x.size(); ++i) {
    eta.add(x[i] * s.mu[i]);
    var.add(x[i] * x[i] * s.sigma2[i]);
  }
  UpdateIntermediates m;
  m.eta = eta.value();
  m.tau2 = var.value() + s.beta2;
  if (s.link == Link::Linear) {
    m.gamma_mm = 0.0;
    m.delta = y - m.eta;
  } else {
    const double tau = std::sqrt(m.tau2);
    const double t = y * m.eta / tau;
    m.gamma_mm = 1.0 - probit_w(t);
    m.delta = y * tau * probit_v(t);
  }
  return m;
}

inline BanditState posterior_update(const BanditState& s, std::span<const double> x, double y) {
  const auto m = update_intermediates(s, x, y);
  BanditState out = s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    const double r = s.sigma2[i] / m.tau2;
    out.sigma2[i] = s.sigma2[i] * (1.0 - x[i] * x[i] * r * (1.0 - m.gamma_mm));
    out.mu[i] = s.mu[i] + x[i] * r * m.delta;
  }
  out.check();
  return out;
}

// ---------------------------------------------------------------------------
// Thompson sampling
// ---------------------------------------------------------------------------

/// One weight draw shared by all candidates, one noise draw per candidate.
/// Ties go to the lowest index.
inline std::size_t thompson_select(const BanditState& s, std::span<const std::vector<double>> candidates, Rng& rng) {
  s.check();
  if (candidates.empty()) throw ValidationError("thompson_select: no candidates");
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::vector<double> w(s.dim());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.mu[i] + std::sqrt(s.sigma2[i]) * stdn(rng);
  const double beta = std::sqrt(s.beta2);
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    if (candidates[a].size() != s.dim()) throw DimensionError("thompson_select: candidate dimension mismatch");
    const double v = beta * stdn(rng) + dot(candidates[a], w);
    if (v > best_v) {
      best = a;
      best_v = v;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Simulated environments and the online loop
// ---------------------------------------------------------------------------

class BanditEnvironment {
 public:
  virtual ~BanditEnvironment() = default;
  virtual std::vector<std::vector<double>> candidates(Rng& rng) = 0;
  virtual double reward(std::span<const double> x, Rng& rng) = 0;
  virtual double expected_reward(std::span<const double> x) const = 0;
};

/// Fixed arms with features drawn once; reward x^T w + N(0, noise_sd^2) for
/// the linear link, or its sign (as -1/+1) for the probit link.
class LinearEnvironment : public BanditEnvironment {
 public:
  LinearEnvironment(std::vector<double> w_true, std::vector<std::vector<double>> arms, double noise_sd, Link link)
      : w_(std::move(w_true)), arms_(std::move(arms)), noise_sd_(noise_sd), link_(link) {
    if (arms_.empty()) throw ValidationError("environment: no arms");
    for (const auto& a : arms_)
      if (a.size() != w_.size()) throw DimensionError("environment: arm dimension mismatch");
    if (!(noise_sd >= 0.0)) throw ValidationError("environment: noise_sd must be nonnegative");
  }

  static LinearEnvironment random(std::size_t dim, std::size_t arms, double noise_sd, Link link, Rng& rng) {
    std::normal_distribution<double> stdn(0.0, 1.0);
    std::vector<double> w(dim);
    for (auto& v : w) v = stdn(rng);
    std::vector<std::vector<double>> xs(arms, std::vector<double>(dim));
    for (auto& x : xs)
      for (auto& v : x) v = stdn(rng) / std::sqrt(static_cast<double>(dim));
    return LinearEnvironment(std::move(w), std::move(xs), noise_sd, link);
  }

  std::vector<std::vector<double>> candidates(Rng&) override { return arms_; }

  double reward(std::span<const double> x, Rng& rng) override {
    std::normal_distribution<double> noise(0.0, noise_sd_ > 0.0 ? noise_sd_ : 1.0);
    const double latent = dot(x, w_) + (noise_sd_ > 0.0 ? noise(rng) : 0.0);
    if (link_ == Link::Linear) return latent;
    return latent > 0.0 ? 1.0 : -1.0;
  }

  double expected_reward(std::span<const double> x) const override {
    const double m = dot(x, w_);
    if (link_ == Link::Linear) return m;
    if (noise_sd_ == 0.0) return m > 0.0 ? 1.0 : (m < 0.0 ? -1.0 : 0.0);
    return 2.0 * normal_cdf(m / noise_sd_) - 1.0;
  }

  const std::vector<double>& weights() const { return w_; }
  const std::vector<std::vector<double>>& arms() const { return arms_; }

 private:
  std::vector<double> w_;
  std::vector<std::vector<double>> arms_;
  double noise_sd_;
  Link link_;
};

struct BanditStep {
  std::size_t step = 0;
  std::size_t choice = 0;
  double reward = 0.0;
  double expected = 0.0;
  double regret = 0.0;  // best expected reward among candidates minus chosen
  BanditState state;    // posterior after the update
};

enum class BanditPolicy { Thompson, Uniform };

/// Alternates selection and posterior update. The uniform policy ignores the
/// posterior for selection but still updates it.
inline std::vector<BanditStep> run_bandit_loop(BanditEnvironment& env, std::size_t steps, BanditState state,
                                               Rng& rng, BanditPolicy policy = BanditPolicy::Thompson) {
  state.check();
  std::vector<BanditStep> trace;
  trace.reserve(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    const auto cands = env.candidates(rng);
    if (cands.empty()) throw ValidationError("run_bandit_loop: environment returned no candidates");
    std::size_t a = 0;
    if (policy == BanditPolicy::Thompson) {
      a = thompson_select(state, cands, rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
      a = pick(rng);
    }
    const double r = env.reward(cands[a], rng);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : cands) best = std::max(best, env.expected_reward(c));
    BanditStep st;
    st.step = j + 1;
    st.choice = a;
    st.reward = r;
    st.expected = env.expected_reward(cands[a]);
    st.regret = best - st.expected;
    state = posterior_update(state, cands[a], r);
    st.state = state;
    trace.push_back(std::move(st));
  }
  return trace;
}

inline void write_bandit_trace_csv(std::ostream& os, std::span<const BanditStep> trace) {
  os << "step,choice,reward,expected,regret\n";
  for (const auto& s : trace)
    os << s.step << ',' << s.choice << ',' << fmt_double(s.reward) << ',' << fmt_double(s.expected) << ','
       << fmt_double(s.regret) << '\n';
}

}  // namespace noah
