#pragma once

// Two-sample t-tests, a Monte Carlo study of their behaviour on
// zero-inflated heavy-tailed metrics, and the per-member surrogate index.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "noah/common.hpp"

namespace noah {

// ---------------------------------------------------------------------------
// t-tests
// ---------------------------------------------------------------------------

enum class TTestKind { Welch, Pooled };

inline std::string to_string(TTestKind k) { return k == TTestKind::Welch ? "welch" : "pooled"; }

inline TTestKind parse_ttest_kind(std::string_view s) {
  if (s == "welch") return TTestKind::Welch;
  if (s == "pooled") return TTestKind::Pooled;
  throw ParseError("unknown t-test '" + std::string(s) + "' (expected welch or pooled)");
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool reject = false;
  bool degenerate = false;  // both arms constant: no test possible
};

namespace detail {

struct Moments {
  double n = 0.0, mean = 0.0, var = 0.0;  // unbiased variance
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.n = static_cast<double>(x.size());
  CompensatedSum s;
  for (double v : x) s.add(v);
  m.mean = s.value() / m.n;
  CompensatedSum ss;
  for (double v : x) ss.add((v - m.mean) * (v - m.mean));
  m.var = ss.value() / (m.n - 1.0);
  return m;
}

inline double two_sided_p(double t, double df) {
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace detail

/// t = (mean x - mean y) / se with a two-sided p-value. Welch uses the
/// Welch-Satterthwaite degrees of freedom; pooled uses n_x + n_y - 2.
inline TTestResult t_test(std::span<const double> x, std::span<const double> y, double alpha,
                          TTestKind kind = TTestKind::Welch) {
  if (x.size() < 2 || y.size() < 2) throw ValidationError("t_test: each arm needs at least 2 observations");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("t_test: alpha must be in (0, 1)");
  if (!all_finite(x) || !all_finite(y)) throw ValidationError("t_test: non-finite observation");
  const auto mx = detail::moments(x), my = detail::moments(y);
  TTestResult r;
  if (mx.var == 0.0 && my.var == 0.0) {
    r.degenerate = true;
    r.p_value = 1.0;
    return r;
  }
  const double diff = mx.mean - my.mean;
  if (kind == TTestKind::Welch) {
    const double a = mx.var / mx.n, b = my.var / my.n;
    r.t = diff / std::sqrt(a + b);
    r.df = (a + b) * (a + b) / (a * a / (mx.n - 1.0) + b * b / (my.n - 1.0));
  } else {
    r.df = mx.n + my.n - 2.0;
    const double sp2 = ((mx.n - 1.0) * mx.var + (my.n - 1.0) * my.var) / r.df;
    r.t = diff / std::sqrt(sp2 * (1.0 / mx.n + 1.0 / my.n));
  }
  r.p_value = detail::two_sided_p(r.t, r.df);
  r.reject = r.p_value < alpha;
  return r;
}

inline TTestResult welch_t_test(std::span<const double> x, std::span<const double> y, double alpha) {
  return t_test(x, y, alpha, TTestKind::Welch);
}

// ---------------------------------------------------------------------------
// Zero-inflated heavy-tail simulation
// ---------------------------------------------------------------------------

struct LogNormalDist {
  double mu_log = 2.0;
  double sigma_log = 2.0;
};

struct EmpiricalDist {
  std::vector<double> sample;  // positive values, drawn uniformly with replacement
};

using PositiveDist = std::variant<LogNormalDist, EmpiricalDist>;

struct ZihtConfig {
  double p0 = 0.8;
  double p_delta = 0.0;
  double delta = 0.0;  // shift of E[log] in the treatment's positive part
  PositiveDist dist = LogNormalDist{};
  std::size_t n_per_arm = 5000;
  double alpha = 0.05;
  std::size_t reps = 20000;
  std::uint64_t seed = 1;
  TTestKind test = TTestKind::Welch;
  unsigned workers = 1;

  void check() const {
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw ValidationError("ziht: p0 must be in [0, 1]");
    if (!(p0 + p_delta >= 0.0 && p0 + p_delta <= 1.0)) throw ValidationError("ziht: p0 + p_delta must be in [0, 1]");
    if (!std::isfinite(delta)) throw ValidationError("ziht: delta must be finite");
    if (n_per_arm < 2) throw ValidationError("ziht: n_per_arm must be at least 2");
    if (reps < 1) throw ValidationError("ziht: reps must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("ziht: alpha must be in (0, 1)");
    if (const auto* lg = std::get_if<LogNormalDist>(&dist)) {
      if (!std::isfinite(lg->mu_log) || !(lg->sigma_log >= 0.0)) throw ValidationError("ziht: invalid lognormal");
    } else {
      const auto& e = std::get<EmpiricalDist>(dist);
      if (e.sample.empty()) throw ValidationError("ziht: empirical sample is empty");
      for (double v : e.sample)
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("ziht: empirical sample must be positive");
    }
  }
};

struct AbResult {
  double rejection_rate = 0.0;
  double mean_effect = 0.0;  // average of mean(Y) - mean(X) over repetitions
  double ci_low = 0.0;       // 95% normal-approximation interval for the rate
  double ci_high = 0.0;
  std::size_t rejections = 0;
  std::size_t reps = 0;

  double standard_error() const {
    return std::sqrt(rejection_rate * (1.0 - rejection_rate) / static_cast<double>(reps));
  }
};

/// Per-repetition p-values (1 for degenerate repetitions) and mean effects.
struct ZihtDraws {
  std::vector<double> p_values;
  std::vector<double> effects;
};

namespace detail {

inline void draw_arm(Rng& rng, std::size_t n, double p_nonzero, double log_shift, const PositiveDist& dist,
                     std::vector<double>& out) {
  out.assign(n, 0.0);
  std::normal_distribution<double> stdn(0.0, 1.0);
  const auto* lg = std::get_if<LogNormalDist>(&dist);
  const auto* emp = std::get_if<EmpiricalDist>(&dist);
  const double scale = std::exp(log_shift);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(uniform01(rng) < p_nonzero)) continue;
    if (lg) {
      out[i] = std::exp(lg->mu_log + log_shift + lg->sigma_log * stdn(rng));
    } else {
      const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(emp->sample.size()));
      out[i] = scale * emp->sample[std::min(k, emp->sample.size() - 1)];
    }
  }
}

}  // namespace detail

/// Runs the repetitions once; the result can be evaluated at any alpha.
inline ZihtDraws simulate_ziht_draws(const ZihtConfig& cfg) {
  cfg.check();
  ZihtDraws d;
  d.p_values.resize(cfg.reps);
  d.effects.resize(cfg.reps);
  Executor(cfg.workers).parallel_for(cfg.reps, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> x, y;
    for (std::size_t r = lo; r < hi; ++r) {
      Rng rng = make_stream(cfg.seed, r);
      detail::draw_arm(rng, cfg.n_per_arm, cfg.p0, 0.0, cfg.dist, x);
      detail::draw_arm(rng, cfg.n_per_arm, cfg.p0 + cfg.p_delta, cfg.delta, cfg.dist, y);
      const auto t = t_test(y, x, cfg.alpha, cfg.test);
      d.p_values[r] = t.degenerate ? 1.0 : t.p_value;
      d.effects[r] = detail::moments(y).mean - detail::moments(x).mean;
    }
  });
  return d;
}

inline AbResult summarize_ziht(const ZihtDraws& d, double alpha) {
  AbResult r;
  r.reps = d.p_values.size();
  if (r.reps == 0) throw ValidationError("summarize_ziht: no repetitions");
  for (double p : d.p_values)
    if (p < alpha) ++r.rejections;
  CompensatedSum eff;
  for (double e : d.effects) eff.add(e);
  r.mean_effect = eff.value() / static_cast<double>(r.reps);
  r.rejection_rate = static_cast<double>(r.rejections) / static_cast<double>(r.reps);
  const double half = 1.959963984540054 * r.standard_error();
  r.ci_low = std::max(0.0, r.rejection_rate - half);
  r.ci_high = std::min(1.0, r.rejection_rate + half);
  return r;
}

inline AbResult simulate_ziht_test(const ZihtConfig& cfg) { return summarize_ziht(simulate_ziht_draws(cfg), cfg.alpha); }

inline void write_ziht_header(std::ostream& os) {
  os << "p0,p_delta,delta,n_per_arm,reps,alpha,test,rejection_rate,se,ci_low,ci_high,mean_effect\n";
}

inline void write_ziht_row(std::ostream& os, const ZihtConfig& c, double alpha, const AbResult& r) {
  os << fmt_double(c.p0) << ',' << fmt_double(c.p_delta) << ',' << fmt_double(c.delta) << ',' << c.n_per_arm << ','
     << c.reps << ',' << fmt_double(alpha) << ',' << to_string(c.test) << ',' << fmt_double(r.rejection_rate) << ','
     << fmt_double(r.standard_error()) << ',' << fmt_double(r.ci_low) << ',' << fmt_double(r.ci_high) << ','
     << fmt_double(r.mean_effect) << '\n';
}

/// One positive value per line (blank lines and '#' comments skipped).
inline EmpiricalDist load_positive_sample(std::istream& in) {
  EmpiricalDist e;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const double v = parse_double(t, "sample line " + std::to_string(lineno));
    if (!(v > 0.0)) throw ValidationError("sample line " + std::to_string(lineno) + ": value must be positive");
    e.sample.push_back(v);
  }
  if (e.sample.empty()) throw ParseError("sample: no values");
  return e;
}

// ---------------------------------------------------------------------------
// Surrogate index
// ---------------------------------------------------------------------------

using LtvTable = std::map<std::pair<std::size_t, std::string>, double>;

/// Y_u = sum of LTVs of the products member u converted on.
inline std::vector<double> surrogate_index(const std::vector<std::vector<std::string>>& conversions,
                                           const LtvTable& ltv) {
  std::vector<double> out(conversions.size(), 0.0);
  for (std::size_t u = 0; u < conversions.size(); ++u) {
    CompensatedSum s;
    for (const auto& p : conversions[u]) {
      auto it = ltv.find({u, p});
      if (it == ltv.end())
        throw ValidationError("surrogate_index: no LTV for member " + std::to_string(u) + ", product " + p);
      s.add(it->second);
    }
    out[u] = s.value();
  }
  return out;
}

}  // namespace noah
