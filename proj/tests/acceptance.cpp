// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "noah/audience.hpp"
#include "noah/bandit.hpp"
#include "noah/duallip.hpp"
#include "noah/harness.hpp"
#include "noah/losses.hpp"
#include "noah/pid.hpp"
#include "noah/projection.hpp"
#include "noah/rounding.hpp"
#include "noah/selector.hpp"
#include "noah/stats.hpp"
#include "oracles.hpp"

using namespace noah;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects the first few failure messages of one criterion.
struct Check {
  bool ok = true;
  int failures = 0;
  std::ostringstream notes;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (failures++ < 3) notes << (failures > 1 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes << (notes.tellp() > 0 ? "; " : "") << s; }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("noah_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

// ---------------------------------------------------------------------------

void solver_optimality(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst_rel = 0.0, worst_feas = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto sys = oracle::random_tiny_system(rng, 3, 3, 3);
    const auto exact = oracle::lp_by_vertices(sys);
    c.expect(exact.has_value(), "oracle found no feasible point");
    if (!exact) continue;
    SolveOptions o = tight_solve_options();
    o.max_iters = 20000;
    const auto rep = solve(sys, 1e-6, SolverMethod::QuasiNewton, o);
    const double rel = std::abs(rep.primal.objective - exact->objective) / std::max(1e-3, std::abs(exact->objective));
    worst_rel = std::max(worst_rel, rel);
    worst_feas = std::max(worst_feas, rep.primal.feasibility);
    c.expect(rel <= 1e-4, "instance " + std::to_string(t) + " objective rel " + num(rel));
    c.expect(rep.primal.feasibility <= 1e-6, "instance " + std::to_string(t) + " feasibility " + num(rep.primal.feasibility));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "took " + num(secs) + " s");
  c.note("worst rel " + num(worst_rel) + ", worst feasibility " + num(worst_feas) + ", " + num(secs) + " s");
}

std::vector<GammaSweepRow> g_sweep;  // shared by criteria 2 and 3

void gamma_tradeoff(Check& c) {
  const auto t0 = Clock::now();
  GammaSweepConfig cfg;
  g_sweep = run_gamma_sweep(cfg);
  write_gamma_sweep(scratch("sweep"), g_sweep);
  const double secs = seconds_since(t0);
  std::string trail;
  double worst_rise = 0.0;
  for (std::size_t k = 0; k < g_sweep.size(); ++k) {
    const auto& r = g_sweep[k];
    c.expect(r.best_feasible.has_value(), "no feasible iterate at gamma_rel " + num(r.gamma_rel));
    trail += (k ? " " : "") + (r.best_feasible ? num(-*r.best_feasible) : std::string("none"));
    // Minimization form: the best feasible y^T a must not rise as gamma
    // falls. Values are compared at the solver's stopping tolerance; below
    // it the complementarity error of the final multipliers dominates.
    if (k > 0 && r.best_feasible && g_sweep[k - 1].best_feasible) {
      const double prev = *g_sweep[k - 1].best_feasible;
      const double rise = (*r.best_feasible - prev) / std::abs(prev);
      worst_rise = std::max(worst_rise, rise);
      c.expect(rise <= cfg.solver.tol,
               "objective fell from gamma_rel " + num(g_sweep[k - 1].gamma_rel) + " to " + num(r.gamma_rel));
    }
  }
  c.expect(secs < 120.0, "took " + num(secs) + " s");
  c.note("best feasible value " + trail + ", largest relative rise " + num(worst_rise) + ", " + num(secs) + " s");
}

void vertex_concentration(Check& c) {
  if (g_sweep.empty()) g_sweep = run_gamma_sweep(GammaSweepConfig{});
  const auto& last = g_sweep.back();
  c.expect(last.vertex_fraction >= 0.9, "fraction " + num(last.vertex_fraction));
  c.note("fraction " + num(last.vertex_fraction) + " at gamma_rel " + num(last.gamma_rel));
}

void stale_dual(Check& c) {
  StaleDualConfig cfg;
  cfg.jitter = 0.02;
  cfg.weeks = 5;
  const auto rows = run_stale_dual(cfg);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    worst = std::min(worst, r.ratio);
    c.expect(r.ratio >= 0.99, "week " + std::to_string(r.week) + " ratio " + num(r.ratio));
  }
  c.expect(rows.size() == 5, "expected 5 weeks");
  c.note("worst ratio " + num(worst));
}

void projection(Check& c) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> zd(-1.5, 2.5), capd(0.2, 4.0);
  auto draw = [&](std::size_t n) {
    std::vector<double> z(n);
    for (auto& v : z) v = zd(rng);
    return z;
  };
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(dim(rng));
    const double cap = capd(rng);
    const auto z = draw(n);
    const auto got = project_boxcut(z, BoxCut(n, cap));
    const auto want = oracle::project_by_enumeration(z, cap);
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(got[j] - want[j]));
  }
  c.expect(worst <= 1e-8, "oracle mismatch " + num(worst));
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) { return oracle::dist(a, b); };
  for (int t = 0; t < 10000; ++t) {
    const auto n = static_cast<std::size_t>(dim(rng));
    const BoxCut box(n, capd(rng));
    const auto z1 = draw(n), z2 = draw(n);
    const auto p1 = project_boxcut(z1, box), p2 = project_boxcut(z2, box);
    c.expect(dist(project_boxcut(p1, box), p1) <= 1e-12, "idempotence, pair " + std::to_string(t));
    c.expect(dist(p1, p2) <= dist(z1, z2) + 1e-12, "non-expansiveness, pair " + std::to_string(t));
  }
  c.note("max oracle deviation " + num(worst));
}

void dual_gradient(Check& c) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lam(0.1, 2.1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto sys = oracle::random_tiny_system(rng, 3, 3, 3, false);
    std::vector<double> l(sys.num_rows());
    for (auto& v : l) v = lam(rng);
    const double gamma = 0.5;
    const auto at = dual_value_and_gradient(sys, l, gamma);
    for (std::size_t i = 0; i < l.size(); ++i) {
      auto lp = l, lm = l;
      lp[i] += 1e-5;
      lm[i] -= 1e-5;
      const double fd =
          (dual_value_and_gradient(sys, lp, gamma).value - dual_value_and_gradient(sys, lm, gamma).value) / 2e-5;
      const double rel = std::abs(fd - at.gradient[i]) / std::max(1.0, std::abs(at.gradient[i]));
      worst = std::max(worst, rel);
    }
  }
  c.expect(worst <= 1e-5, "max rel error " + num(worst));
  c.note("max rel error " + num(worst));
}

void rounding_marginals(Check& c) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int cases = 0;
  double worst_z = 0.0;
  while (cases < 10) {
    std::vector<double> a(2 + cases % 3);
    double s = 0.0;
    for (auto& v : a) s += (v = u(gen));
    const double total = 0.5 + 0.9 * u(gen);  // rounds to one send
    for (auto& v : a) v *= total / s;
    if (*std::max_element(a.begin(), a.end()) > 1.0) continue;
    const int draws = 100000;
    std::vector<double> f(a.size(), 0.0);
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(cases)));
    for (int d = 0; d < draws; ++d)
      for (auto j : sample_sends(a, 2, rng).chosen) f[j] += 1.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double p = a[j] / total;
      const double se = std::sqrt(p * (1.0 - p) / draws);
      const double z = std::abs(f[j] / draws - p) / se;
      worst_z = std::max(worst_z, z);
      c.expect(z <= 3.0, "case " + std::to_string(cases) + " index " + std::to_string(j) + " off by " + num(z) + " SE");
    }
    ++cases;
  }
  Rng rng(14);
  for (int t = 0; t < 20000; ++t) {
    const std::size_t n = 1 + t % 9;
    const std::int64_t cap = 1 + t % 4;
    std::vector<double> a(n);
    double s = 0.0;
    for (auto& v : a) s += (v = t % 5 == 0 ? std::round(u(gen)) : u(gen));
    if (s > static_cast<double>(cap))
      for (auto& v : a) v *= static_cast<double>(cap) / s;
    c.expect(static_cast<std::int64_t>(sample_sends(a, cap, rng).chosen.size()) <= cap, "cap exceeded");
  }
  c.note("worst deviation " + num(worst_z) + " SE");
}

void selector(Check& c) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  int checked = 0, constrained = 0;
  for (int t = 0; t < 1000000 && checked < 200; ++t) {
    const auto inst = oracle::random_instance(rng, dim(rng), dim(rng), 1.5, true);
    const auto s = select_levels(inst);
    if (!gap_free(s)) continue;
    ++checked;
    if (!s.zero_branch) ++constrained;
    c.expect(s.total_rev == oracle::brute_force_roas(inst).best_rev, "instance " + std::to_string(t));
  }
  c.expect(checked == 200, "only " + std::to_string(checked) + " gap-free instances");
  // Slack instances: the unconstrained argmax already meets the ratio.
  int zero = 0;
  for (int t = 0; t < 20; ++t) {
    auto inst = oracle::random_instance(rng, dim(rng), dim(rng), 1.0, false);
    for (auto& v : inst.cost) v *= 0.1;
    const auto s = select_levels(inst);
    zero += s.zero_branch && s.lambda_final == 0.0;
    const double best = oracle::brute_force_roas(inst).best_rev;
    c.expect(std::abs(s.total_rev - best) <= 1e-12 * best, "slack instance " + std::to_string(t));
  }
  c.expect(zero == 20, "zero-multiplier branch taken " + std::to_string(zero) + "/20");
  c.note(std::to_string(checked) + " gap-free (" + std::to_string(constrained) + " constrained), " +
         std::to_string(zero) + " slack");
}

BanditState random_state(std::mt19937_64& rng, std::size_t dim, Link link) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  BanditState s{std::vector<double>(dim), std::vector<double>(dim), u(rng), link};
  for (std::size_t i = 0; i < dim; ++i) {
    s.mu[i] = n(rng);
    s.sigma2[i] = u(rng);
  }
  return s;
}

void bandit(Check& c) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  // Orthogonal (axis-aligned) design against the per-coordinate conjugate posterior.
  double worst_conj = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t dim = 1 + rep % 5;
    auto s = random_state(rng, dim, Link::Linear);
    std::vector<double> prec(dim), lin(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      prec[i] = 1.0 / s.sigma2[i];
      lin[i] = s.mu[i] / s.sigma2[i];
    }
    for (std::size_t t = 0; t < dim; ++t) {
      std::vector<double> x(dim, 0.0);
      x[t] = n(rng);
      const double y = 2.0 * n(rng);
      s = posterior_update(s, x, y);
      prec[t] += x[t] * x[t] / s.beta2;
      lin[t] += x[t] * y / s.beta2;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      worst_conj = std::max(worst_conj, std::abs(s.sigma2[i] - 1.0 / prec[i]));
      worst_conj = std::max(worst_conj, std::abs(s.mu[i] - lin[i] / prec[i]));
    }
  }
  c.expect(worst_conj <= 1e-12, "conjugate mismatch " + num(worst_conj));

  double worst_q = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_state(rng, 3, Link::Probit);
    std::vector<double> x(3);
    for (auto& v : x) v = n(rng);
    const double y = t % 2 ? 1.0 : -1.0;
    const auto m = update_intermediates(s, x, y);
    const auto q = oracle::tilted_moments(m.eta, m.tau2, y);
    worst_q = std::max({worst_q, std::abs(m.delta - q.delta), std::abs(m.gamma_mm - q.gamma_mm)});
  }
  c.expect(worst_q <= 1e-6, "probit moments off by " + num(worst_q));

  for (int t = 0; t < 5000; ++t) {
    const auto link = t % 2 ? Link::Probit : Link::Linear;
    const auto s = random_state(rng, 4, link);
    std::vector<double> x(4);
    for (auto& v : x) v = n(rng);
    x[t % 4] = 0.0;
    const double y = link == Link::Probit ? (t % 3 ? 1.0 : -1.0) : 5.0 * n(rng);
    const auto out = posterior_update(s, x, y);
    for (std::size_t i = 0; i < 4; ++i) {
      const bool shrank = x[i] == 0.0 ? out.sigma2[i] == s.sigma2[i] : out.sigma2[i] < s.sigma2[i];
      c.expect(out.sigma2[i] > 0.0 && shrank, "variance did not contract, update " + std::to_string(t));
    }
  }

  BanditRegretConfig cfg;  // 20 paired seeds
  const auto rep = run_bandit_regret(cfg);
  double sum = 0.0, sq = 0.0;
  for (const auto& r : rep.rows) {
    const double d = r.thompson_reward - r.uniform_reward;
    sum += d;
    sq += d * d;
  }
  const double k = static_cast<double>(rep.rows.size());
  const double mean = sum / k;
  const double se = std::sqrt((sq / k - mean * mean) / (k - 1.0));
  c.expect(mean > 3.0 * se, "Thompson advantage " + num(mean) + " with SE " + num(se));
  c.note("conjugate " + num(worst_conj) + ", probit " + num(worst_q) + ", Thompson advantage " + num(mean / se) + " SE");
}

void pid(Check& c) {
  PidExperimentConfig cfg;  // default gains, 30% overshoot, 50 steps
  const auto rep = run_pid_closed_loop(cfg);
  const double err = std::abs(rep.overshoot_trace.back().error) / cfg.target;
  c.expect(err <= 0.05, "relative error after 50 steps " + num(err));
  c.expect(std::abs(rep.overshoot_trace.front().error) / cfg.target > 0.29, "did not start from overshoot");
  const double with_i = std::abs(rep.bias_with_integral.back().error);
  const double without_i = std::abs(rep.bias_without_integral.back().error);
  c.expect(with_i <= 1e-6 * cfg.target, "biased plant error with integral " + num(with_i));
  c.expect(without_i > 1.0, "proportional-only loop unexpectedly unbiased");
  c.note("overshoot error " + num(err) + ", bias error " + num(with_i) + " vs " + num(without_i) + " without I");
}

void audience(Check& c) {
  double worst_recall = 1.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto cloud = oracle::gaussian_cloud(seed, 200, 8);
    LshParams params;
    params.seed = seed;
    const EmbeddingIndex idx(cloud.ids, cloud.points, params);
    std::set<std::size_t> orig_idx;
    std::vector<std::string> orig;
    for (std::size_t i = 0; i < 20; ++i) {
      orig_idx.insert(i * 10);
      orig.push_back(cloud.ids[i * 10]);
    }
    const double base = oracle::percentile_pairwise(cloud, 0.10);
    std::size_t prev = 0;
    for (double f : {0.5, 0.75, 1.0, 1.25}) {
      const double delta = f * base;
      const auto truth = oracle::brute_ball(cloud, orig_idx, delta);
      const auto got = expand(idx, orig, delta);
      std::size_t hits = 0;
      for (const auto& g : got) hits += truth.count(g);
      c.expect(hits == got.size(), "false positive at seed " + std::to_string(seed));
      if (!truth.empty()) worst_recall = std::min(worst_recall, static_cast<double>(hits) / truth.size());
      c.expect(got.size() >= prev, "expansion shrank as delta grew");
      prev = got.size();
    }
  }
  c.expect(worst_recall >= 0.9, "recall " + num(worst_recall));
  c.note("worst recall " + num(worst_recall));
}

void losses(Check& c) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> mu_d(-3.0, 3.0), q_d(0.05, 20.0), k_d(0.1, 5.0), s_d(-5.0, 5.0),
      sg(0.3, 3.0);
  std::bernoulli_distribution coin(0.4);
  auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-3); };
  double worst_g = 0.0, worst_a = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double mu = mu_d(rng), q = q_d(rng);
    const GammaLossParams p{k_d(rng)};
    const std::vector<double> qv{q};
    const double g = gamma_loss(std::vector<double>{mu}, qv, p).grad[0];
    const double fd = (gamma_loss(std::vector<double>{mu + 1e-6}, qv, p).loss -
                       gamma_loss(std::vector<double>{mu - 1e-6}, qv, p).loss) / 2e-6;
    worst_g = std::max(worst_g, rel(g, fd));

    const double m2 = s_d(rng);
    const std::vector<double> sv{s_d(rng)};
    const std::vector<bool> cv{coin(rng)};
    const AftLossParams ap{sg(rng)};
    const double ga = aft_loss(std::vector<double>{m2}, sv, cv, ap).grad[0];
    const double fa = (aft_loss(std::vector<double>{m2 + 1e-6}, sv, cv, ap).loss -
                       aft_loss(std::vector<double>{m2 - 1e-6}, sv, cv, ap).loss) / 2e-6;
    worst_a = std::max(worst_a, rel(ga, fa));
  }
  c.expect(worst_g <= 1e-5, "gamma gradient rel " + num(worst_g));
  c.expect(worst_a <= 1e-5, "AFT gradient rel " + num(worst_a));

  double stat = 0.0;
  for (double q : {0.05, 0.5, 2.0, 10.0, 123.4}) {
    const auto r = gamma_loss(std::vector<double>{std::log(q)}, std::vector<double>{q}, {1.7});
    stat = std::max(stat, std::abs(r.grad[0]));
  }
  c.expect(stat <= 1e-12, "gamma gradient at log q " + num(stat));

  const std::vector<double> zero{0.0};
  const double observed = aft_loss(zero, zero, std::vector<bool>{false}, {1.0}).loss;
  const double censored = aft_loss(zero, zero, std::vector<bool>{true}, {1.0}).loss;
  c.expect(observed == std::log(4.0), "observed boundary " + num(observed));
  c.expect(censored == std::log(2.0), "censored boundary " + num(censored));
  c.note("gamma FD " + num(worst_g) + ", AFT FD " + num(worst_a) + ", stationarity " + num(stat));
}

void ziht(Check& c) {
  const auto t0 = Clock::now();
  ZihtTablesConfig cfg;  // lognormal(2, 2), n 5000 per arm, 20000 repetitions
  const auto tables = run_ziht_tables(cfg);
  const double secs = seconds_since(t0);
  c.expect(tables.type1.size() == 8, "expected 8 type-I configurations");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : tables.type1) {
    const double se = std::sqrt(r.alpha * (1.0 - r.alpha) / static_cast<double>(r.result.reps));
    const double excess = (r.result.rejection_rate - r.alpha) / se;
    worst = std::max(worst, excess);
    c.expect(r.result.rejection_rate <= r.alpha + 3.0 * se,
             "alpha " + num(r.alpha) + " p0 " + num(r.config.p0) + " rate " + num(r.result.rejection_rate));
  }
  // Power rows come out as (p_delta, delta) = (0,1), (0,2), (0.005,1), (0.005,2).
  c.expect(tables.power.size() == 4, "expected 4 power configurations");
  if (tables.power.size() == 4) {
    auto above = [&](std::size_t lo, std::size_t hi) {
      const auto& a = tables.power[lo].result;
      const auto& b = tables.power[hi].result;
      const double gap = b.rejection_rate - a.rejection_rate;
      const double se = std::hypot(a.standard_error(), b.standard_error());
      c.expect(gap > 3.0 * se, "power " + num(b.rejection_rate) + " not 3 SE above " + num(a.rejection_rate));
      return gap / se;
    };
    const double m = std::min({above(0, 1), above(2, 3), above(0, 2), above(1, 3)});
    std::string rates;
    for (const auto& r : tables.power) rates += (rates.empty() ? "" : " ") + num(r.result.rejection_rate);
    c.note("power " + rates + ", smallest separation " + num(m) + " SE");
  }
  c.expect(secs < 300.0, "took " + num(secs) + " s");
  c.note("type-I worst excess " + num(worst) + " SE, " + num(secs) + " s");
}

void fourway(Check& c) {
  FourwayConfig cfg;
  const auto rep = run_fourway(cfg);
  const auto& L = rep.rows[0];
  const auto& LAE = rep.rows[1];
  const auto& N = rep.rows[3];
  c.expect(L.members_0_covered == 0 && LAE.members_0_covered == 0, "legacy left a covered member without email");
  c.expect(N.members_0_covered > L.members_0_covered, "NOAH zero-email count " + std::to_string(N.members_0_covered));
  c.expect(LAE.expected_unsub > rep.budgets.c_unsub, "unsub budget not binding against Legacy with AE");
  c.expect(N.expected_unsub <= LAE.expected_unsub, "NOAH unsub " + num(N.expected_unsub) + " above " +
                                                       num(LAE.expected_unsub));
  std::ostringstream a, b;
  write_fourway_csv(a, rep);
  write_fourway_csv(b, run_fourway(cfg));
  c.expect(a.str() == b.str(), "rerun differs");
  c.note("zero-email members " + std::to_string(N.members_0_covered) + " vs 0, unsub " + num(N.expected_unsub) +
         " vs " + num(LAE.expected_unsub) + " (budget " + num(rep.budgets.c_unsub) + ")");
}

void cli_determinism(Check& c) {
  const fs::path root = scratch("cli");
  const std::string cli = NOAH_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>" + (root / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    c.expect(rc == 0, args + " exited " + std::to_string(rc) + ": " + slurp(root / "stderr.txt"));
    return rc == 0;
  };
  // Seed the round command with a dual from a fixed solve.
  const fs::path dual_dir = root / "dual";
  {
    std::ofstream f(root / "solve_dual.cfg");
    f << "gen.members = 200\n";
  }
  run("solve --config " + (root / "solve_dual.cfg").string() + " --seed 3 --out " + dual_dir.string());

  const std::vector<std::pair<std::string, std::string>> jobs{
      {"solve", "gen.members = 200\ngen.campaigns = 10\n"},
      {"round", "gen.members = 200\ndual = " + (dual_dir / "dual.json").string() + "\n"},
      {"select", "units = 50\n"},
      {"select", "mode = budget\nbudget = 40\nunits = 30\n"},
      {"bandit-sim", "steps = 300\n"},
      {"bandit-sim", "steps = 200\nlink = probit\n"},
      {"pid-sim", "steps = 60\nplant.noise_sd = 2\n"},
      {"expand", "points = 500\ndelta = 2.5\n"},
      {"ziht", "n_per_arm = 500\nreps = 300\n"},
      {"fourway", "gen.members = 300\ngen.campaigns = 6\n"},
      {"experiment gamma_sweep", "gen.members = 200\ngen.campaigns = 5\n"},
      {"experiment vertex_fraction", "gen.members = 200\ngen.campaigns = 5\n"},
      {"experiment stale_dual", "gen.members = 200\ngen.campaigns = 5\nweeks = 2\n"},
      {"experiment delta_tradeoff", "points = 400\n"},
      {"experiment ziht_tables", "n_per_arm = 200\nreps = 200\n"},
      {"experiment bandit_regret", "seeds = 3\nsteps = 200\n"},
      {"experiment pid_closed_loop", "noise_sd = 1\n"},
  };
  std::size_t compared = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& [command, config] = jobs[k];
    const fs::path cfg = root / ("job" + std::to_string(k) + ".cfg");
    {
      std::ofstream f(cfg);
      f << config;
    }
    std::optional<std::map<std::string, std::string>> reference;
    for (int workers : {1, 8}) {
      for (int again = 0; again < 2; ++again) {
        const fs::path out = root / ("job" + std::to_string(k) + "_w" + std::to_string(workers) + "_" + std::to_string(again));
        if (!run(command + " --config " + cfg.string() + " --seed 17 --workers " + std::to_string(workers) +
                 " --out " + out.string()))
          continue;
        auto files = dir_contents(out);
        c.expect(!files.empty(), command + " wrote nothing");
        if (!reference) {
          reference = std::move(files);
        } else {
          c.expect(files == *reference, command + " output differs (workers " + std::to_string(workers) + ")");
          ++compared;
        }
      }
    }
  }
  c.note(std::to_string(jobs.size()) + " command configurations, " + std::to_string(compared) +
         " output directories compared");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"solver optimality on tiny LPs", solver_optimality},
      {"gamma trade-off on synthetic email instance", gamma_tradeoff},
      {"vertex concentration at smallest gamma", vertex_concentration},
      {"stale-dual fallback over 5 weeks", stale_dual},
      {"box-cut projection", projection},
      {"dual gradient vs finite differences", dual_gradient},
      {"rounding marginals and cap", rounding_marginals},
      {"selector vs brute force", selector},
      {"bandit updates and Thompson loop", bandit},
      {"PID closed loop", pid},
      {"audience expansion", audience},
      {"loss gradients and boundary values", losses},
      {"zero-inflated heavy-tail t-test simulation", ziht},
      {"four-way simulation", fourway},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Check c;
    try {
      criteria[k].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.ok;
    std::cout << (c.ok ? "PASS" : "FAIL") << ' ' << k + 1 << ' ' << criteria[k].first << " (" << c.notes.str() << ")"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
