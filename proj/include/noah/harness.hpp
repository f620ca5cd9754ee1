#pragma once

// Run configuration, the legacy ranking baseline, the four-way scenario
// comparison and the named experiments behind the CLI.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "noah/audience.hpp"
#include "noah/bandit.hpp"
#include "noah/common.hpp"
#include "noah/core.hpp"
#include "noah/duallip.hpp"
#include "noah/pid.hpp"
#include "noah/rounding.hpp"
#include "noah/stats.hpp"

namespace noah {

// ---------------------------------------------------------------------------
// Key = value configuration
// ---------------------------------------------------------------------------

/// Flat `key = value` settings. Commands read every key they understand
/// through the typed getters, which also record the effective value; any key
/// left unread is rejected by reject_unknown().
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, const std::string& source = "config") {
    RunConfig c;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ParseError(source + " line " + std::to_string(lineno) + ": expected key = value");
      const auto key = trim(body.substr(0, eq));
      if (key.empty()) throw ParseError(source + " line " + std::to_string(lineno) + ": empty key");
      if (c.values_.count(key)) throw ParseError(source + " line " + std::to_string(lineno) + ": duplicate key " + key);
      c.values_[key] = trim(body.substr(eq + 1));
    }
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) {
    const auto v = raw(key);
    const std::string out = v ? *v : def;
    used_[key] = out;
    return out;
  }

  double get_double(const std::string& key, double def) {
    const auto v = raw(key);
    const double out = v ? parse_double(*v, "config key " + key) : def;
    if (!std::isfinite(out)) throw ValidationError("config key " + key + " must be finite");
    used_[key] = fmt_double(out);
    return out;
  }

  std::int64_t get_int(const std::string& key, std::int64_t def) {
    const auto v = raw(key);
    std::int64_t out = def;
    if (v) {
      auto res = std::from_chars(v->data(), v->data() + v->size(), out);
      if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
        throw ParseError("config key " + key + ": cannot parse integer '" + *v + "'");
    }
    used_[key] = std::to_string(out);
    return out;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t def) {
    const auto v = raw(key);
    std::uint64_t out = def;
    if (v) {
      auto res = std::from_chars(v->data(), v->data() + v->size(), out);
      if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
        throw ParseError("config key " + key + ": cannot parse seed '" + *v + "'");
    }
    used_[key] = std::to_string(out);
    return out;
  }

  std::size_t get_count(const std::string& key, std::int64_t def, std::int64_t min_value = 0) {
    const auto v = get_int(key, def);
    if (v < min_value) throw ValidationError("config key " + key + " must be at least " + std::to_string(min_value));
    return static_cast<std::size_t>(v);
  }

  bool get_bool(const std::string& key, bool def) {
    const auto v = raw(key);
    bool out = def;
    if (v) {
      if (*v == "true" || *v == "1") {
        out = true;
      } else if (*v == "false" || *v == "0") {
        out = false;
      } else {
        throw ParseError("config key " + key + ": expected true or false, got '" + *v + "'");
      }
    }
    used_[key] = out ? "true" : "false";
    return out;
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) {
    const auto v = raw(key);
    std::vector<double> out = def;
    if (v) {
      out.clear();
      for (const auto& f : split(*v, ',')) out.push_back(parse_double(f, "config key " + key));
    }
    std::string text;
    for (std::size_t i = 0; i < out.size(); ++i) text += (i ? "," : "") + fmt_double(out[i]);
    used_[key] = text;
    return out;
  }

  /// Marks a key as understood without recording it in config_used.txt
  /// (execution settings that must not change result files).
  void consume(const std::string& key) { silent_.insert(key); }

  void reject_unknown() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : values_)
      if (!used_.count(k) && !silent_.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string msg = "unknown config key";
      msg += unknown.size() > 1 ? "s: " : ": ";
      for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
      throw ValidationError(msg);
    }
  }

  /// Every key a command read, with its effective value, sorted by key.
  void write_used(std::ostream& os) const {
    for (const auto& [k, v] : used_) os << k << " = " << v << '\n';
  }

 private:
  std::optional<std::string> raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> used_;
  std::set<std::string> silent_;
};

inline GeneratorConfig read_generator_config(RunConfig& c) {
  GeneratorConfig g;
  g.conv_mean = c.get_double("gen.conv_mean", g.conv_mean);
  g.conv_concentration = c.get_double("gen.conv_concentration", g.conv_concentration);
  g.unsub_mean = c.get_double("gen.unsub_mean", g.unsub_mean);
  g.unsub_concentration = c.get_double("gen.unsub_concentration", g.unsub_concentration);
  g.ltv_log_mean = c.get_double("gen.ltv_log_mean", g.ltv_log_mean);
  g.ltv_log_sd = c.get_double("gen.ltv_log_sd", g.ltv_log_sd);
  g.frac_2b = c.get_double("gen.frac_2b", g.frac_2b);
  g.eligibility = c.get_double("gen.eligibility", g.eligibility);
  g.feature_dim = c.get_count("gen.feature_dim", static_cast<std::int64_t>(g.feature_dim), 1);
  g.clusters = c.get_count("gen.clusters", static_cast<std::int64_t>(g.clusters), 1);
  g.c_fcap = c.get_int("gen.c_fcap", g.c_fcap);
  g.unsub_budget_ratio = c.get_double("gen.unsub_budget_ratio", g.unsub_budget_ratio);
  g.min_2b_ratio = c.get_double("gen.min_2b_ratio", g.min_2b_ratio);
  g.min_2c_ratio = c.get_double("gen.min_2c_ratio", g.min_2c_ratio);
  g.check();
  return g;
}

inline SolveOptions read_solve_options(RunConfig& c, SolveOptions o = {}) {
  o.max_iters = static_cast<int>(c.get_count("solver.max_iters", o.max_iters));
  o.tol = c.get_double("solver.tol", o.tol);
  o.step_rule = parse_step_rule(c.get_string("solver.step_rule", o.step_rule == StepRule::Fixed ? "fixed" : "adaptive"));
  o.precondition = c.get_bool("solver.precondition", o.precondition);
  o.lbfgs_memory = static_cast<int>(c.get_count("solver.lbfgs_memory", o.lbfgs_memory, 1));
  if (!(o.tol > 0.0)) throw ValidationError("solver.tol must be positive");
  return o;
}

/// Solver settings for experiments that compare nearly equal objectives.
inline SolveOptions tight_solve_options() {
  SolveOptions o;
  o.max_iters = 2000;
  o.tol = 1e-9;
  return o;
}

/// Mean |y_j|; the unit in which relative gamma values are expressed.
inline double objective_scale(const ConstraintSystem& sys) {
  if (sys.y.empty()) return 1.0;
  CompensatedSum s;
  for (double v : sys.y) s.add(std::abs(v));
  const double m = s.value() / static_cast<double>(sys.y.size());
  return m > 0.0 ? m : 1.0;
}

// ---------------------------------------------------------------------------
// Instance helpers
// ---------------------------------------------------------------------------

/// Sub-instance over the given members (indices into inst.members, any
/// order; the result keeps ascending order). Budgets are copied.
inline ProblemInstance restrict_instance(const ProblemInstance& inst, std::vector<std::size_t> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  std::vector<std::size_t> remap(inst.members.size(), static_cast<std::size_t>(-1));
  ProblemInstance out;
  out.campaigns = inst.campaigns;
  out.budgets = inst.budgets;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k] >= inst.members.size()) throw ValidationError("restrict_instance: member index out of range");
    remap[members[k]] = k;
    out.members.push_back(inst.members[members[k]]);
  }
  for (const auto& s : inst.scores) {
    if (remap[s.member] == static_cast<std::size_t>(-1)) continue;
    Score t = s;
    t.member = remap[s.member];
    out.scores.push_back(t);
  }
  for (const auto& [key, v] : inst.ltv)
    if (remap[key.first] != static_cast<std::size_t>(-1)) out.ltv[{remap[key.first], key.second}] = v;
  return out;
}

/// Score-row ranges per member (scores are member-major).
inline std::vector<std::size_t> member_score_offsets(const ProblemInstance& inst) {
  std::vector<std::size_t> off(inst.members.size() + 1, 0);
  for (const auto& s : inst.scores) ++off[s.member + 1];
  std::partial_sum(off.begin(), off.end(), off.begin());
  return off;
}

// ---------------------------------------------------------------------------
// Legacy ranking
// ---------------------------------------------------------------------------

/// Per member, ranks its scored campaigns by y_conv - kappa * y_unsub and
/// sends the top c_fcap (ties to the earlier score row). Chosen indices are
/// positions within the member's score block, ascending.
inline std::vector<SendDecision> legacy_rank(const ProblemInstance& inst, double kappa, std::int64_t c_fcap) {
  if (c_fcap < 1) throw ValidationError("legacy_rank: c_fcap must be at least 1");
  if (!std::isfinite(kappa)) throw ValidationError("legacy_rank: kappa must be finite");
  const auto off = member_score_offsets(inst);
  std::vector<SendDecision> out(inst.members.size());
  std::vector<std::size_t> order;
  for (std::size_t u = 0; u < inst.members.size(); ++u) {
    const std::size_t n = off[u + 1] - off[u];
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto score = [&](std::size_t k) {
      const auto& s = inst.scores[off[u] + k];
      return s.y_conv - kappa * s.y_unsub;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
    const auto take = std::min<std::size_t>(n, static_cast<std::size_t>(c_fcap));
    out[u].chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(out[u].chosen.begin(), out[u].chosen.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Four-way comparison
// ---------------------------------------------------------------------------

struct FourwayConfig {
  GeneratorConfig gen;
  std::int64_t members = 2000;
  std::int64_t campaigns = 10;
  double original_fraction = 0.5;
  double delta = 3.0;
  LshParams lsh;
  double kappa = 1.0;
  double unsub_ratio = 0.5;   // C_unsub = ratio * Legacy's expected unsub on the original audience
  double min_2b_ratio = 0.3;  // C_2B = floor(ratio * |original|)
  double min_2c_ratio = 0.3;
  double gamma_rel = 1e-6;
  SolveOptions solver = tight_solve_options();
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ScenarioResult {
  std::string name;
  std::size_t audience = 0;  // members the scenario may email
  std::size_t emails = 0;
  std::size_t members_0 = 0;  // over the union audience
  std::size_t members_1 = 0;
  std::size_t members_2plus = 0;
  std::size_t members_0_covered = 0;  // over the scenario's own audience
  double expected_ltv = 0.0;          // sum over sends of y_conv * ltv
  double expected_unsub = 0.0;        // sum over sends of y_unsub
};

struct FourwayReport {
  std::size_t original_size = 0;
  std::size_t expansion_size = 0;
  Budgets budgets;
  std::vector<ScenarioResult> rows;  // Legacy, Legacy with AE, NOAH without AE, NOAH
};

namespace detail {

/// Accumulates decisions made on `sub` (whose member k is union member
/// sub_to_union[k]) into per-union-member counts and expected metrics.
inline ScenarioResult score_scenario(const std::string& name, const ProblemInstance& sub,
                                     const std::vector<std::size_t>& sub_to_union, std::size_t union_size,
                                     const std::vector<SendDecision>& decisions) {
  ScenarioResult r;
  r.name = name;
  r.audience = sub.members.size();
  const auto off = member_score_offsets(sub);
  std::vector<std::size_t> count(union_size, 0);
  CompensatedSum ltv, unsub;
  for (std::size_t u = 0; u < sub.members.size(); ++u) {
    for (std::size_t k : decisions[u].chosen) {
      const auto& s = sub.scores[off[u] + k];
      ltv.add(s.y_conv * sub.ltv_of(s));
      unsub.add(s.y_unsub);
    }
    count[sub_to_union[u]] = decisions[u].chosen.size();
    if (decisions[u].chosen.empty()) ++r.members_0_covered;
  }
  for (auto c : count) {
    r.emails += c;
    if (c == 0) ++r.members_0;
    else if (c == 1) ++r.members_1;
    else ++r.members_2plus;
  }
  r.expected_ltv = ltv.value();
  r.expected_unsub = unsub.value();
  return r;
}

inline std::vector<std::size_t> positions_in(const std::vector<std::size_t>& subset,
                                             const std::vector<std::size_t>& superset) {
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (auto m : subset) out.push_back(static_cast<std::size_t>(
                            std::lower_bound(superset.begin(), superset.end(), m) - superset.begin()));
  return out;
}

}  // namespace detail

inline FourwayReport run_fourway(const FourwayConfig& cfg) {
  if (!(cfg.original_fraction > 0.0 && cfg.original_fraction <= 1.0))
    throw ValidationError("fourway: original_fraction must be in (0, 1]");
  if (!(cfg.gamma_rel > 0.0)) throw ValidationError("fourway: gamma_rel must be positive");
  if (!(cfg.unsub_ratio >= 0.0) || !(cfg.min_2b_ratio >= 0.0) || !(cfg.min_2c_ratio >= 0.0))
    throw ValidationError("fourway: budget ratios must be nonnegative");
  const auto universe = generate_instance(cfg.seed, cfg.members, cfg.campaigns, cfg.gen);
  const std::size_t U = universe.members.size();

  std::vector<std::size_t> perm(U);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_stream(cfg.seed, 0xf0a1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_orig = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.original_fraction * static_cast<double>(U))));
  std::vector<std::size_t> original(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_orig));
  std::sort(original.begin(), original.end());

  std::vector<std::string> ids;
  std::vector<std::vector<double>> feats;
  for (const auto& m : universe.members) {
    ids.push_back(m.id);
    feats.push_back(m.features);
  }
  const EmbeddingIndex index(ids, feats, cfg.lsh, cfg.workers);
  std::vector<std::string> orig_ids;
  for (auto u : original) orig_ids.push_back(universe.members[u].id);
  const auto expansion_ids = expand(index, orig_ids, cfg.delta);
  std::vector<std::size_t> all = original;
  for (const auto& id : expansion_ids) all.push_back(index.index_of(id));
  std::sort(all.begin(), all.end());

  ProblemInstance orig_inst = restrict_instance(universe, original);
  ProblemInstance union_inst = restrict_instance(universe, all);
  const auto orig_pos = detail::positions_in(original, all);
  std::vector<std::size_t> union_pos(all.size());
  std::iota(union_pos.begin(), union_pos.end(), std::size_t{0});

  const std::int64_t fcap = cfg.gen.c_fcap;
  const auto legacy = legacy_rank(orig_inst, cfg.kappa, fcap);
  const auto legacy_ae = legacy_rank(union_inst, cfg.kappa, fcap);

  FourwayReport rep;
  rep.original_size = original.size();
  rep.expansion_size = expansion_ids.size();
  rep.rows.push_back(detail::score_scenario("Legacy", orig_inst, orig_pos, all.size(), legacy));
  rep.rows.push_back(detail::score_scenario("Legacy with AE", union_inst, union_pos, all.size(), legacy_ae));

  Budgets b;
  b.c_fcap = fcap;
  b.c_unsub = cfg.unsub_ratio * rep.rows[0].expected_unsub;
  b.c_2b = static_cast<std::int64_t>(std::floor(cfg.min_2b_ratio * static_cast<double>(original.size())));
  b.c_2c = static_cast<std::int64_t>(std::floor(cfg.min_2c_ratio * static_cast<double>(original.size())));
  rep.budgets = b;
  orig_inst.budgets = b;
  union_inst.budgets = b;

  auto lp_decisions = [&](const ProblemInstance& inst) {
    const auto sys = build_email_lp(inst);
    SolveOptions o = cfg.solver;
    o.workers = cfg.workers;
    const auto r = solve(sys, cfg.gamma_rel * objective_scale(sys), SolverMethod::QuasiNewton, o);
    return round_blocks(sys, r.primal.a, derive_seed(cfg.seed, 0x70d), cfg.workers);
  };
  rep.rows.push_back(detail::score_scenario("NOAH without AE", orig_inst, orig_pos, all.size(), lp_decisions(orig_inst)));
  rep.rows.push_back(detail::score_scenario("NOAH", union_inst, union_pos, all.size(), lp_decisions(union_inst)));
  return rep;
}

/// x / base, with 0 / 0 read as 1.
inline double relative_to(double x, double base) {
  if (base == 0.0) return x == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return x / base;
}

inline void write_fourway_csv(std::ostream& os, const FourwayReport& rep) {
  os << "scenario,audience,emails,members_0,members_1,members_2plus,members_0_covered,expected_ltv,expected_unsub,"
        "rel_emails,rel_members_0,rel_members_1,rel_members_2plus,rel_expected_ltv,rel_expected_unsub\n";
  const auto& L = rep.rows.front();
  for (const auto& r : rep.rows) {
    os << r.name << ',' << r.audience << ',' << r.emails << ',' << r.members_0 << ',' << r.members_1 << ','
       << r.members_2plus << ',' << r.members_0_covered << ',' << fmt_double(r.expected_ltv) << ','
       << fmt_double(r.expected_unsub) << ',' << fmt_double(relative_to(double(r.emails), double(L.emails))) << ','
       << fmt_double(relative_to(double(r.members_0), double(L.members_0))) << ','
       << fmt_double(relative_to(double(r.members_1), double(L.members_1))) << ','
       << fmt_double(relative_to(double(r.members_2plus), double(L.members_2plus))) << ','
       << fmt_double(relative_to(r.expected_ltv, L.expected_ltv)) << ','
       << fmt_double(relative_to(r.expected_unsub, L.expected_unsub)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

inline constexpr double kFeasibleViolation = 1e-9;

struct GammaSweepConfig {
  GeneratorConfig gen;
  std::int64_t members = 2000;
  std::int64_t campaigns = 20;
  std::vector<double> gamma_rel{1e-2, 1e-4, 1e-6, 1e-8};
  SolverMethod method = SolverMethod::QuasiNewton;
  SolveOptions solver = tight_solve_options();
  double feasible_violation = kFeasibleViolation;
  double vertex_tol = 1e-6;
  std::uint64_t seed = 42;
  unsigned workers = 1;
};

struct GammaSweepRow {
  double gamma_rel = 0.0;
  double gamma = 0.0;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double feasibility = 0.0;
  std::optional<double> best_feasible;
  double vertex_fraction = 0.0;
  double regularizer_ratio = 0.0;
  std::vector<TrajectoryPoint> trajectory;
};

inline std::vector<GammaSweepRow> run_gamma_sweep(const GammaSweepConfig& cfg) {
  const auto inst = generate_instance(cfg.seed, cfg.members, cfg.campaigns, cfg.gen);
  const auto sys = build_email_lp(inst);
  const double scale = objective_scale(sys);
  std::vector<GammaSweepRow> rows;
  for (double g : cfg.gamma_rel) {
    if (!(g > 0.0)) throw ValidationError("gamma_sweep: gamma values must be positive");
    SolveOptions o = cfg.solver;
    o.workers = cfg.workers;
    const auto r = solve(sys, g * scale, cfg.method, o);
    GammaSweepRow row;
    row.gamma_rel = g;
    row.gamma = g * scale;
    row.iterations = r.dual.iterations;
    row.converged = r.dual.converged;
    row.objective = r.primal.objective;
    row.feasibility = r.primal.feasibility;
    row.best_feasible = r.best_feasible_objective(cfg.feasible_violation);
    row.vertex_fraction = vertex_fraction(r.primal.a, cfg.vertex_tol);
    row.regularizer_ratio = regularizer_ratio(sys, r.primal.a, row.gamma);
    row.trajectory = r.trajectory;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_gamma_sweep(const std::filesystem::path& dir, const std::vector<GammaSweepRow>& rows) {
  std::ofstream s(dir / "gamma_sweep.csv");
  s << "gamma_rel,gamma,iterations,converged,objective,feasibility,best_feasible_objective,vertex_fraction,"
       "regularizer_ratio\n";
  for (const auto& r : rows)
    s << fmt_double(r.gamma_rel) << ',' << fmt_double(r.gamma) << ',' << r.iterations << ','
      << (r.converged ? 1 : 0) << ',' << fmt_double(r.objective) << ',' << fmt_double(r.feasibility) << ','
      << (r.best_feasible ? fmt_double(*r.best_feasible) : std::string("nan")) << ','
      << fmt_double(r.vertex_fraction) << ',' << fmt_double(r.regularizer_ratio) << '\n';
  std::ofstream t(dir / "gamma_sweep_trajectory.csv");
  t << "gamma_rel,iteration,primal,feasibility,dual\n";
  for (const auto& r : rows)
    for (const auto& p : r.trajectory)
      t << fmt_double(r.gamma_rel) << ',' << p.iteration << ',' << fmt_double(p.primal) << ','
        << fmt_double(p.feasibility) << ',' << fmt_double(p.dual) << '\n';
}

struct VertexReport {
  double gamma_rel = 0.0;
  double fraction = 0.0;
  std::size_t coordinates = 0;
  std::vector<std::size_t> histogram;  // 10 equal bins over [0, 1]
};

inline VertexReport run_vertex_fraction(const GammaSweepConfig& cfg) {
  if (cfg.gamma_rel.empty()) throw ValidationError("vertex_fraction: empty gamma list");
  const auto inst = generate_instance(cfg.seed, cfg.members, cfg.campaigns, cfg.gen);
  const auto sys = build_email_lp(inst);
  const double g = *std::min_element(cfg.gamma_rel.begin(), cfg.gamma_rel.end());
  SolveOptions o = cfg.solver;
  o.workers = cfg.workers;
  const auto r = solve(sys, g * objective_scale(sys), cfg.method, o);
  VertexReport v;
  v.gamma_rel = g;
  v.fraction = vertex_fraction(r.primal.a, cfg.vertex_tol);
  v.coordinates = r.primal.a.size();
  v.histogram.assign(10, 0);
  for (double x : r.primal.a) ++v.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, x) * 10.0))];
  return v;
}

struct StaleDualConfig {
  GeneratorConfig gen;
  std::int64_t members = 2000;
  std::int64_t campaigns = 20;
  std::size_t weeks = 5;
  double jitter = 0.02;  // relative sd of the week-over-week multiplicative score noise
  double gamma_rel = 1e-6;
  SolveOptions solver = tight_solve_options();
  std::uint64_t seed = 42;
  unsigned workers = 1;
};

struct StaleDualRow {
  std::size_t week = 0;
  double fresh_objective = 0.0;
  double stale_objective = 0.0;
  double ratio = 0.0;  // stale / fresh (both are y^T a = -value, so this is the value ratio)
  double fresh_feasibility = 0.0;
  double stale_feasibility = 0.0;
};

/// Scores of `inst` multiplied by (1 + jitter * N(0,1)), clipped to [0, 1].
inline ProblemInstance jitter_scores(const ProblemInstance& inst, double jitter, Rng& rng) {
  ProblemInstance out = inst;
  std::normal_distribution<double> stdn(0.0, 1.0);
  for (auto& s : out.scores) {
    s.y_conv = std::clamp(s.y_conv * (1.0 + jitter * stdn(rng)), 0.0, 1.0);
    s.y_unsub = std::clamp(s.y_unsub * (1.0 + jitter * stdn(rng)), 0.0, 1.0);
  }
  return out;
}

/// Week 0 is solved once; each later week perturbs the previous week's
/// scores, is solved fresh, and is also recovered from the week-0 dual.
inline std::vector<StaleDualRow> run_stale_dual(const StaleDualConfig& cfg) {
  if (!(cfg.jitter >= 0.0)) throw ValidationError("stale_dual: jitter must be nonnegative");
  auto inst = generate_instance(cfg.seed, cfg.members, cfg.campaigns, cfg.gen);
  const auto sys0 = build_email_lp(inst);
  const double gamma = cfg.gamma_rel * objective_scale(sys0);
  SolveOptions o = cfg.solver;
  o.workers = cfg.workers;
  const auto week0 = solve(sys0, gamma, SolverMethod::QuasiNewton, o);
  Rng rng = make_stream(cfg.seed, 0x5a1e);
  std::vector<StaleDualRow> rows;
  for (std::size_t w = 1; w <= cfg.weeks; ++w) {
    inst = jitter_scores(inst, cfg.jitter, rng);
    const auto sys = build_email_lp(inst);
    const auto fresh = solve(sys, gamma, SolverMethod::QuasiNewton, o);
    const auto stale = primal_from_dual(sys, week0.dual, cfg.workers);
    StaleDualRow r;
    r.week = w;
    r.fresh_objective = fresh.primal.objective;
    r.stale_objective = stale.objective;
    r.ratio = relative_to(stale.objective, fresh.primal.objective);
    r.fresh_feasibility = fresh.primal.feasibility;
    r.stale_feasibility = stale.feasibility;
    rows.push_back(r);
  }
  return rows;
}

struct BanditRegretConfig {
  std::size_t seeds = 20;
  std::size_t steps = 2000;
  std::size_t dim = 5;
  std::size_t arms = 10;
  double noise_sd = 0.5;
  double prior_var = 1.0;
  Link link = Link::Linear;
  std::uint64_t seed = 7;
};

struct BanditRegretRow {
  std::uint64_t seed = 0;
  double thompson_reward = 0.0;
  double uniform_reward = 0.0;
  double thompson_regret = 0.0;
  double uniform_regret = 0.0;
};

struct BanditRegretReport {
  std::vector<BanditRegretRow> rows;
  std::vector<double> mean_cum_regret_thompson;  // per step
  std::vector<double> mean_cum_regret_uniform;
};

/// Paired runs: for each seed, both policies face the same environment.
inline BanditRegretReport run_bandit_regret(const BanditRegretConfig& cfg) {
  if (cfg.seeds < 1 || cfg.dim < 1 || cfg.arms < 1) throw ValidationError("bandit_regret: sizes must be positive");
  BanditRegretReport rep;
  rep.mean_cum_regret_thompson.assign(cfg.steps, 0.0);
  rep.mean_cum_regret_uniform.assign(cfg.steps, 0.0);
  const double beta2 = cfg.link == Link::Linear ? std::max(cfg.noise_sd * cfg.noise_sd, 1e-6) : 1.0;
  for (std::size_t k = 0; k < cfg.seeds; ++k) {
    const std::uint64_t s = derive_seed(cfg.seed, k);
    Rng env_rng = make_stream(s, 0);
    auto env = LinearEnvironment::random(cfg.dim, cfg.arms, cfg.noise_sd, cfg.link, env_rng);
    const auto prior = BanditState::prior(cfg.dim, 0.0, cfg.prior_var, beta2, cfg.link);
    Rng r1 = make_stream(s, 1), r2 = make_stream(s, 2);
    const auto ts = run_bandit_loop(env, cfg.steps, prior, r1, BanditPolicy::Thompson);
    const auto un = run_bandit_loop(env, cfg.steps, prior, r2, BanditPolicy::Uniform);
    BanditRegretRow row;
    row.seed = s;
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t j = 0; j < cfg.steps; ++j) {
      row.thompson_reward += ts[j].reward;
      row.uniform_reward += un[j].reward;
      c1 += ts[j].regret;
      c2 += un[j].regret;
      rep.mean_cum_regret_thompson[j] += c1 / static_cast<double>(cfg.seeds);
      rep.mean_cum_regret_uniform[j] += c2 / static_cast<double>(cfg.seeds);
    }
    row.thompson_regret = c1;
    row.uniform_regret = c2;
    rep.rows.push_back(row);
  }
  return rep;
}

struct PidExperimentConfig {
  double target = 100.0;
  PidGains gains;
  std::size_t steps = 50;
  double overshoot = 0.3;
  double bias_gain = 1.2;
  std::size_t bias_steps = 200;
  double noise_sd = 0.0;
  std::uint64_t seed = 3;
};

struct PidExperimentReport {
  std::vector<PlantStep> overshoot_trace;
  std::vector<PlantStep> bias_with_integral;
  std::vector<PlantStep> bias_without_integral;
};

inline PidExperimentReport run_pid_closed_loop(const PidExperimentConfig& cfg) {
  PidExperimentReport rep;
  Rng rng = make_stream(cfg.seed, 0);
  PlantConfig p;
  p.noise_sd = cfg.noise_sd;
  p.initial_input = (1.0 + cfg.overshoot) * cfg.target;
  rep.overshoot_trace = simulate_plant(ControllerState::for_target(cfg.target, cfg.gains), p, cfg.steps, rng);
  PlantConfig biased;
  biased.gain = cfg.bias_gain;
  biased.noise_sd = cfg.noise_sd;
  rep.bias_with_integral =
      simulate_plant(ControllerState::for_target(cfg.target, cfg.gains), biased, cfg.bias_steps, rng);
  PidGains no_i = cfg.gains;
  no_i.ki = 0.0;
  rep.bias_without_integral = simulate_plant(ControllerState::for_target(cfg.target, no_i), biased, cfg.bias_steps, rng);
  return rep;
}

struct ZihtTablesConfig {
  std::size_t n_per_arm = 5000;
  std::size_t reps = 20000;
  LogNormalDist dist;
  TTestKind test = TTestKind::Welch;
  std::vector<double> alphas{0.05, 0.01, 0.005, 0.001};
  std::vector<double> null_p0{0.02, 0.8};
  double power_p0 = 0.2;
  double power_alpha = 0.05;
  std::vector<double> power_p_delta{0.0, 0.005};
  std::vector<double> power_delta{1.0, 2.0};
  std::uint64_t seed = 11;
  unsigned workers = 1;
};

struct ZihtTableRow {
  ZihtConfig config;
  double alpha = 0.0;
  AbResult result;
};

struct ZihtTables {
  std::vector<ZihtTableRow> type1;  // alpha x p0 under the null
  std::vector<ZihtTableRow> power;  // p_delta x delta at power_p0, power_alpha
};

/// Each configuration gets its own seed stream; under the null the
/// repetitions are simulated once per p0 and evaluated at every alpha.
inline ZihtTables run_ziht_tables(const ZihtTablesConfig& cfg) {
  ZihtTables out;
  std::uint64_t stream = 0;
  auto base = [&](double p0) {
    ZihtConfig c;
    c.p0 = p0;
    c.dist = cfg.dist;
    c.n_per_arm = cfg.n_per_arm;
    c.reps = cfg.reps;
    c.test = cfg.test;
    c.workers = cfg.workers;
    c.seed = derive_seed(cfg.seed, stream++);
    return c;
  };
  for (double p0 : cfg.null_p0) {
    ZihtConfig c = base(p0);
    c.alpha = cfg.alphas.empty() ? 0.05 : cfg.alphas.front();
    const auto draws = simulate_ziht_draws(c);
    for (double a : cfg.alphas) out.type1.push_back({c, a, summarize_ziht(draws, a)});
  }
  for (double pd : cfg.power_p_delta) {
    for (double d : cfg.power_delta) {
      ZihtConfig c = base(cfg.power_p0);
      c.p_delta = pd;
      c.delta = d;
      c.alpha = cfg.power_alpha;
      out.power.push_back({c, c.alpha, simulate_ziht_test(c)});
    }
  }
  return out;
}

}  // namespace noah
