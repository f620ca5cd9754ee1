#pragma once

// CLI command implementations. Each command reads its settings from a
// RunConfig, rejects unknown keys, then writes its outputs into a directory
// together with config_used.txt.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noah/harness.hpp"
#include "noah/losses.hpp"
#include "noah/selector.hpp"

namespace noah {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& dir, const std::string& name) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw Error("cannot write " + (dir / name).string());
  return f;
}

inline void write_json(const fs::path& dir, const std::string& name, const nlohmann::ordered_json& j) {
  auto f = open_out(dir, name);
  f << j.dump(2) << '\n';
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline InstanceFormat parse_instance_format(const std::string& s) {
  if (s == "columnar" || s == "csv") return InstanceFormat::Columnar;
  if (s == "json") return InstanceFormat::Json;
  throw ValidationError("instance_format must be columnar or json, got '" + s + "'");
}

/// Where an instance comes from: a file (`instance`) or, when that is empty,
/// the generator keys.
struct InstanceSource {
  std::string path;
  InstanceFormat format = InstanceFormat::Columnar;
  Budgets budgets;
  std::int64_t members = 200;
  std::int64_t campaigns = 10;
  GeneratorConfig gen;
  std::uint64_t seed = 1;

  ProblemInstance load() const {
    if (!path.empty()) return load_instance(path, format, budgets);
    return generate_instance(seed, members, campaigns, gen);
  }
};

inline InstanceSource read_instance_source(RunConfig& c, std::uint64_t seed) {
  InstanceSource s;
  s.path = c.get_string("instance", "");
  s.format = parse_instance_format(c.get_string("instance_format", "columnar"));
  s.budgets.c_unsub = c.get_double("budget.c_unsub", 0.0);
  s.budgets.c_2b = c.get_int("budget.c_2b", 0);
  s.budgets.c_2c = c.get_int("budget.c_2c", 0);
  s.budgets.c_fcap = c.get_int("budget.c_fcap", 2);
  s.members = c.get_int("gen.members", s.members);
  s.campaigns = c.get_int("gen.campaigns", s.campaigns);
  s.gen = read_generator_config(c);
  s.seed = seed;
  return s;
}

inline ZihtConfig read_ziht_config(RunConfig& c, std::uint64_t seed, unsigned workers) {
  ZihtConfig z;
  z.p0 = c.get_double("p0", 0.8);
  z.p_delta = c.get_double("p_delta", 0.0);
  z.delta = c.get_double("delta", 0.0);
  z.n_per_arm = c.get_count("n_per_arm", 5000, 2);
  z.reps = c.get_count("reps", 2000, 1);
  z.alpha = c.get_double("alpha", 0.05);
  z.test = parse_ttest_kind(c.get_string("test", "welch"));
  const auto dist = c.get_string("dist", "lognormal");
  const double mu = c.get_double("ln_mu", 2.0);
  const double sd = c.get_double("ln_sigma", 2.0);
  const auto sample = c.get_string("sample", "");
  if (dist == "lognormal") {
    z.dist = LogNormalDist{mu, sd};
  } else if (dist == "empirical") {
    if (sample.empty()) throw ValidationError("dist = empirical needs a sample file");
    std::ifstream in(sample);
    if (!in) throw ParseError("cannot open sample " + sample);
    z.dist = load_positive_sample(in);
  } else {
    throw ValidationError("dist must be lognormal or empirical, got '" + dist + "'");
  }
  z.seed = seed;
  z.workers = workers;
  z.check();
  return z;
}

inline LshParams read_lsh(RunConfig& c, std::uint64_t seed) {
  LshParams p;
  p.tables = c.get_count("lsh.tables", static_cast<std::int64_t>(p.tables), 1);
  p.hashes_per_table = c.get_count("lsh.hashes_per_table", static_cast<std::int64_t>(p.hashes_per_table), 1);
  p.width_factor = c.get_double("lsh.width_factor", p.width_factor);
  p.seed = seed;
  p.check();
  return p;
}

inline GammaSweepConfig read_sweep_config(RunConfig& c, std::uint64_t seed, unsigned workers) {
  GammaSweepConfig g;
  g.members = c.get_int("gen.members", g.members);
  g.campaigns = c.get_int("gen.campaigns", g.campaigns);
  g.gen = read_generator_config(c);
  g.gamma_rel = c.get_doubles("gamma_rel", g.gamma_rel);
  g.method = parse_solver_method(c.get_string("solver.method", to_string(g.method)));
  g.solver = read_solve_options(c, g.solver);
  g.feasible_violation = c.get_double("feasible_violation", g.feasible_violation);
  g.vertex_tol = c.get_double("vertex_tol", g.vertex_tol);
  g.seed = seed;
  g.workers = workers;
  return g;
}

}  // namespace detail

struct CommandContext {
  RunConfig config;
  fs::path out_dir;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_solve(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto source = detail::read_instance_source(c, ctx.seed);
  const double gamma_abs = c.get_double("gamma", 0.0);
  const double gamma_rel = c.get_double("gamma_rel", 1e-6);
  const auto method = parse_solver_method(c.get_string("solver.method", "quasi_newton"));
  auto opts = read_solve_options(c, tight_solve_options());
  const auto grid = c.get_doubles("gamma_select_grid", {});
  const double threshold = c.get_double("gamma_select_threshold", kDefaultGammaRatioThreshold);
  const auto created_at = c.get_string("created_at", "");
  c.reject_unknown();

  opts.workers = ctx.workers;
  const auto sys = build_email_lp(source.load());
  const double scale = objective_scale(sys);
  double gamma = gamma_abs > 0.0 ? gamma_abs : gamma_rel * scale;
  nlohmann::ordered_json summary;
  if (!grid.empty()) {
    std::vector<double> abs_grid;
    for (double g : grid) abs_grid.push_back(g * scale);
    const auto sel = select_gamma(sys, abs_grid, threshold, method, opts);
    gamma = sel.gamma;
    summary["gamma_grid"] = abs_grid;
    summary["gamma_ratios"] = sel.ratios;
  }
  auto rep = solve(sys, gamma, method, opts);
  rep.dual.created_at = created_at;

  detail::write_json(ctx.out_dir, "dual.json", to_json(rep.dual));
  {
    auto f = detail::open_out(ctx.out_dir, "primal.csv");
    f << "member_id,campaign_id,a\n";
    for (std::size_t k = 0; k < sys.num_cols(); ++k)
      f << sys.member_ids[sys.column_member[k]] << ',' << sys.campaign_ids[sys.column_campaign[k]] << ','
        << fmt_double(rep.primal.a[k]) << '\n';
  }
  {
    auto f = detail::open_out(ctx.out_dir, "trajectory.csv");
    write_trajectory_csv(f, rep);
  }
  summary["method"] = to_string(method);
  summary["gamma"] = gamma;
  summary["objective"] = rep.primal.objective;
  summary["feasibility"] = rep.primal.feasibility;
  summary["per_row_slack"] = rep.primal.per_row_slack;
  summary["row_labels"] = sys.row_labels;
  summary["iterations"] = rep.dual.iterations;
  summary["converged"] = rep.dual.converged;
  summary["vertex_fraction"] = vertex_fraction(rep.primal.a);
  summary["regularizer_ratio"] = regularizer_ratio(sys, rep.primal.a, gamma);
  detail::write_json(ctx.out_dir, "summary.json", summary);
}

/// Recovers the primal of an instance from a stored dual and rounds it.
inline void cmd_round(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto source = detail::read_instance_source(c, ctx.seed);
  const auto dual_path = c.get_string("dual", "");
  c.reject_unknown();
  if (dual_path.empty()) throw ValidationError("round: config key 'dual' (path to dual.json) is required");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(dual_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dual json: ") + e.what());
  }
  const auto dual = dual_from_json(j);
  const auto sys = build_email_lp(source.load());
  const auto primal = primal_from_dual(sys, dual, ctx.workers);
  const auto sends = round_primal(sys, primal.a, ctx.seed, ctx.workers);
  auto f = detail::open_out(ctx.out_dir, "decisions.csv");
  f << "member_id,campaign_id\n";
  for (const auto& s : sends) f << s.member_id << ',' << s.campaign_id << '\n';
  nlohmann::ordered_json summary;
  summary["fingerprint_match"] = dual.fingerprint == sys.fingerprint;
  summary["objective"] = primal.objective;
  summary["feasibility"] = primal.feasibility;
  summary["sends"] = sends.size();
  detail::write_json(ctx.out_dir, "summary.json", summary);
}

inline void cmd_select(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto input = c.get_string("input", "");
  const auto mode = c.get_string("mode", "roas");
  const double c_roas = c.get_double("c_roas", 1.2);
  const double budget = c.get_double("budget", 0.0);
  const auto units = c.get_count("units", 100, 1);
  const auto levels = c.get_count("levels", 5, 1);
  const double lambda_init = c.get_double("lambda_init", 1.0);
  const double eps = c.get_double("eps", 1e-9);
  c.reject_unknown();
  if (mode != "roas" && mode != "budget") throw ValidationError("mode must be roas or budget");

  std::vector<std::string> unit_ids, level_ids;
  std::vector<double> rev, cost;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw ParseError("cannot open " + input);
    std::map<std::string, std::size_t> uidx, lidx;
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> cells;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty()) continue;
      const auto f = split(t, ',');
      if (lineno == 1 && trim(f[0]) == "unit_id") continue;
      const std::string where = input + " line " + std::to_string(lineno);
      if (f.size() != 4) throw ParseError(where + ": expected unit_id,level_id,rev,cost");
      const auto u = trim(f[0]), l = trim(f[1]);
      if (!uidx.count(u)) {
        uidx[u] = unit_ids.size();
        unit_ids.push_back(u);
      }
      if (!lidx.count(l)) {
        lidx[l] = level_ids.size();
        level_ids.push_back(l);
      }
      if (!cells.emplace(std::make_pair(uidx[u], lidx[l]), std::make_pair(parse_double(f[2], where), parse_double(f[3], where))).second)
        throw ValidationError(where + ": duplicate (unit, level)");
    }
    const std::size_t U = unit_ids.size(), P = level_ids.size();
    if (cells.size() != U * P) throw ValidationError(input + ": every unit needs a row for every level");
    rev.resize(U * P);
    cost.resize(U * P);
    for (const auto& [k, v] : cells) {
      rev[k.first * P + k.second] = v.first;
      cost[k.first * P + k.second] = v.second;
    }
  } else {
    Rng rng = make_stream(ctx.seed, 0x5e1);
    for (std::size_t u = 0; u < units; ++u) unit_ids.push_back("u" + std::to_string(u));
    for (std::size_t p = 0; p < levels; ++p) level_ids.push_back("p" + std::to_string(p));
    // Higher levels buy more clicks at a rising marginal cost.
    for (std::size_t u = 0; u < units; ++u) {
      const double value = 0.5 + 2.0 * uniform01(rng);
      const double cpc = 0.5 + uniform01(rng);
      for (std::size_t p = 0; p < levels; ++p) {
        const double clicks = std::log1p(static_cast<double>(p + 1)) * (1.0 + uniform01(rng));
        rev.push_back(clicks * value);
        cost.push_back(clicks * cpc * (1.0 + 0.3 * static_cast<double>(p)));
      }
    }
  }

  const std::size_t U = unit_ids.size(), P = level_ids.size();
  Selection s;
  if (mode == "roas") {
    s = select_levels(SelectionInstance{U, P, rev, cost, c_roas}, lambda_init, eps);
  } else {
    s = allocate_budget(AllocationInstance{U, P, rev, cost, budget}, lambda_init, eps);
  }
  auto f = detail::open_out(ctx.out_dir, "selection.csv");
  f << "unit_id,chosen_level\n";
  for (std::size_t u = 0; u < U; ++u) f << unit_ids[u] << ',' << level_ids[s.choice[u]] << '\n';
  nlohmann::ordered_json summary;
  summary["mode"] = mode;
  summary["total_rev"] = s.total_rev;
  summary["total_cost"] = s.total_cost;
  summary["lambda"] = s.lambda_final;
  summary["feasible"] = s.feasible;
  summary["zero_branch"] = s.zero_branch;
  summary["exact_break"] = s.exact_break;
  summary["doublings"] = s.doublings;
  summary["bisections"] = s.bisections;
  detail::write_json(ctx.out_dir, "summary.json", summary);
}

inline void cmd_bandit_sim(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto dim = c.get_count("dim", 5, 1);
  const auto arms = c.get_count("arms", 10, 1);
  const auto steps = c.get_count("steps", 2000, 0);
  const auto link = parse_link(c.get_string("link", "linear"));
  const double noise = c.get_double("noise_sd", 0.5);
  const double prior_var = c.get_double("prior_var", 1.0);
  const double beta2 = c.get_double("beta2", link == Link::Linear ? noise * noise : 1.0);
  const auto policy = c.get_string("policy", "thompson");
  c.reject_unknown();
  if (policy != "thompson" && policy != "uniform") throw ValidationError("policy must be thompson or uniform");
  Rng env_rng = make_stream(ctx.seed, 0);
  auto env = LinearEnvironment::random(dim, arms, noise, link, env_rng);
  Rng rng = make_stream(ctx.seed, 1);
  const auto prior = BanditState::prior(dim, 0.0, prior_var, beta2, link);
  const auto trace = run_bandit_loop(env, steps, prior, rng,
                                     policy == "thompson" ? BanditPolicy::Thompson : BanditPolicy::Uniform);
  auto f = detail::open_out(ctx.out_dir, "trace.csv");
  write_bandit_trace_csv(f, trace);
  detail::write_json(ctx.out_dir, "state.json", to_json(trace.empty() ? prior : trace.back().state));
  nlohmann::ordered_json truth;
  truth["w_true"] = env.weights();
  detail::write_json(ctx.out_dir, "environment.json", truth);
}

inline void cmd_pid_sim(CommandContext& ctx) {
  auto& c = ctx.config;
  const double target = c.get_double("target", 100.0);
  PidGains g;
  g.kp = c.get_double("kp", g.kp);
  g.ki = c.get_double("ki", g.ki);
  g.kd = c.get_double("kd", g.kd);
  auto state = ControllerState::for_target(target, g);
  state.c_max = c.get_double("c_max", state.c_max);
  state.windup_cap = c.get_double("windup_cap", state.windup_cap);
  PlantConfig p;
  p.gain = c.get_double("plant.gain", p.gain);
  p.noise_sd = c.get_double("plant.noise_sd", p.noise_sd);
  p.drift = c.get_double("plant.drift", p.drift);
  p.initial_input = c.get_double("plant.initial_input", target);
  const auto steps = c.get_count("steps", 50, 1);
  c.reject_unknown();
  Rng rng = make_stream(ctx.seed, 0);
  const auto trace = simulate_plant(state, p, steps, rng);
  auto f = detail::open_out(ctx.out_dir, "trace.csv");
  write_plant_trace_csv(f, trace);
}

inline void cmd_expand(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto emb_path = c.get_string("embeddings", "");
  const auto orig_path = c.get_string("original", "");
  const auto points = c.get_count("points", 2000, 1);
  const auto dim = c.get_count("dim", 8, 1);
  const auto clusters = c.get_count("clusters", 4, 1);
  const double spread = c.get_double("spread", 3.0);
  const double frac = c.get_double("original_fraction", 0.05);
  const double delta = c.get_double("delta", 2.0);
  const auto lsh = detail::read_lsh(c, ctx.seed);
  c.reject_unknown();

  Embeddings e;
  if (!emb_path.empty()) {
    std::ifstream in(emb_path);
    if (!in) throw ParseError("cannot open " + emb_path);
    e = load_embeddings(in);
  } else {
    e = generate_clustered(ctx.seed, points, dim, clusters, spread);
  }
  std::vector<std::string> original;
  if (!orig_path.empty()) {
    std::ifstream in(orig_path);
    if (!in) throw ParseError("cannot open " + orig_path);
    std::string line;
    while (std::getline(in, line)) {
      const auto t = trim(line);
      if (!t.empty() && t != "member_id") original.push_back(t);
    }
  } else {
    if (!(frac > 0.0 && frac <= 1.0)) throw ValidationError("original_fraction must be in (0, 1]");
    std::vector<std::size_t> perm(e.ids.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = make_stream(ctx.seed, 0x0e1);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(frac * static_cast<double>(perm.size())));
    for (std::size_t k = 0; k < n; ++k) original.push_back(e.ids[perm[k]]);
    std::sort(original.begin(), original.end());
  }
  const EmbeddingIndex index(e.ids, e.points, lsh, ctx.workers);
  const auto out = expand(index, original, delta);
  auto f = detail::open_out(ctx.out_dir, "expansion.txt");
  f << "member_id\n";
  for (const auto& id : out) f << id << '\n';
  nlohmann::ordered_json summary;
  summary["original"] = original.size();
  summary["expansion"] = out.size();
  summary["delta"] = delta;
  detail::write_json(ctx.out_dir, "summary.json", summary);
}

inline void cmd_ziht(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto z = detail::read_ziht_config(c, ctx.seed, ctx.workers);
  c.reject_unknown();
  const auto r = simulate_ziht_test(z);
  auto f = detail::open_out(ctx.out_dir, "ziht.csv");
  write_ziht_header(f);
  write_ziht_row(f, z, z.alpha, r);
}

inline FourwayConfig read_fourway_config(RunConfig& c, std::uint64_t seed, unsigned workers) {
  FourwayConfig f;
  f.members = c.get_int("gen.members", f.members);
  f.campaigns = c.get_int("gen.campaigns", f.campaigns);
  f.gen = read_generator_config(c);
  f.original_fraction = c.get_double("original_fraction", f.original_fraction);
  f.delta = c.get_double("delta", f.delta);
  f.lsh = detail::read_lsh(c, seed);
  f.kappa = c.get_double("kappa", f.kappa);
  f.unsub_ratio = c.get_double("unsub_ratio", f.unsub_ratio);
  f.min_2b_ratio = c.get_double("min_2b_ratio", f.min_2b_ratio);
  f.min_2c_ratio = c.get_double("min_2c_ratio", f.min_2c_ratio);
  f.gamma_rel = c.get_double("gamma_rel", f.gamma_rel);
  f.solver = read_solve_options(c, f.solver);
  f.seed = seed;
  f.workers = workers;
  return f;
}

inline void cmd_fourway(CommandContext& ctx) {
  auto& c = ctx.config;
  const auto cfg = read_fourway_config(c, ctx.seed, ctx.workers);
  c.reject_unknown();
  const auto rep = run_fourway(cfg);
  auto f = detail::open_out(ctx.out_dir, "fourway.csv");
  write_fourway_csv(f, rep);
  nlohmann::ordered_json summary;
  summary["audience_accounting"] = "counts over original plus expansion members; uncovered members receive 0 emails";
  summary["metrics"] = "expected values from model scores, not observed outcomes";
  summary["original"] = rep.original_size;
  summary["expansion"] = rep.expansion_size;
  summary["c_unsub"] = rep.budgets.c_unsub;
  summary["c_2b"] = rep.budgets.c_2b;
  summary["c_2c"] = rep.budgets.c_2c;
  summary["c_fcap"] = rep.budgets.c_fcap;
  detail::write_json(ctx.out_dir, "summary.json", summary);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gamma_sweep",   "vertex_fraction", "stale_dual",     "delta_tradeoff",
                                              "ziht_tables",   "bandit_regret",   "pid_closed_loop"};
  return names;
}

inline void run_experiment(const std::string& name, CommandContext& ctx) {
  auto& c = ctx.config;
  const auto& dir = ctx.out_dir;
  if (name == "gamma_sweep") {
    const auto cfg = detail::read_sweep_config(c, ctx.seed, ctx.workers);
    c.reject_unknown();
    write_gamma_sweep(dir, run_gamma_sweep(cfg));
  } else if (name == "vertex_fraction") {
    auto cfg = detail::read_sweep_config(c, ctx.seed, ctx.workers);
    c.reject_unknown();
    const auto v = run_vertex_fraction(cfg);
    auto f = detail::open_out(dir, "vertex_fraction.csv");
    f << "gamma_rel,coordinates,vertex_tol,fraction\n"
      << fmt_double(v.gamma_rel) << ',' << v.coordinates << ',' << fmt_double(cfg.vertex_tol) << ','
      << fmt_double(v.fraction) << '\n';
    auto h = detail::open_out(dir, "vertex_histogram.csv");
    h << "bin_low,bin_high,count\n";
    for (std::size_t k = 0; k < v.histogram.size(); ++k)
      h << fmt_double(0.1 * static_cast<double>(k)) << ',' << fmt_double(0.1 * static_cast<double>(k + 1)) << ','
        << v.histogram[k] << '\n';
  } else if (name == "stale_dual") {
    StaleDualConfig cfg;
    cfg.members = c.get_int("gen.members", cfg.members);
    cfg.campaigns = c.get_int("gen.campaigns", cfg.campaigns);
    cfg.gen = read_generator_config(c);
    cfg.weeks = c.get_count("weeks", static_cast<std::int64_t>(cfg.weeks), 1);
    cfg.jitter = c.get_double("jitter", cfg.jitter);
    cfg.gamma_rel = c.get_double("gamma_rel", cfg.gamma_rel);
    cfg.solver = read_solve_options(c, cfg.solver);
    cfg.seed = ctx.seed;
    cfg.workers = ctx.workers;
    c.reject_unknown();
    const auto rows = run_stale_dual(cfg);
    auto f = detail::open_out(dir, "stale_dual.csv");
    f << "week,fresh_objective,stale_objective,ratio,fresh_feasibility,stale_feasibility\n";
    for (const auto& r : rows)
      f << r.week << ',' << fmt_double(r.fresh_objective) << ',' << fmt_double(r.stale_objective) << ','
        << fmt_double(r.ratio) << ',' << fmt_double(r.fresh_feasibility) << ',' << fmt_double(r.stale_feasibility)
        << '\n';
  } else if (name == "delta_tradeoff") {
    const auto points = c.get_count("points", 2000, 1);
    const auto dim = c.get_count("dim", 8, 1);
    const auto clusters = c.get_count("clusters", 4, 1);
    const double spread = c.get_double("spread", 3.0);
    const double frac = c.get_double("original_fraction", 0.05);
    const auto deltas = c.get_doubles("deltas", {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    const auto lsh = detail::read_lsh(c, ctx.seed);
    c.reject_unknown();
    if (!(frac > 0.0 && frac <= 1.0)) throw ValidationError("original_fraction must be in (0, 1]");
    const auto e = generate_clustered(ctx.seed, points, dim, clusters, spread);
    std::vector<std::size_t> perm(e.ids.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = make_stream(ctx.seed, 0x0e1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> original;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(frac * static_cast<double>(perm.size())));
    for (std::size_t k = 0; k < n; ++k) original.push_back(e.ids[perm[k]]);
    const EmbeddingIndex index(e.ids, e.points, lsh, ctx.workers);
    const auto rows = measure_delta_tradeoff(index, original, deltas);
    auto f = detail::open_out(dir, "delta_tradeoff.csv");
    write_delta_table_csv(f, rows);
  } else if (name == "ziht_tables") {
    ZihtTablesConfig cfg;
    cfg.n_per_arm = c.get_count("n_per_arm", static_cast<std::int64_t>(cfg.n_per_arm), 2);
    cfg.reps = c.get_count("reps", static_cast<std::int64_t>(cfg.reps), 1);
    cfg.dist.mu_log = c.get_double("ln_mu", cfg.dist.mu_log);
    cfg.dist.sigma_log = c.get_double("ln_sigma", cfg.dist.sigma_log);
    cfg.test = parse_ttest_kind(c.get_string("test", to_string(cfg.test)));
    cfg.alphas = c.get_doubles("alphas", cfg.alphas);
    cfg.null_p0 = c.get_doubles("null_p0", cfg.null_p0);
    cfg.power_p0 = c.get_double("power_p0", cfg.power_p0);
    cfg.power_alpha = c.get_double("power_alpha", cfg.power_alpha);
    cfg.power_p_delta = c.get_doubles("power_p_delta", cfg.power_p_delta);
    cfg.power_delta = c.get_doubles("power_delta", cfg.power_delta);
    cfg.seed = ctx.seed;
    cfg.workers = ctx.workers;
    c.reject_unknown();
    const auto t = run_ziht_tables(cfg);
    auto f3 = detail::open_out(dir, "ziht_type1.csv");
    write_ziht_header(f3);
    for (const auto& r : t.type1) write_ziht_row(f3, r.config, r.alpha, r.result);
    auto f4 = detail::open_out(dir, "ziht_power.csv");
    write_ziht_header(f4);
    for (const auto& r : t.power) write_ziht_row(f4, r.config, r.alpha, r.result);
  } else if (name == "bandit_regret") {
    BanditRegretConfig cfg;
    cfg.seeds = c.get_count("seeds", static_cast<std::int64_t>(cfg.seeds), 1);
    cfg.steps = c.get_count("steps", static_cast<std::int64_t>(cfg.steps), 1);
    cfg.dim = c.get_count("dim", static_cast<std::int64_t>(cfg.dim), 1);
    cfg.arms = c.get_count("arms", static_cast<std::int64_t>(cfg.arms), 1);
    cfg.noise_sd = c.get_double("noise_sd", cfg.noise_sd);
    cfg.prior_var = c.get_double("prior_var", cfg.prior_var);
    cfg.link = parse_link(c.get_string("link", to_string(cfg.link)));
    cfg.seed = ctx.seed;
    c.reject_unknown();
    const auto rep = run_bandit_regret(cfg);
    auto f = detail::open_out(dir, "bandit_regret.csv");
    f << "seed,thompson_reward,uniform_reward,thompson_regret,uniform_regret\n";
    for (const auto& r : rep.rows)
      f << r.seed << ',' << fmt_double(r.thompson_reward) << ',' << fmt_double(r.uniform_reward) << ','
        << fmt_double(r.thompson_regret) << ',' << fmt_double(r.uniform_regret) << '\n';
    auto g = detail::open_out(dir, "bandit_regret_curve.csv");
    g << "step,mean_cum_regret_thompson,mean_cum_regret_uniform\n";
    for (std::size_t j = 0; j < rep.mean_cum_regret_thompson.size(); ++j)
      g << j + 1 << ',' << fmt_double(rep.mean_cum_regret_thompson[j]) << ','
        << fmt_double(rep.mean_cum_regret_uniform[j]) << '\n';
  } else if (name == "pid_closed_loop") {
    PidExperimentConfig cfg;
    cfg.target = c.get_double("target", cfg.target);
    cfg.gains.kp = c.get_double("kp", cfg.gains.kp);
    cfg.gains.ki = c.get_double("ki", cfg.gains.ki);
    cfg.gains.kd = c.get_double("kd", cfg.gains.kd);
    cfg.steps = c.get_count("steps", static_cast<std::int64_t>(cfg.steps), 1);
    cfg.overshoot = c.get_double("overshoot", cfg.overshoot);
    cfg.bias_gain = c.get_double("bias_gain", cfg.bias_gain);
    cfg.bias_steps = c.get_count("bias_steps", static_cast<std::int64_t>(cfg.bias_steps), 1);
    cfg.noise_sd = c.get_double("noise_sd", cfg.noise_sd);
    cfg.seed = ctx.seed;
    c.reject_unknown();
    const auto rep = run_pid_closed_loop(cfg);
    auto f = detail::open_out(dir, "pid_closed_loop.csv");
    f << "scenario,step,C_star,observed,error\n";
    auto dump = [&](const char* tag, const std::vector<PlantStep>& tr) {
      for (const auto& s : tr)
        f << tag << ',' << s.step << ',' << fmt_double(s.c_star) << ',' << fmt_double(s.observed) << ','
          << fmt_double(s.error) << '\n';
    };
    dump("overshoot", rep.overshoot_trace);
    dump("bias_pi", rep.bias_with_integral);
    dump("bias_p", rep.bias_without_integral);
  } else {
    throw ValidationError("unknown experiment '" + name + "'");
  }
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "round", "select", "bandit-sim", "pid-sim",
                                              "expand", "ziht", "fourway", "experiment"};
  return names;
}

/// Runs a command. `experiment` takes the experiment name as `arg`.
/// config_used.txt lists every setting that shaped the outputs.
inline void run_command(const std::string& name, const std::string& arg, CommandContext& ctx) {
  fs::create_directories(ctx.out_dir);
  ctx.config.consume("workers");
  ctx.seed = ctx.config.get_seed("seed", ctx.seed);
  if (name == "solve") cmd_solve(ctx);
  else if (name == "round") cmd_round(ctx);
  else if (name == "select") cmd_select(ctx);
  else if (name == "bandit-sim") cmd_bandit_sim(ctx);
  else if (name == "pid-sim") cmd_pid_sim(ctx);
  else if (name == "expand") cmd_expand(ctx);
  else if (name == "ziht") cmd_ziht(ctx);
  else if (name == "fourway") cmd_fourway(ctx);
  else if (name == "experiment") run_experiment(arg, ctx);
  else throw ValidationError("unknown command '" + name + "'");
  auto f = detail::open_out(ctx.out_dir, "config_used.txt");
  f << "# command: " << name << (arg.empty() ? "" : " " + arg) << '\n';
  ctx.config.write_used(f);
}

}  // namespace noah
