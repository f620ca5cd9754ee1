#pragma once

// Dual decomposition solver for the box-cut constrained LP
//
//   min y^T a  s.t.  D a <= b,  a_u in B_u,
//
// through its quadratically perturbed version (objective + gamma/2 |a|^2).
// Only D a <= b is dualized; for fixed multipliers the inner minimization
// separates into one box-cut projection per member block.

#include <chrono>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noah/common.hpp"
#include "noah/core.hpp"
#include "noah/projection.hpp"

namespace noah {

enum class SolverMethod { AcceleratedGradient, QuasiNewton };
enum class StepRule { Fixed, Adaptive };

inline SolverMethod parse_solver_method(std::string_view s) {
  if (s == "accelerated_gradient" || s == "agd") return SolverMethod::AcceleratedGradient;
  if (s == "quasi_newton" || s == "lbfgs") return SolverMethod::QuasiNewton;
  throw ValidationError("unknown solver method '" + std::string(s) + "'");
}

inline std::string to_string(SolverMethod m) {
  return m == SolverMethod::AcceleratedGradient ? "accelerated_gradient" : "quasi_newton";
}

inline StepRule parse_step_rule(std::string_view s) {
  if (s == "fixed") return StepRule::Fixed;
  if (s == "adaptive") return StepRule::Adaptive;
  throw ValidationError("unknown step rule '" + std::string(s) + "'");
}

struct SolveOptions {
  int max_iters = 2000;
  StepRule step_rule = StepRule::Adaptive;
  double tol = 1e-6;  // projected-gradient infinity norm (on the preconditioned system)
  bool precondition = true;
  int lbfgs_memory = 8;
  unsigned workers = 1;
  std::vector<double> initial_lambda;  // empty = start at zero
};

struct DualSolution {
  std::vector<double> lambda;
  std::vector<std::string> row_labels;
  double gamma = 0.0;
  std::string fingerprint;
  int iterations = 0;
  bool converged = false;
  std::string created_at;
};

inline nlohmann::ordered_json to_json(const DualSolution& d) {
  nlohmann::ordered_json j;
  j["lambda"] = d.lambda;
  j["row_labels"] = d.row_labels;
  j["gamma"] = d.gamma;
  j["fingerprint"] = d.fingerprint;
  j["created_at"] = d.created_at;
  j["iterations"] = d.iterations;
  j["converged"] = d.converged;
  return j;
}

inline DualSolution dual_from_json(const nlohmann::json& j) {
  try {
    DualSolution d;
    d.lambda = j.at("lambda").get<std::vector<double>>();
    d.row_labels = j.at("row_labels").get<std::vector<std::string>>();
    d.gamma = j.at("gamma").get<double>();
    d.fingerprint = j.at("fingerprint").get<std::string>();
    d.created_at = j.value("created_at", std::string{});
    d.iterations = j.value("iterations", 0);
    d.converged = j.value("converged", false);
    if (d.lambda.size() != d.row_labels.size()) throw ValidationError("dual: lambda and row_labels differ in length");
    for (double l : d.lambda)
      if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("dual: lambda must be finite and nonnegative");
    if (!(d.gamma > 0.0)) throw ValidationError("dual: gamma must be positive");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dual json: ") + e.what());
  }
}

struct TrajectoryPoint {
  int iteration = 0;
  double primal = 0.0;       // y^T a
  double feasibility = 0.0;  // on the unscaled system
  double dual = 0.0;         // g_gamma(lambda)
};

struct SolveReport {
  std::vector<TrajectoryPoint> trajectory;
  double wall_seconds = 0.0;
  PrimalSolution primal;
  DualSolution dual;

  /// Lowest y^T a among iterates whose feasibility is within `max_violation`.
  std::optional<double> best_feasible_objective(double max_violation) const {
    std::optional<double> best;
    for (const auto& p : trajectory)
      if (p.feasibility <= max_violation && (!best || p.primal < *best)) best = p.primal;
    return best;
  }
};

inline void write_trajectory_csv(std::ostream& out, const SolveReport& r) {
  out << "iteration,primal,feasibility,dual\n";
  for (const auto& p : r.trajectory)
    out << p.iteration << ',' << fmt_double(p.primal) << ',' << fmt_double(p.feasibility) << ','
        << fmt_double(p.dual) << '\n';
}

/// Value, gradient and minimizing primal of g_gamma at one multiplier vector.
struct DualEvaluation {
  double value = 0.0;
  std::vector<double> gradient;  // D a_hat - b
  std::vector<double> a;         // a_hat(lambda)
  double objective = 0.0;        // y^T a_hat
  std::vector<double> Da;
};

/// Evaluates g_gamma(lambda) = min_{a in B} y^T a + gamma/2 a^T a + lambda^T (D a - b).
///
/// Per-member projections run on the executor; all sums are taken serially
/// in column order, so results are bit-identical for any worker count.
class DualEvaluator {
 public:
  DualEvaluator(const ConstraintSystem& sys, double gamma, unsigned workers = 1)
      : sys_(sys), gamma_(gamma), exec_(workers) {
    sys.check();
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive and finite");
  }

  const ConstraintSystem& system() const { return sys_; }
  double gamma() const { return gamma_; }

  DualEvaluation operator()(std::span<const double> lambda) const {
    if (lambda.size() != sys_.num_rows()) {
      throw DimensionError("dual evaluation: |lambda| = " + std::to_string(lambda.size()) + " but system has " +
                           std::to_string(sys_.num_rows()) + " coupling rows");
    }
    DualEvaluation ev;
    const std::size_t n = sys_.num_cols();
    std::vector<double> z = sys_.D.transpose_multiply(lambda);
    for (std::size_t c = 0; c < n; ++c) z[c] = -(z[c] + sys_.y[c]) / gamma_;
    ev.a.assign(n, 0.0);
    const std::size_t U = sys_.num_members();
    exec_.parallel_for(U, [&](std::size_t lo, std::size_t hi) {
      std::vector<detail::Breakpoint> scratch;
      for (std::size_t u = lo; u < hi; ++u) {
        const std::size_t b = sys_.member_offsets[u], e = sys_.member_offsets[u + 1];
        if (b == e) continue;
        project_boxcut_into(std::span<const double>(z).subspan(b, e - b), sys_.cap,
                            std::span<double>(ev.a).subspan(b, e - b), scratch);
      }
    });
    ev.Da = sys_.D.multiply(ev.a);
    ev.gradient.resize(sys_.num_rows());
    CompensatedSum total;
    for (std::size_t r = 0; r < sys_.num_rows(); ++r) {
      ev.gradient[r] = ev.Da[r] - sys_.b[r];
      total.add(lambda[r] * ev.Da[r]);
      total.add(-lambda[r] * sys_.b[r]);
    }
    CompensatedSum obj;
    for (std::size_t c = 0; c < n; ++c) {
      const double a = ev.a[c];
      if (a == 0.0) continue;
      obj.add(sys_.y[c] * a);
      total.add(sys_.y[c] * a);
      total.add(0.5 * gamma_ * a * a);
    }
    ev.objective = obj.value();
    ev.value = total.value();
    return ev;
  }

 private:
  const ConstraintSystem& sys_;
  double gamma_;
  Executor exec_;
};

struct DualValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
  PrimalSolution primal;
};

inline DualValueAndGradient dual_value_and_gradient(const ConstraintSystem& sys, std::span<const double> lambda,
                                                    double gamma, unsigned workers = 1) {
  DualEvaluator eval(sys, gamma, workers);
  auto ev = eval(lambda);
  DualValueAndGradient out;
  out.value = ev.value;
  out.gradient = ev.gradient;
  out.primal.objective = ev.objective;
  out.primal.per_row_slack.resize(ev.gradient.size());
  for (std::size_t r = 0; r < ev.gradient.size(); ++r) out.primal.per_row_slack[r] = -ev.gradient[r];
  out.primal.feasibility = feasibility_score(sys, ev.a);
  out.primal.a = std::move(ev.a);
  return out;
}

// ---------------------------------------------------------------------------
// Preconditioning
// ---------------------------------------------------------------------------

struct RowScaling {
  std::vector<double> factors;  // scaled row i = factors[i] * original row i

  std::vector<double> unscale_lambda(std::span<const double> scaled) const {
    std::vector<double> out(scaled.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factors[i] * scaled[i];
    return out;
  }
  std::vector<double> scale_lambda(std::span<const double> original) const {
    std::vector<double> out(original.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = original[i] / factors[i];
    return out;
  }
};

struct Preconditioned {
  ConstraintSystem system;
  RowScaling scaling;
};

inline constexpr double kScaleFloor = 1e-12;

/// Scales row i of (D, b) by 1 / max(|b_i|, |d_i|_2, floor). The feasible set
/// is unchanged and multipliers map back via lambda = s * lambda_scaled.
inline Preconditioned precondition(const ConstraintSystem& sys) {
  sys.check();
  Preconditioned out{sys, {}};
  auto& s = out.system;
  out.scaling.factors.resize(sys.num_rows());
  for (std::size_t r = 0; r < sys.num_rows(); ++r) {
    const double f = 1.0 / std::max({std::abs(sys.b[r]), sys.D.row_norm(r), kScaleFloor});
    out.scaling.factors[r] = f;
    for (std::size_t k = s.D.row_ptr[r]; k < s.D.row_ptr[r + 1]; ++k) s.D.vals[k] *= f;
    s.b[r] *= f;
  }
  s.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace detail {

/// Estimate of the largest eigenvalue of D D^T by power iteration.
inline double spectral_norm_sq(const SparseRows& D) {
  const std::size_t K = D.rows();
  if (K == 0) return 0.0;
  std::vector<double> gram(K * K, 0.0), dense(D.cols, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t k = D.row_ptr[i]; k < D.row_ptr[i + 1]; ++k) dense[D.col_idx[k]] = D.vals[k];
    for (std::size_t r = i; r < K; ++r) {
      const double v = D.row_dot(r, dense);
      gram[i * K + r] = gram[r * K + i] = v;
    }
    for (std::size_t k = D.row_ptr[i]; k < D.row_ptr[i + 1]; ++k) dense[D.col_idx[k]] = 0.0;
  }
  // A single start can be orthogonal to the top eigenvector (the uniform
  // vector is, for a 2x2 Gram with eigenvector (1, -1)), so also start from
  // every basis vector and keep the largest estimate.
  double est = 0.0;
  std::vector<double> v(K), w(K);
  for (std::size_t start = 0; start <= K; ++start) {
    if (start == K) {
      std::fill(v.begin(), v.end(), 1.0 / std::sqrt(static_cast<double>(K)));
    } else {
      std::fill(v.begin(), v.end(), 0.0);
      v[start] = 1.0;
    }
    double nrm = 0.0;
    for (int it = 0; it < 200; ++it) {
      for (std::size_t i = 0; i < K; ++i) {
        w[i] = 0.0;
        for (std::size_t r = 0; r < K; ++r) w[i] += gram[i * K + r] * v[r];
      }
      nrm = 0.0;
      for (double x : w) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) break;
      for (std::size_t i = 0; i < K; ++i) v[i] = w[i] / nrm;
    }
    est = std::max(est, nrm);
  }
  if (est == 0.0) return 0.0;
  // Power iteration approaches the top eigenvalue from below.
  double trace = 0.0;
  for (std::size_t i = 0; i < K; ++i) trace += gram[i * K + i];
  return std::min(est * 1.01, trace);
}

inline double projected_gradient_norm(std::span<const double> lambda, std::span<const double> grad) {
  double m = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double pg = lambda[i] > 0.0 ? grad[i] : std::max(grad[i], 0.0);
    m = std::max(m, std::abs(pg));
  }
  return m;
}

class SolverCore {
 public:
  SolverCore(const ConstraintSystem& original, const ConstraintSystem& working, const RowScaling* scaling,
             double gamma, const SolveOptions& opts)
      : original_(original), eval_(working, gamma, opts.workers), scaling_(scaling), opts_(opts) {
    lipschitz_ = spectral_norm_sq(working.D) / gamma;
    if (!(lipschitz_ > 0.0)) lipschitz_ = 1.0;
    step_L_ = opts.step_rule == StepRule::Fixed ? lipschitz_ : lipschitz_ * 1e-6;
  }

  DualEvaluation eval(std::span<const double> lambda) const { return eval_(lambda); }

  void record(int iteration, const DualEvaluation& ev) {
    TrajectoryPoint p;
    p.iteration = iteration;
    p.primal = ev.objective;
    p.dual = ev.value;
    double worst = 0.0;
    for (std::size_t r = 0; r < original_.num_rows(); ++r) {
      const double Da = scaling_ ? ev.Da[r] / scaling_->factors[r] : ev.Da[r];
      worst = std::max(worst, (Da - original_.b[r]) / (1.0 + std::abs(original_.b[r])));
    }
    p.feasibility = worst;
    trajectory.push_back(p);
  }

  /// Projected gradient ascent step from lambda that does not decrease g.
  /// Returns false if no ascent is possible at the Lipschitz bound.
  bool gradient_step(const std::vector<double>& lambda, const DualEvaluation& at, std::vector<double>& out_lambda,
                     DualEvaluation& out_eval) {
    while (true) {
      out_lambda.resize(lambda.size());
      for (std::size_t i = 0; i < lambda.size(); ++i)
        out_lambda[i] = std::max(0.0, lambda[i] + at.gradient[i] / step_L_);
      out_eval = eval(out_lambda);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double d = out_lambda[i] - lambda[i];
        lin += at.gradient[i] * d;
        sq += d * d;
      }
      const bool sufficient = out_eval.value >= at.value + lin - 0.5 * step_L_ * sq;
      if ((sufficient && out_eval.value >= at.value) || ascent_certified(lambda, out_lambda, out_eval)) return true;
      if (step_L_ >= lipschitz_) return out_eval.value >= at.value;
      step_L_ = std::min(2.0 * step_L_, lipschitz_);
    }
  }

  /// True when g(to) >= g(from) follows from concavity alone: if the slope of
  /// g along the segment is still nonnegative at `to`, it was nonnegative
  /// everywhere before. Unlike comparing values this is immune to cancellation
  /// when the gain is far below the magnitude of g.
  static bool ascent_certified(std::span<const double> from, std::span<const double> to, const DualEvaluation& at_to) {
    CompensatedSum slope;
    bool moved = false;
    for (std::size_t i = 0; i < from.size(); ++i) {
      slope.add(at_to.gradient[i] * (to[i] - from[i]));
      moved = moved || to[i] != from[i];
    }
    return moved && slope.value() >= 0.0;
  }

  void relax_step() {
    if (opts_.step_rule == StepRule::Adaptive) step_L_ = std::max(step_L_ * 0.5, lipschitz_ * 1e-15);
  }

  double step_L() const { return step_L_; }
  double& step_L_ref() { return step_L_; }
  double lipschitz() const { return lipschitz_; }

  std::vector<TrajectoryPoint> trajectory;

 private:
  const ConstraintSystem& original_;
  DualEvaluator eval_;
  const RowScaling* scaling_;
  const SolveOptions& opts_;
  double lipschitz_ = 1.0;
  double step_L_ = 1.0;
};

struct IterateResult {
  std::vector<double> lambda;
  int iterations = 0;
  bool converged = false;
};

/// Accelerated projected gradient ascent with function-value restart: an
/// extrapolated step that would lower g is discarded and momentum is reset,
/// so the accepted iterates are monotone in g.
inline IterateResult run_accelerated(SolverCore& core, std::vector<double> lambda, const SolveOptions& opts) {
  DualEvaluation at = core.eval(lambda);
  core.record(0, at);
  std::vector<double> probe = lambda, cand, prev;
  DualEvaluation probe_eval = at, cand_eval;
  double theta = 1.0;
  bool probe_is_lambda = true;
  int it = 0;
  while (it < opts.max_iters) {
    if (projected_gradient_norm(lambda, at.gradient) <= opts.tol) return {lambda, it, true};
    ++it;
    bool ok = core.gradient_step(probe, probe_eval, cand, cand_eval);
    if (!ok || (cand_eval.value < at.value && !SolverCore::ascent_certified(lambda, cand, cand_eval))) {
      if (probe_is_lambda) break;  // stalled at the Lipschitz bound
      theta = 1.0;
      probe = lambda;
      probe_eval = at;
      probe_is_lambda = true;
      continue;
    }
    prev = std::move(lambda);
    lambda = cand;
    at = std::move(cand_eval);
    core.record(it, at);
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double beta = (theta - 1.0) / theta_next;
    theta = theta_next;
    probe.resize(lambda.size());
    bool moved = false;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      probe[i] = std::max(0.0, lambda[i] + beta * (lambda[i] - prev[i]));
      moved = moved || probe[i] != lambda[i];
    }
    if (moved) {
      probe_eval = core.eval(probe);
      probe_is_lambda = false;
    } else {
      probe_eval = at;
      probe_is_lambda = true;
    }
    core.relax_step();
  }
  return {lambda, it, projected_gradient_norm(lambda, at.gradient) <= opts.tol};
}

/// Projected L-BFGS ascent: the quasi-Newton direction acts on the free
/// variables (positive, or at zero with an outward gradient); the line search
/// projects onto lambda >= 0 and requires Armijo ascent. Falls back to a
/// projected gradient step whenever the direction or line search fails.
inline IterateResult run_quasi_newton(SolverCore& core, std::vector<double> lambda, const SolveOptions& opts) {
  const std::size_t K = lambda.size();
  DualEvaluation at = core.eval(lambda);
  core.record(0, at);
  std::deque<std::vector<double>> S, Y;
  std::vector<double> cand, dir(K), q(K);
  DualEvaluation cand_eval;
  int it = 0;
  while (it < opts.max_iters) {
    if (projected_gradient_norm(lambda, at.gradient) <= opts.tol) return {lambda, it, true};
    ++it;
    // Work with f = -g (minimization); gf = -gradient.
    std::vector<bool> free(K);
    for (std::size_t i = 0; i < K; ++i) free[i] = lambda[i] > 0.0 || at.gradient[i] > 0.0;
    bool have_dir = false;
    if (!S.empty()) {
      for (std::size_t i = 0; i < K; ++i) q[i] = free[i] ? -at.gradient[i] : 0.0;
      std::vector<double> alpha(S.size());
      for (std::size_t m = S.size(); m-- > 0;) {
        double sy = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < K; ++i)
          if (free[i]) {
            sy += S[m][i] * Y[m][i];
            sq += S[m][i] * q[i];
          }
        if (sy <= 0.0) continue;
        alpha[m] = sq / sy;
        for (std::size_t i = 0; i < K; ++i)
          if (free[i]) q[i] -= alpha[m] * Y[m][i];
      }
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < K; ++i)
        if (free[i]) {
          sy += S.back()[i] * Y.back()[i];
          yy += Y.back()[i] * Y.back()[i];
        }
      const double h0 = (sy > 0.0 && yy > 0.0) ? sy / yy : 1.0 / core.lipschitz();
      for (std::size_t i = 0; i < K; ++i) q[i] *= h0;
      for (std::size_t m = 0; m < S.size(); ++m) {
        double sy_m = 0.0, yq = 0.0;
        for (std::size_t i = 0; i < K; ++i)
          if (free[i]) {
            sy_m += S[m][i] * Y[m][i];
            yq += Y[m][i] * q[i];
          }
        if (sy_m <= 0.0) continue;
        const double beta = yq / sy_m;
        for (std::size_t i = 0; i < K; ++i)
          if (free[i]) q[i] += S[m][i] * (alpha[m] - beta);
      }
      double slope = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        dir[i] = free[i] ? -q[i] : 0.0;  // ascent direction for g
        slope += dir[i] * at.gradient[i];
      }
      have_dir = slope > 0.0 && all_finite(dir);
    }

    bool accepted = false;
    if (have_dir) {
      double step = 1.0;
      for (int ls = 0; ls < 40 && !accepted; ++ls, step *= 0.5) {
        cand.resize(K);
        double lin = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
          cand[i] = std::max(0.0, lambda[i] + step * dir[i]);
          lin += at.gradient[i] * (cand[i] - lambda[i]);
        }
        if (cand == lambda) break;
        cand_eval = core.eval(cand);
        accepted = (cand_eval.value >= at.value + 1e-4 * lin && cand_eval.value >= at.value) ||
                   SolverCore::ascent_certified(lambda, cand, cand_eval);
      }
    }
    if (!accepted) {
      S.clear();
      Y.clear();
      if (!core.gradient_step(lambda, at, cand, cand_eval)) break;
      core.relax_step();
    }
    std::vector<double> s(K), y(K);
    double sy = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      s[i] = cand[i] - lambda[i];
      y[i] = at.gradient[i] - cand_eval.gradient[i];  // gradient change of f = -g
      sy += s[i] * y[i];
    }
    if (sy > 1e-300) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      if (static_cast<int>(S.size()) > opts.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
      }
    }
    lambda = cand;
    at = std::move(cand_eval);
    core.record(it, at);
  }
  return {lambda, it, projected_gradient_norm(lambda, at.gradient) <= opts.tol};
}

}  // namespace detail

/// Primal recovery at stored multipliers. Row labels must match;
/// the column set may differ (members come and go between periods).
inline PrimalSolution primal_from_dual(const ConstraintSystem& sys, const DualSolution& dual, unsigned workers = 1) {
  if (dual.row_labels != sys.row_labels)
    throw ContractError("primal_from_dual: dual row labels do not match the system's coupling rows");
  return dual_value_and_gradient(sys, dual.lambda, dual.gamma, workers).primal;
}

inline SolveReport solve(const ConstraintSystem& sys, double gamma, SolverMethod method,
                         const SolveOptions& opts = {}) {
  sys.check();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("solve: gamma must be positive and finite");
  if (opts.max_iters < 0) throw ValidationError("solve: max_iters must be nonnegative");
  const auto t0 = std::chrono::steady_clock::now();

  std::optional<Preconditioned> pre;
  if (opts.precondition) pre = precondition(sys);
  const ConstraintSystem& working = pre ? pre->system : sys;
  const RowScaling* scaling = pre ? &pre->scaling : nullptr;

  std::vector<double> lambda0(sys.num_rows(), 0.0);
  if (!opts.initial_lambda.empty()) {
    if (opts.initial_lambda.size() != sys.num_rows()) throw DimensionError("solve: initial_lambda length mismatch");
    lambda0 = scaling ? scaling->scale_lambda(opts.initial_lambda) : opts.initial_lambda;
    for (auto& l : lambda0) l = std::max(0.0, l);
  }

  detail::SolverCore core(sys, working, scaling, gamma, opts);
  detail::IterateResult res = method == SolverMethod::AcceleratedGradient
                                  ? detail::run_accelerated(core, std::move(lambda0), opts)
                                  : detail::run_quasi_newton(core, std::move(lambda0), opts);

  SolveReport report;
  report.trajectory = std::move(core.trajectory);
  report.dual.lambda = scaling ? scaling->unscale_lambda(res.lambda) : res.lambda;
  report.dual.row_labels = sys.row_labels;
  report.dual.gamma = gamma;
  report.dual.fingerprint = sys.fingerprint.empty() ? sys.compute_fingerprint() : sys.fingerprint;
  report.dual.iterations = res.iterations;
  report.dual.converged = res.converged;
  report.primal = primal_from_dual(sys, report.dual, opts.workers);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// Regularization strength
// ---------------------------------------------------------------------------

inline constexpr double kDefaultGammaRatioThreshold = 1e-3;

/// gamma a^T a / (2 |y^T a|); +inf when y^T a = 0.
inline double regularizer_ratio(const ConstraintSystem& sys, std::span<const double> a, double gamma) {
  const double obj = std::abs(dot(sys.y, a));
  if (obj == 0.0) return std::numeric_limits<double>::infinity();
  return gamma * dot(a, a) / (2.0 * obj);
}

struct GammaSelection {
  double gamma = 0.0;
  std::vector<double> grid;
  std::vector<double> ratios;  // one per grid entry that was solved
};

/// Largest grid value whose solution keeps the regularizer ratio under the
/// threshold; the smallest grid value if none does. Grid must be descending.
inline GammaSelection select_gamma(const ConstraintSystem& sys, const std::vector<double>& grid,
                                   double threshold = kDefaultGammaRatioThreshold,
                                   SolverMethod method = SolverMethod::AcceleratedGradient,
                                   const SolveOptions& opts = {}) {
  if (grid.empty()) throw ValidationError("select_gamma: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw ValidationError("select_gamma: grid values must be positive");
    if (i > 0 && !(grid[i] < grid[i - 1])) throw ValidationError("select_gamma: grid must be strictly descending");
  }
  GammaSelection out;
  out.grid = grid;
  out.gamma = grid.back();
  for (double g : grid) {
    const auto rep = solve(sys, g, method, opts);
    const double ratio = regularizer_ratio(sys, rep.primal.a, g);
    out.ratios.push_back(ratio);
    if (ratio < threshold) {
      out.gamma = g;
      break;
    }
  }
  return out;
}

/// Share of coordinates within `tol` of 0 or 1.
inline double vertex_fraction(std::span<const double> a, double tol = 1e-6) {
  if (a.empty()) return 1.0;
  std::size_t n = 0;
  for (double v : a)
    if (std::abs(v) <= tol || std::abs(v - 1.0) <= tol) ++n;
  return static_cast<double>(n) / static_cast<double>(a.size());
}

}  // namespace noah
