#include "opval/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace opval {

namespace {

constexpr double kCertificateSlack = 1e-8;
constexpr double kJacobianPivotTol = 1e-12;
constexpr double kOscillationRatio = 1e-3;

void validate(const Problem& problem, const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
  if (config.max_iter < 0) throw std::invalid_argument("solver: max_iter must be non-negative");
  if (!(config.theta > 0.0 && config.theta <= 1.0)) {
    throw std::invalid_argument("solver: theta must lie in (0, 1]");
  }
  if (config.initial && config.initial->dim() != problem.dim()) {
    throw DimensionMismatch("solver: initial point has the wrong dimension");
  }
}

CMat initial_point(const Problem& problem, const SolverConfig& config) {
  return config.initial ? *config.initial : CMat::identity(problem.dim());
}

void finalize(const Problem& problem, SolveResult& r) {
  r.residual = residual_norm(problem, r.w);
  r.certificate = certify(problem, r.w);
  r.wrong_root = r.converged && !r.certificate.holds();
}

struct DampedRun {
  CMat w;
  double residual = 0.0;
  double step = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;      // residual <= tol and step <= tol
  bool reached_stop = false;   // residual <= stop_residual
  bool oscillation = false;
};

// W <- (1 - theta) W + theta [V + eta(W)]^{-1}. Stops on convergence, when
// the residual drops to `stop_residual` (if positive), or after max_iter steps.
DampedRun run_damped(const Problem& problem, const SolverConfig& config, double theta, CMat w,
                     int max_iter, int iteration_offset, double stop_residual,
                     std::vector<double>* trace) {
  const std::size_t d = problem.dim();
  const CMat id = CMat::identity(d);
  DampedRun run{std::move(w)};
  std::optional<CMat> previous;

  for (int n = 0;; ++n) {
    const CMat k = problem.v() + problem.eta().eval(run.w);
    const double res = fro_norm(k * run.w - id);
    run.residual = res;
    run.iterations = n;
    if (trace) trace->push_back(res);
    if (stop_residual > 0.0 && res <= stop_residual) {
      run.reached_stop = true;
      return run;
    }
    const CMat f = inverse(k);
    CMat next = theta == 1.0 ? f : (1.0 - theta) * run.w + theta * f;
    const double step = fro_norm(next - run.w);
    if (res <= config.tol && step <= config.tol) {
      run.step = step;
      run.converged = true;
      return run;
    }
    if (n >= max_iter) return run;

    if (previous && step > config.tol && fro_norm(next - *previous) < kOscillationRatio * step) {
      run.oscillation = true;
    }
    run.step = step;
    previous = std::move(run.w);
    run.w = std::move(next);
    if (config.observer) config.observer(iteration_offset + n + 1, run.w);
  }
}

SolveResult damped_solve(const Problem& problem, const SolverConfig& config, double theta,
                         Method tag) {
  validate(problem, config);
  SolveResult r;
  r.method_used = tag;
  CMat w0 = initial_point(problem, config);
  if (config.observer) config.observer(0, w0);
  auto run = run_damped(problem, config, theta, std::move(w0), config.max_iter, 0, 0.0,
                        config.record_trace ? &r.trace : nullptr);
  r.w = std::move(run.w);
  r.step = run.step;
  r.iterations = run.iterations;
  r.converged = run.converged;
  r.oscillation_detected = run.oscillation;
  r.status = run.converged ? SolveStatus::converged : SolveStatus::max_iter_exceeded;
  finalize(problem, r);
  return r;
}

CMat jacobian(const Problem& problem, const CMat& l, const CMat& w, const CMat& eta_w) {
  const CMat id = CMat::identity(problem.dim());
  return kron(id, problem.v()) + kron(transpose(w), id) * l + kron(id, eta_w);
}

CMat newton_update(const Problem& problem, const CMat& l, const CMat& w) {
  const CMat eta_w = problem.eta().eval(w);
  const CMat r = problem.v() * w + eta_w * w - CMat::identity(problem.dim());
  const CMat j = jacobian(problem, l, w, eta_w);
  try {
    const LuDecomp lu(j, kJacobianPivotTol);
    return w - unvec(lu.solve(vec(r)), problem.dim());
  } catch (const SingularMatrix& e) {
    throw SingularJacobian(std::string("newton: ") + e.what());
  }
}

struct NewtonRun {
  CMat w;
  double residual = 0.0;
  double step = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

NewtonRun run_newton(const Problem& problem, const SolverConfig& config, const CMat& l, CMat w,
                     int max_iter, int iteration_offset, std::vector<double>* trace) {
  NewtonRun run{std::move(w)};
  for (int n = 0;; ++n) {
    run.residual = residual_norm(problem, run.w);
    run.iterations = n;
    if (trace) trace->push_back(run.residual);
    if (run.residual <= config.tol && run.step <= config.tol) {
      run.converged = true;
      return run;
    }
    if (n >= max_iter || !std::isfinite(run.residual)) return run;
    CMat next{1};
    try {
      next = newton_update(problem, l, run.w);
    } catch (const SingularJacobian&) {
      run.singular = true;
      return run;
    }
    run.step = fro_norm(next - run.w);
    run.w = std::move(next);
    if (config.observer) config.observer(iteration_offset + n + 1, run.w);
  }
}

}  // namespace

Problem::Problem(CMat v, EtaMap eta) : v_(std::move(v)), eta_(std::move(eta)) {
  if (v_.dim() != eta_.dim()) throw DimensionMismatch("Problem: V and eta dimensions differ");
  margin_ = lambda_min(re_part(v_));
  if (!(margin_ > 0.0)) {
    throw NotInRightHalfPlane("Problem: lambda_min(Re V) = " + std::to_string(margin_) +
                              " is not positive");
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::plain: return "plain";
    case Method::averaged: return "averaged";
    case Method::newton: return "newton";
    case Method::hybrid: return "hybrid";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::plain, Method::averaged, Method::newton, Method::hybrid})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter_exceeded: return "max_iter_exceeded";
    case SolveStatus::singular_jacobian: return "singular_jacobian";
  }
  return "unknown";
}

CMat apply_F(const Problem& problem, const CMat& w) {
  return inverse(problem.v() + problem.eta().eval(w));
}

CMat residual_matrix(const Problem& problem, const CMat& w) {
  return problem.v() * w + problem.eta().eval(w) * w - CMat::identity(problem.dim());
}

double residual_norm(const Problem& problem, const CMat& w) {
  return fro_norm(residual_matrix(problem, w));
}

PositivityCertificate certify(const Problem& problem, const CMat& w) {
  PositivityCertificate c;
  c.norm_bound = problem.norm_bound();
  c.m = op_norm(problem.v()) + problem.eta().bound(c.norm_bound);
  c.re_lower_bound = 1.0 / (c.m * c.m * c.norm_bound);
  c.measured_norm = op_norm(w);
  c.measured_lambda_min_re = lambda_min(re_part(w));
  c.norm_holds = c.measured_norm <= c.norm_bound + kCertificateSlack;
  // The slack never exceeds half the certified margin, so W with Re W not
  // positive definite cannot pass even when the margin itself is tiny.
  const double re_slack = std::min(kCertificateSlack, 0.5 * c.re_lower_bound);
  c.re_holds = c.measured_lambda_min_re >= c.re_lower_bound - re_slack;
  return c;
}

SolveResult solve_plain(const Problem& problem, const SolverConfig& config) {
  return damped_solve(problem, config, 1.0, Method::plain);
}

SolveResult solve_averaged(const Problem& problem, const SolverConfig& config) {
  return damped_solve(problem, config, config.theta, Method::averaged);
}

CMat newton_step(const Problem& problem, const CMat& w) {
  return newton_update(problem, problem.eta().to_linear_tensor(), w);
}

SolveResult solve_newton(const Problem& problem, const SolverConfig& config) {
  validate(problem, config);
  const CMat l = problem.eta().to_linear_tensor();
  SolveResult r;
  r.method_used = Method::newton;
  CMat w0 = initial_point(problem, config);
  if (config.observer) config.observer(0, w0);
  auto run = run_newton(problem, config, l, std::move(w0), config.max_iter, 0,
                        config.record_trace ? &r.trace : nullptr);
  r.w = std::move(run.w);
  r.step = run.step;
  r.iterations = run.iterations;
  r.newton_iterations = run.iterations;
  r.converged = run.converged;
  r.status = run.converged  ? SolveStatus::converged
             : run.singular ? SolveStatus::singular_jacobian
                            : SolveStatus::max_iter_exceeded;
  finalize(problem, r);
  return r;
}

SolveResult solve_hybrid(const Problem& problem, const SolverConfig& config) {
  validate(problem, config);
  const CMat l = problem.eta().to_linear_tensor();
  std::vector<double>* trace = nullptr;
  SolveResult r;
  r.method_used = Method::hybrid;
  if (config.record_trace) trace = &r.trace;

  CMat w0 = initial_point(problem, config);
  if (config.observer) config.observer(0, w0);
  const bool switching = config.newton_switch_tol > config.tol;

  auto approach = run_damped(problem, config, config.theta, std::move(w0), config.max_iter, 0,
                             switching ? config.newton_switch_tol : 0.0, trace);
  int used = approach.iterations;
  if (approach.reached_stop) {
    const int budget = std::min(config.newton_max_iter, std::max(config.max_iter - used, 0));
    auto newton = run_newton(problem, config, l, approach.w, budget, used, trace);
    r.newton_iterations = newton.iterations;
    if (newton.converged && certify(problem, newton.w).holds()) {
      r.w = std::move(newton.w);
      r.step = newton.step;
      r.iterations = used + newton.iterations;
      r.converged = true;
      r.status = SolveStatus::converged;
      finalize(problem, r);
      return r;
    }
    // Newton left A_+ or stalled; resume the contraction from where it started.
    r.newton_fallback = true;
    used += newton.iterations;
    approach = run_damped(problem, config, config.theta, std::move(approach.w),
                          std::max(config.max_iter - used, 0), used, 0.0, trace);
    used += approach.iterations;
  }
  r.w = std::move(approach.w);
  r.step = approach.step;
  r.iterations = used;
  r.converged = approach.converged;
  r.oscillation_detected = approach.oscillation;
  r.status = approach.converged ? SolveStatus::converged : SolveStatus::max_iter_exceeded;
  finalize(problem, r);
  return r;
}

SolveResult solve(const Problem& problem, const SolverConfig& config) {
  switch (config.method) {
    case Method::plain: return solve_plain(problem, config);
    case Method::averaged: return solve_averaged(problem, config);
    case Method::newton: return solve_newton(problem, config);
    case Method::hybrid: return solve_hybrid(problem, config);
  }
  throw std::invalid_argument("solve: unknown method");
}

std::optional<CMat> initial_preset(std::string_view name, std::size_t dim) {
  if (name == "identity" || name == "default") return CMat::identity(dim);
  if (name == "toeplitz3-start") {
    if (dim != 3) return std::nullopt;
    const Complex diag(1.0, -0.1);
    return Complex(0.0, 1.0) * toeplitz3_pattern(diag, diag, 1.0);
  }
  return std::nullopt;
}

}  // namespace opval
