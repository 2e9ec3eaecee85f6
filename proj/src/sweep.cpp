#include "opval/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <thread>

namespace opval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Two warm-started chains leaving the center in opposite directions. `solve_row`
// maps (t, warm start) to a row plus the state to carry forward, if usable.
template <class State, class SolveRow>
DensityCurve two_phase_sweep(const SweepGrid& grid, unsigned threads, SolveRow solve_row) {
  grid.validate();
  const auto count = [&](double span) {
    return static_cast<long>(std::floor(span / grid.step + 1e-9));
  };
  const long n_pos = count(grid.t_max - grid.center);
  const long n_neg = count(grid.center - grid.t_min);

  auto center = solve_row(grid.center, std::optional<State>{});

  const auto chain = [&](long n_steps, double direction) {
    std::vector<DensityRow> rows;
    rows.reserve(static_cast<std::size_t>(n_steps));
    std::optional<State> warm = center.second;
    for (long n = 1; n <= n_steps; ++n) {
      const double t = grid.center + direction * grid.step * static_cast<double>(n);
      auto [row, state] = solve_row(t, warm);
      if (state) warm = std::move(state);
      rows.push_back(row);
    }
    return rows;
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const bool parallel = (threads == 0 ? hw : threads) > 1;
  std::vector<DensityRow> pos;
  std::vector<DensityRow> neg;
  if (parallel) {
    auto fut = std::async(std::launch::async, chain, n_neg, -1.0);
    pos = chain(n_pos, 1.0);
    neg = fut.get();
  } else {
    pos = chain(n_pos, 1.0);
    neg = chain(n_neg, -1.0);
  }

  DensityCurve curve;
  curve.rows.reserve(pos.size() + neg.size() + 1);
  curve.rows.insert(curve.rows.end(), neg.rbegin(), neg.rend());
  curve.rows.push_back(center.first);
  curve.rows.insert(curve.rows.end(), pos.begin(), pos.end());
  return curve;
}

}  // namespace

void SweepGrid::validate() const {
  if (!(t_min < t_max)) throw std::invalid_argument("sweep: t_min must be below t_max");
  if (!(step > 0.0)) throw std::invalid_argument("sweep: step must be positive");
  if (!(im_offset > 0.0)) throw std::invalid_argument("sweep: im_offset must be positive");
  if (!(center >= t_min && center <= t_max)) {
    throw std::invalid_argument("sweep: center must lie in [t_min, t_max]");
  }
}

SolveAtResult solve_at(Complex z, const EtaMap& eta, const SolverConfig& config,
                       const std::optional<CMat>& warm_start) {
  if (!(z.imag() > 0.0)) throw ImZNotPositive("solve_at: Im z must be positive");
  const std::size_t d = eta.dim();
  const Problem problem(Complex(0.0, -1.0) * z * CMat::identity(d), eta);
  SolverConfig cfg = config;
  if (warm_start) cfg.initial = *warm_start;
  SolveResult result = solve(problem, cfg);
  CMat g = Complex(0.0, -1.0) * result.w;
  return {std::move(g), std::move(result)};
}

DensityCurve sweep(const SweepConfig& config) {
  const double eps = config.grid.im_offset;
  const double d = static_cast<double>(config.eta.dim());
  return two_phase_sweep<CMat>(
      config.grid, config.threads, [&](double t, const std::optional<CMat>& warm) {
        DensityRow row;
        row.t = t;
        std::optional<CMat> next;
        try {
          auto at = solve_at(Complex(t, eps), config.eta, config.solver, warm);
          row.h = trace(at.g) / d;
          row.iterations = at.result.iterations;
          row.residual = at.result.residual;
          row.positivity_ok = at.result.converged && at.result.certificate.holds() &&
                              at.result.certificate.measured_lambda_min_re > 0.0;
          if (row.positivity_ok) next = std::move(at.result.w);
        } catch (const std::runtime_error&) {
          row.h = Complex(kNaN, kNaN);
          row.residual = kNaN;
        }
        row.density = row.positivity_ok ? -row.h.imag() / std::numbers::pi : kNaN;
        return std::pair{row, std::move(next)};
      });
}

double integrate_density(const DensityCurve& curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.rows.size(); ++i) {
    const auto& a = curve.rows[i - 1];
    const auto& b = curve.rows[i];
    if (std::isfinite(a.density) && std::isfinite(b.density)) {
      total += 0.5 * (a.density + b.density) * (b.t - a.t);
    }
  }
  return total;
}

Complex atomic_cauchy_transform(Complex w, std::span<const Atom> atoms) {
  Complex s{};
  for (const auto& a : atoms) s += a.weight / (w - a.position);
  return s;
}

DeformedResult solve_deformed_scalar(Complex z, double sigma2, std::span<const Atom> atoms,
                                     const DeformedOptions& options) {
  if (!(z.imag() > 0.0)) throw ImZNotPositive("solve_deformed_scalar: Im z must be positive");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("solve_deformed_scalar: sigma2 must be >= 0");
  if (atoms.empty()) throw std::invalid_argument("solve_deformed_scalar: no atoms");
  double mass = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight > 0.0)) throw std::invalid_argument("solve_deformed_scalar: weights must be positive");
    mass += a.weight;
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    throw std::invalid_argument("solve_deformed_scalar: weights must sum to 1");
  }
  if (!(options.theta > 0.0 && options.theta <= 1.0)) {
    throw std::invalid_argument("solve_deformed_scalar: theta must lie in (0, 1]");
  }

  Complex g = options.initial.value_or(Complex(0.0, -1.0));
  for (int n = 0; n < options.max_iter; ++n) {
    const Complex next =
        (1.0 - options.theta) * g + options.theta * atomic_cauchy_transform(z - sigma2 * g, atoms);
    const double step = std::abs(next - g);
    g = next;
    if (step <= options.tol) {
      DeformedResult out{g, n + 1, std::abs(g - atomic_cauchy_transform(z - sigma2 * g, atoms))};
      if (!(g.imag() < 0.0)) {
        throw std::logic_error("solve_deformed_scalar: limit has non-negative imaginary part");
      }
      return out;
    }
  }
  throw NonConvergence("solve_deformed_scalar: no convergence after " +
                       std::to_string(options.max_iter) + " iterations");
}

DensityCurve sweep_deformed_scalar(double sigma2, std::span<const Atom> atoms, const SweepGrid& grid,
                                   const DeformedOptions& options) {
  return two_phase_sweep<Complex>(grid, 1, [&](double t, const std::optional<Complex>& warm) {
    DensityRow row;
    row.t = t;
    std::optional<Complex> next;
    DeformedOptions opts = options;
    if (warm) opts.initial = *warm;
    try {
      const auto r = solve_deformed_scalar(Complex(t, grid.im_offset), sigma2, atoms, opts);
      row.h = r.g;
      row.iterations = r.iterations;
      row.residual = r.residual;
      row.positivity_ok = true;
      next = r.g;
    } catch (const std::runtime_error&) {
      row.h = Complex(kNaN, kNaN);
      row.residual = kNaN;
    } catch (const std::logic_error&) {
      row.h = Complex(kNaN, kNaN);
      row.residual = kNaN;
    }
    row.density = row.positivity_ok ? -row.h.imag() / std::numbers::pi : kNaN;
    return std::pair{row, next};
  });
}

}  // namespace opval
