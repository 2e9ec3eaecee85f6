#pragma once

#include <optional>
#include <span>
#include <vector>

#include "opval/eta_map.hpp"
#include "opval/solver.hpp"

namespace opval {

class ImZNotPositive : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SolveAtResult {
  CMat g;  // G(z) = -i W(z)
  SolveResult result;
};

// Solves -i z W + eta(W) W = I and converts back with G = -i W.
SolveAtResult solve_at(Complex z, const EtaMap& eta, const SolverConfig& config,
                       const std::optional<CMat>& warm_start = std::nullopt);

// Grid t_c + k * step restricted to [t_min, t_max], evaluated at t + i * im_offset.
struct SweepGrid {
  double t_min = -3.0;
  double t_max = 3.0;
  double step = 0.01;
  double im_offset = 1e-6;
  double center = 0.0;

  void validate() const;
};

struct SweepConfig {
  EtaMap eta;
  SweepGrid grid;
  SolverConfig solver;
  unsigned threads = 0;  // 0: one chain per direction if hardware allows
};

struct DensityRow {
  double t = 0.0;
  double density = 0.0;  // NaN when the row failed
  Complex h;             // tr_d G(t + i eps)
  int iterations = 0;
  double residual = 0.0;
  bool positivity_ok = false;
};

struct DensityCurve {
  std::vector<DensityRow> rows;  // ascending t
};

// Center first, then two warm-started chains marching to t_max and t_min.
// Failed rows are flagged rather than aborting the sweep.
DensityCurve sweep(const SweepConfig& config);

// Trapezoid rule over consecutive rows with finite density.
double integrate_density(const DensityCurve& curve);

// Deformed scalar equation g = G1(z - sigma2 g) where G1 is the Cauchy
// transform of a finite atomic measure.
struct Atom {
  double weight = 1.0;
  double position = 0.0;
};

struct DeformedOptions {
  double theta = 0.5;  // g <- (1 - theta) g + theta G1(z - sigma2 g)
  double tol = 1e-13;  // on |g_{n+1} - g_n|
  int max_iter = 5000000;
  std::optional<Complex> initial;  // -i when empty
};

struct DeformedResult {
  Complex g;
  int iterations = 0;
  double residual = 0.0;  // |g - G1(z - sigma2 g)|
};

Complex atomic_cauchy_transform(Complex w, std::span<const Atom> atoms);

// Throws NonConvergence after max_iter, ImZNotPositive for Im z <= 0.
DeformedResult solve_deformed_scalar(Complex z, double sigma2, std::span<const Atom> atoms,
                                     const DeformedOptions& options = {});

DensityCurve sweep_deformed_scalar(double sigma2, std::span<const Atom> atoms, const SweepGrid& grid,
                                   const DeformedOptions& options = {});

}  // namespace opval
