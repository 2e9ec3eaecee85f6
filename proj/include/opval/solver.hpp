#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "opval/eta_map.hpp"
#include "opval/linalg.hpp"

namespace opval {

class NotInRightHalfPlane : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The equation V W + eta(W) W = I with V in A_+ (Re V positive definite).
class Problem {
 public:
  Problem(CMat v, EtaMap eta);

  std::size_t dim() const { return v_.dim(); }
  const CMat& v() const { return v_; }
  const EtaMap& eta() const { return eta_; }
  double margin() const { return margin_; }                 // lambda_min(Re V)
  double norm_bound() const { return 1.0 / margin_; }       // ||(Re V)^{-1}||

 private:
  CMat v_;
  EtaMap eta_;
  double margin_;
};

enum class Method { plain, averaged, newton, hybrid };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

enum class SolveStatus { converged, max_iter_exceeded, singular_jacobian };

std::string_view to_string(SolveStatus s);

struct SolverConfig {
  Method method = Method::averaged;
  double theta = 0.5;               // W <- (1 - theta) W + theta F(W)
  double tol = 1e-12;               // Frobenius residual and step tolerance
  int max_iter = 200000;
  int newton_max_iter = 100;        // cap on Newton steps inside hybrid
  double newton_switch_tol = 1e-3;  // hybrid hands over to Newton below this residual
  std::optional<CMat> initial;      // identity when empty
  bool record_trace = false;
  // Called with (iteration, iterate) for every iterate, including the initial one.
  std::function<void(int, const CMat&)> observer;
};

struct PositivityCertificate {
  double norm_bound = 0.0;       // ||(Re V)^{-1}||
  double m = 0.0;                // ||V|| + bound(eta, norm_bound)
  double re_lower_bound = 0.0;   // 1 / (m^2 ||(Re V)^{-1}||)
  double measured_norm = 0.0;
  double measured_lambda_min_re = 0.0;
  bool norm_holds = false;
  bool re_holds = false;

  bool holds() const { return norm_holds && re_holds; }
};

struct SolveResult {
  CMat w{1};
  double residual = 0.0;   // ||V W + eta(W) W - I||_F, re-evaluated on the returned W
  double step = 0.0;       // last ||W_{n+1} - W_n||_F
  int iterations = 0;
  int newton_iterations = 0;
  bool converged = false;
  bool wrong_root = false;         // converged, but outside A_+ per the certificate
  bool newton_fallback = false;    // hybrid abandoned a Newton phase
  bool oscillation_detected = false;
  SolveStatus status = SolveStatus::max_iter_exceeded;
  Method method_used = Method::averaged;
  PositivityCertificate certificate;
  std::vector<double> trace;
};

// [V + eta(W)]^{-1}
CMat apply_F(const Problem& problem, const CMat& w);

// V W + eta(W) W - I
CMat residual_matrix(const Problem& problem, const CMat& w);
double residual_norm(const Problem& problem, const CMat& w);

PositivityCertificate certify(const Problem& problem, const CMat& w);

SolveResult solve_plain(const Problem& problem, const SolverConfig& config);
SolveResult solve_averaged(const Problem& problem, const SolverConfig& config);

// W - unvec(J^{-1} vec R(W)) with J = (I kron V) + (W^T kron I) L + (I kron eta(W)).
// Throws NotLinear for callback maps, SingularJacobian on a tiny pivot.
CMat newton_step(const Problem& problem, const CMat& w);
SolveResult solve_newton(const Problem& problem, const SolverConfig& config);

SolveResult solve_hybrid(const Problem& problem, const SolverConfig& config);

// Dispatches on config.method.
SolveResult solve(const Problem& problem, const SolverConfig& config);

// Named initial points. "identity", and "toeplitz3-start", the 3x3 matrix
// i * [[1-0.1i, 0, 1], [0, 1-0.1i, 0], [1, 0, 1-0.1i]].
std::optional<CMat> initial_preset(std::string_view name, std::size_t dim);

}  // namespace opval
