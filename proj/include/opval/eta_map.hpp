#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "opval/linalg.hpp"

namespace opval {

class NotLinear : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a map fails the positivity screen at construction.
class EtaRejected : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// eta(W) = sum_i A_i W A_i^*
struct KrausForm {
  std::vector<CMat> operators;
};

// vec(eta(W)) = L vec(W), column-stacked.
struct LinearTensorForm {
  CMat tensor;
};

// The 3x3 block-Toeplitz covariance. On the pattern [[f,0,h],[0,g,0],[h,0,f]]:
//   eta = 1/3 [[2f+g, 0, g+2h], [0, 2f+g+2h, 0], [g+2h, 0, 2f+g]].
// f and h are read as (W00+W22)/2 and (W02+W20)/2, which agree with W00 and
// W02 on the pattern and keep the map positivity preserving on all of A_+.
struct Toeplitz3Form {};

// Black-box analytic map. `bound(r)` must dominate sup ||eta(W)|| over
// ||W|| <= r, W in A_+.
struct CallbackForm {
  std::function<CMat(const CMat&)> evaluate;
  std::function<double(double)> bound;
};

using EtaRepresentation = std::variant<KrausForm, LinearTensorForm, Toeplitz3Form, CallbackForm>;

enum class Validation { check, skip };

// Called with the largest ignored entry when a Toeplitz3 input leaves the pattern.
using PatternWarning = std::function<void(double deviation)>;

inline constexpr double kPatternWarnThreshold = 1e-8;

class EtaMap {
 public:
  static EtaMap kraus(std::size_t dim, std::vector<CMat> operators);
  static EtaMap linear_tensor(std::size_t dim, CMat tensor, Validation validation = Validation::check);
  static EtaMap toeplitz3(PatternWarning on_deviation = {});
  static EtaMap callback(std::size_t dim, std::function<CMat(const CMat&)> evaluate,
                         std::function<double(double)> bound,
                         Validation validation = Validation::check);

  std::size_t dim() const { return impl_->dim; }
  std::string_view kind() const;
  bool is_linear() const;
  const EtaRepresentation& representation() const { return impl_->rep; }

  CMat eval(const CMat& w) const;
  CMat operator()(const CMat& w) const { return eval(w); }

  // Throws NotLinear for callback maps.
  CMat to_linear_tensor() const;

  // Upper bound on sup ||eta(W)|| over ||W|| <= r.
  double bound(double r) const;

  EtaMap with_pattern_warning(PatternWarning on_deviation) const;

 private:
  struct Impl {
    std::size_t dim;
    EtaRepresentation rep;
    double kraus_norm_sum = 0.0;   // sum ||A_i||^2
    double tensor_norm = 0.0;      // ||L|| for linear tensor / toeplitz3
    PatternWarning on_deviation = {};
  };
  explicit EtaMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct PositivityReport {
  bool passed = false;
  double worst_margin = 0.0;  // min over samples of lambda_min(Re eta(W))
  std::size_t trials = 0;
  std::optional<double> choi_lambda_min;  // advisory, linear tensors only
};

inline constexpr double kPositivitySlack = 1e-10;

// Samples W with Re W >= eps I (eps log-uniform in [1e-6, 1]) and checks
// lambda_min(Re eta(W)) >= -1e-10.
PositivityReport check_positivity_preserving(const EtaMap& eta, std::size_t trials,
                                             std::uint64_t seed);

CMat toeplitz3_pattern(Complex f, Complex g, Complex h);
double toeplitz3_pattern_deviation(const CMat& w);

// sum_{ij} E_ij kron eta(E_ij); PSD iff eta is completely positive.
CMat choi_matrix(const EtaMap& eta);

}  // namespace opval
