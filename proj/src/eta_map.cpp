#include "opval/eta_map.hpp"

#include <algorithm>
#include <cmath>

#include "opval/random.hpp"

namespace opval {

namespace {

constexpr std::size_t kLoadTimeTrials = 256;
constexpr std::uint64_t kLoadTimeSeed = 0x5eed5eedULL;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

CMat toeplitz3_eval(const CMat& w) {
  const Complex f = 0.5 * (w(0, 0) + w(2, 2));
  const Complex g = w(1, 1);
  const Complex h = 0.5 * (w(0, 2) + w(2, 0));
  const Complex diag = (2.0 * f + g) / 3.0;
  const Complex corner = (g + 2.0 * h) / 3.0;
  CMat out(3);
  out(0, 0) = diag;
  out(2, 2) = diag;
  out(0, 2) = corner;
  out(2, 0) = corner;
  out(1, 1) = (2.0 * f + g + 2.0 * h) / 3.0;
  return out;
}

CMat tensor_from_evaluator(std::size_t d, const std::function<CMat(const CMat&)>& f) {
  CMat l(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto col = vec(f(CMat::unit(d, i, j)));
      const std::size_t c = i + d * j;
      for (std::size_t r = 0; r < d * d; ++r) l(r, c) = col[r];
    }
  }
  return l;
}

CMat random_complex(std::size_t d, Rng& rng, double sigma) {
  CMat m(d);
  for (auto& x : m.entries()) x = Complex(rng.normal(), rng.normal()) * sigma;
  return m;
}

// Random W with Re W >= eps I: eps I + B B^* plus an arbitrary Hermitian
// imaginary part.
CMat random_right_half_plane(std::size_t d, Rng& rng) {
  const double eps = std::exp(rng.uniform(std::log(1e-6), 0.0));
  const std::size_t rank = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(d));
  CMat b = random_complex(d, rng, rng.uniform() / std::sqrt(static_cast<double>(d)));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = std::min(rank, d); j < d; ++j) b(i, j) = 0.0;
  CMat h = b * adjoint(b);
  for (std::size_t i = 0; i < d; ++i) h(i, i) += eps;
  const CMat k = re_part(random_complex(d, rng, std::exp(rng.uniform(-3.0, 3.0)))).mat();
  return h + Complex(0.0, 1.0) * k;
}

}  // namespace

EtaMap EtaMap::kraus(std::size_t dim, std::vector<CMat> operators) {
  double norm_sum = 0.0;
  for (const auto& a : operators) {
    if (a.dim() != dim) throw DimensionMismatch("kraus: operator dimension mismatch");
    const double n = op_norm(a);
    norm_sum += n * n;
  }
  auto impl = std::make_shared<Impl>(Impl{dim, KrausForm{std::move(operators)}});
  impl->kraus_norm_sum = norm_sum;
  return EtaMap(std::move(impl));
}

EtaMap EtaMap::linear_tensor(std::size_t dim, CMat tensor, Validation validation) {
  if (tensor.dim() != dim * dim) {
    throw DimensionMismatch("linear_tensor: expected " + std::to_string(dim * dim) + "x" +
                            std::to_string(dim * dim) + " tensor");
  }
  const double norm = op_norm(tensor);
  auto impl = std::make_shared<Impl>(Impl{dim, LinearTensorForm{std::move(tensor)}});
  impl->tensor_norm = norm;
  EtaMap eta(std::move(impl));
  if (validation == Validation::check) {
    const auto report = check_positivity_preserving(eta, kLoadTimeTrials, kLoadTimeSeed);
    if (!report.passed) {
      throw EtaRejected("linear_tensor: map does not preserve positivity of the real part "
                        "(worst margin " + std::to_string(report.worst_margin) + ")");
    }
  }
  return eta;
}

EtaMap EtaMap::toeplitz3(PatternWarning on_deviation) {
  auto impl = std::make_shared<Impl>(Impl{3, Toeplitz3Form{}});
  impl->tensor_norm = op_norm(tensor_from_evaluator(3, toeplitz3_eval));
  impl->on_deviation = std::move(on_deviation);
  return EtaMap(std::move(impl));
}

EtaMap EtaMap::callback(std::size_t dim, std::function<CMat(const CMat&)> evaluate,
                        std::function<double(double)> bound, Validation validation) {
  if (!evaluate || !bound) throw std::invalid_argument("callback: evaluator and bound required");
  EtaMap eta(std::make_shared<Impl>(Impl{dim, CallbackForm{std::move(evaluate), std::move(bound)}}));
  if (validation == Validation::check) {
    const auto report = check_positivity_preserving(eta, kLoadTimeTrials, kLoadTimeSeed);
    if (!report.passed) {
      throw EtaRejected("callback: map does not preserve positivity of the real part "
                        "(worst margin " + std::to_string(report.worst_margin) + ")");
    }
  }
  return eta;
}

EtaMap EtaMap::with_pattern_warning(PatternWarning on_deviation) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->on_deviation = std::move(on_deviation);
  return EtaMap(std::move(impl));
}

std::string_view EtaMap::kind() const {
  return std::visit(Overloaded{[](const KrausForm&) { return std::string_view("kraus"); },
                               [](const LinearTensorForm&) { return std::string_view("linear_tensor"); },
                               [](const Toeplitz3Form&) { return std::string_view("toeplitz3"); },
                               [](const CallbackForm&) { return std::string_view("callback"); }},
                    impl_->rep);
}

bool EtaMap::is_linear() const { return !std::holds_alternative<CallbackForm>(impl_->rep); }

CMat EtaMap::eval(const CMat& w) const {
  if (w.dim() != impl_->dim) {
    throw DimensionMismatch("eta: input is " + std::to_string(w.dim()) + "x" +
                            std::to_string(w.dim()) + ", map acts on dimension " +
                            std::to_string(impl_->dim));
  }
  return std::visit(
      Overloaded{
          [&](const KrausForm& k) {
            CMat out(w.dim());
            for (const auto& a : k.operators) out += a * w * adjoint(a);
            return out;
          },
          [&](const LinearTensorForm& l) {
            const auto v = vec(w);
            const std::size_t n = v.size();
            std::vector<Complex> r(n);
            for (std::size_t i = 0; i < n; ++i) {
              Complex s{};
              for (std::size_t j = 0; j < n; ++j) s += l.tensor(i, j) * v[j];
              r[i] = s;
            }
            return unvec(r, w.dim());
          },
          [&](const Toeplitz3Form&) {
            if (impl_->on_deviation) {
              const double dev = toeplitz3_pattern_deviation(w);
              if (dev > kPatternWarnThreshold) impl_->on_deviation(dev);
            }
            return toeplitz3_eval(w);
          },
          [&](const CallbackForm& c) {
            CMat out = c.evaluate(w);
            if (out.dim() != w.dim()) throw DimensionMismatch("callback eta: output dimension mismatch");
            return out;
          }},
      impl_->rep);
}

CMat EtaMap::to_linear_tensor() const {
  const std::size_t d = impl_->dim;
  return std::visit(
      Overloaded{[&](const KrausForm& k) {
                   // vec(A W A^*) = (conj(A) kron A) vec(W)
                   CMat l(d * d);
                   for (const auto& a : k.operators) l += kron(conj(a), a);
                   return l;
                 },
                 [&](const LinearTensorForm& l) { return l.tensor; },
                 [&](const Toeplitz3Form&) { return tensor_from_evaluator(3, toeplitz3_eval); },
                 [&](const CallbackForm&) -> CMat {
                   throw NotLinear("to_linear_tensor: callback maps have no tensor form");
                 }},
      impl_->rep);
}

double EtaMap::bound(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("eta bound: radius must be positive");
  const double sqrt_d = std::sqrt(static_cast<double>(impl_->dim));
  return std::visit(
      Overloaded{[&](const KrausForm&) { return r * impl_->kraus_norm_sum; },
                 // ||eta(W)|| <= ||L vec W||_2 <= ||L|| ||W||_F <= ||L|| sqrt(d) ||W||
                 [&](const LinearTensorForm&) { return r * sqrt_d * impl_->tensor_norm; },
                 [&](const Toeplitz3Form&) { return r * sqrt_d * impl_->tensor_norm; },
                 [&](const CallbackForm& c) { return c.bound(r); }},
      impl_->rep);
}

PositivityReport check_positivity_preserving(const EtaMap& eta, std::size_t trials,
                                             std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("check_positivity_preserving: trials must be >= 1");
  Rng rng(seed);
  PositivityReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const EtaMap quiet = eta.with_pattern_warning({});
  for (std::size_t t = 0; t < trials; ++t) {
    const CMat w = random_right_half_plane(eta.dim(), rng);
    const double margin = lambda_min(re_part(quiet.eval(w)));
    report.worst_margin = std::min(report.worst_margin, margin);
  }
  report.passed = report.worst_margin >= -kPositivitySlack;
  if (std::holds_alternative<LinearTensorForm>(eta.representation())) {
    report.choi_lambda_min = lambda_min(HermMat::from_symmetrized(choi_matrix(eta)));
  }
  return report;
}

CMat toeplitz3_pattern(Complex f, Complex g, Complex h) {
  return CMat{{f, 0.0, h}, {0.0, g, 0.0}, {h, 0.0, f}};
}

double toeplitz3_pattern_deviation(const CMat& w) {
  if (w.dim() != 3) throw DimensionMismatch("toeplitz3: expected 3x3 input");
  return std::max({std::abs(w(0, 1)), std::abs(w(1, 0)), std::abs(w(1, 2)), std::abs(w(2, 1)),
                   std::abs(w(0, 2) - w(2, 0)), std::abs(w(0, 0) - w(2, 2))});
}

CMat choi_matrix(const EtaMap& eta) {
  const std::size_t d = eta.dim();
  const EtaMap quiet = eta.with_pattern_warning({});
  CMat c(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) c += kron(CMat::unit(d, i, j), quiet.eval(CMat::unit(d, i, j)));
  return c;
}

}  // namespace opval
