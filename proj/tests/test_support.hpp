#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "opval/eta_map.hpp"
#include "opval/linalg.hpp"
#include "opval/random.hpp"
#include "opval/sweep.hpp"

namespace opval::testing {

inline CMat random_cmat(std::size_t d, Rng& rng, double scale = 1.0) {
  CMat m(d);
  for (auto& x : m.entries()) x = scale * Complex(rng.normal(), rng.normal());
  return m;
}

inline CMat random_hermitian(std::size_t d, Rng& rng, double scale = 1.0) {
  const CMat a = random_cmat(d, rng, scale);
  return 0.5 * (a + adjoint(a));
}

// B B^* + eps I, rank-deficient B allowed.
inline CMat random_psd(std::size_t d, Rng& rng, double eps = 0.0, std::size_t rank = 0) {
  CMat b = random_cmat(d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
  if (rank != 0)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = rank; j < d; ++j) b(i, j) = 0.0;
  CMat h = b * adjoint(b);
  for (std::size_t i = 0; i < d; ++i) h(i, i) += eps;
  return h;
}

// Element of A_+ closure: PSD real part plus arbitrary Hermitian imaginary part.
inline CMat random_in_closure(std::size_t d, Rng& rng, double eps = 0.0) {
  const std::size_t rank = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(d));
  return random_psd(d, rng, eps, std::min(rank, d)) +
         Complex(0.0, 1.0) * random_hermitian(d, rng, std::exp(rng.uniform(-2.0, 2.0)));
}

// Re part with eigenvalues drawn log-uniformly in [lo, hi], so lambda_min(Re V) lies in [lo, hi].
inline CMat random_v(std::size_t d, Rng& rng, double lo, double hi) {
  const CMat u = herm_eig(HermMat::from_symmetrized(random_hermitian(d, rng))).eigenvectors;
  std::vector<Complex> diag(d);
  for (auto& x : diag) x = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  const CMat re = u * CMat::diagonal(diag) * adjoint(u);
  return re + Complex(0.0, 1.0) * random_hermitian(d, rng);
}

inline EtaMap random_kraus(std::size_t d, Rng& rng, std::size_t ops) {
  std::vector<CMat> a;
  for (std::size_t k = 0; k < ops; ++k) a.push_back(random_cmat(d, rng, 1.0 / std::sqrt(2.0 * d * ops)));
  return EtaMap::kraus(d, std::move(a));
}

inline EtaMap scalar_identity_eta() { return EtaMap::kraus(1, {CMat::identity(1)}); }
inline EtaMap scalar_zero_eta() { return EtaMap::kraus(1, {}); }

inline CMat swap2() { return CMat{{0.0, 1.0}, {1.0, 0.0}}; }

inline CMat scalar(Complex x) { return CMat{{x}}; }

// Semicircle Cauchy transform with Im G < 0 for Im z > 0.
inline Complex semicircle_g(Complex z) {
  Complex root = std::sqrt(z * z - 4.0);
  if ((z - root).imag() > 0.0) root = -root;
  return (z - root) / 2.0;
}

inline double semicircle_density(double t) {
  return std::abs(t) < 2.0 ? std::sqrt(4.0 - t * t) / (2.0 * 3.14159265358979323846) : 0.0;
}

inline double max_abs_diff(const CMat& a, const CMat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  return m;
}

}  // namespace opval::testing
