#include "opval/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace opval {

namespace {

void require_same_dim(const CMat& a, const CMat& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(op) + ": dimension mismatch (" + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

CMat::CMat(std::size_t dim) : dim_(dim), data_(dim * dim) {
  if (dim == 0) throw DimensionMismatch("CMat: dimension must be >= 1");
}

CMat::CMat(std::size_t dim, std::vector<Complex> entries) : dim_(dim), data_(std::move(entries)) {
  if (dim == 0) throw DimensionMismatch("CMat: dimension must be >= 1");
  if (data_.size() != dim * dim) {
    throw DimensionMismatch("CMat: expected " + std::to_string(dim * dim) + " entries, got " +
                            std::to_string(data_.size()));
  }
}

CMat::CMat(std::initializer_list<std::initializer_list<Complex>> rows) : CMat(rows.size()) {
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != dim_) throw DimensionMismatch("CMat: ragged initializer");
    std::size_t j = 0;
    for (const auto& x : row) (*this)(i, j++) = x;
    ++i;
  }
}

CMat CMat::identity(std::size_t dim) {
  CMat m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::diagonal(std::span<const Complex> diag) {
  CMat m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

CMat CMat::unit(std::size_t dim, std::size_t i, std::size_t j) {
  CMat m(dim);
  m(i, j) = 1.0;
  return m;
}

CMat& CMat::operator+=(const CMat& rhs) {
  require_same_dim(*this, rhs, "add");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

CMat& CMat::operator-=(const CMat& rhs) {
  require_same_dim(*this, rhs, "sub");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

CMat& CMat::operator*=(Complex s) {
  for (auto& x : data_) x *= s;
  return *this;
}

CMat operator+(CMat lhs, const CMat& rhs) { return lhs += rhs; }
CMat operator-(CMat lhs, const CMat& rhs) { return lhs -= rhs; }
CMat operator*(Complex s, CMat m) { return m *= s; }
CMat operator*(CMat m, Complex s) { return m *= s; }

CMat operator*(const CMat& lhs, const CMat& rhs) {
  require_same_dim(lhs, rhs, "mul");
  const std::size_t d = lhs.dim();
  CMat out(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const Complex a = lhs(i, k);
      if (a == Complex{}) continue;
      for (std::size_t j = 0; j < d; ++j) out(i, j) += a * rhs(k, j);
    }
  }
  return out;
}

CMat adjoint(const CMat& m) {
  CMat out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(j, i) = std::conj(m(i, j));
  return out;
}

CMat transpose(const CMat& m) {
  CMat out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(j, i) = m(i, j);
  return out;
}

CMat conj(const CMat& m) {
  CMat out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out(i, j) = std::conj(m(i, j));
  return out;
}

Complex trace(const CMat& m) {
  Complex t{};
  for (std::size_t i = 0; i < m.dim(); ++i) t += m(i, i);
  return t;
}

// ---------------------------------------------------------------------------
// HermMat

HermMat::HermMat(const CMat& m, Unchecked) : m_(m) {
  const std::size_t d = m.dim();
  for (std::size_t i = 0; i < d; ++i) {
    m_(i, i) = m(i, i).real();
    for (std::size_t j = i + 1; j < d; ++j) {
      const Complex avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
      m_(i, j) = avg;
      m_(j, i) = std::conj(avg);
    }
  }
}

HermMat::HermMat(const CMat& m) : HermMat(m, Unchecked{}) {
  const std::size_t d = m.dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const Complex diff = m(i, j) - std::conj(m(j, i));
      if (std::abs(diff.real()) > 1e-12 || std::abs(diff.imag()) > 1e-12) {
        throw std::invalid_argument("HermMat: input is not Hermitian at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
      }
    }
  }
}

HermMat HermMat::from_symmetrized(const CMat& m) { return HermMat(m, Unchecked{}); }

HermMat re_part(const CMat& m) { return HermMat::from_symmetrized(m); }

HermMat im_part(const CMat& m) {
  // (M - M*) / (2i) = Re-part of (-i M)
  return HermMat::from_symmetrized(Complex(0.0, -1.0) * m);
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver

namespace {

double off_diagonal_norm(const CMat& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

EigDecomp herm_eig(const HermMat& m) {
  const std::size_t d = m.dim();
  CMat a = m.mat();
  CMat v = CMat::identity(d);
  const double scale = fro_norm(a);
  const double target = 1e-12 * scale;

  int sweep = 0;
  while (off_diagonal_norm(a) > target) {
    if (++sweep > kJacobiMaxSweeps) {
      throw NonConvergence("herm_eig: Jacobi did not converge in " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        // Phase rotation makes the (p,q) entry real, then a real Jacobi
        // rotation annihilates it: J = diag(1, e^{-i phi}) * R.
        const Complex phase = std::conj(apq) / mag;  // e^{-i phi}
        const double theta = 0.5 * (a(q, q).real() - a(p, p).real()) / mag;
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const Complex jqp = -s * phase;
        const Complex jqq = c * phase;
        for (std::size_t r = 0; r < d; ++r) {
          const Complex arp = a(r, p);
          const Complex arq = a(r, q);
          a(r, p) = c * arp + jqp * arq;
          a(r, q) = s * arp + jqq * arq;
          const Complex vrp = v(r, p);
          const Complex vrq = v(r, q);
          v(r, p) = c * vrp + jqp * vrq;
          v(r, q) = s * vrp + jqq * vrq;
        }
        for (std::size_t r = 0; r < d; ++r) {
          const Complex apr = a(p, r);
          const Complex aqr = a(q, r);
          a(p, r) = c * apr + std::conj(jqp) * aqr;
          a(q, r) = s * apr + std::conj(jqq) * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigDecomp out{std::vector<double>(d), CMat(d)};
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < d; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

std::vector<double> herm_eigenvalues(const HermMat& m) { return herm_eig(m).eigenvalues; }

double fro_norm(const CMat& m) {
  double s = 0.0;
  for (const auto& x : m.entries()) s += std::norm(x);
  return std::sqrt(s);
}

double op_norm(const CMat& m) {
  if (m.dim() == 1) return std::abs(m(0, 0));
  const double top = lambda_max(HermMat::from_symmetrized(adjoint(m) * m));
  return std::sqrt(std::max(top, 0.0));
}

double lambda_min(const HermMat& m) {
  if (m.dim() == 1) return m(0, 0).real();
  return herm_eigenvalues(m).front();
}

double lambda_max(const HermMat& m) {
  if (m.dim() == 1) return m(0, 0).real();
  return herm_eigenvalues(m).back();
}

// ---------------------------------------------------------------------------
// LU

LuDecomp::LuDecomp(const CMat& m, double pivot_tol) : lu_(m), perm_(m.dim()) {
  const std::size_t d = m.dim();
  std::iota(perm_.begin(), perm_.end(), 0);
  const double threshold = pivot_tol * fro_norm(m);
  min_pivot_ = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < d; ++i) {
      const double cand = std::abs(lu_(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    min_pivot_ = std::min(min_pivot_, best);
    if (!(best > threshold)) {
      throw SingularMatrix("LU: pivot " + std::to_string(best) + " below threshold " +
                           std::to_string(threshold) + " at column " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t j = 0; j < d; ++j) std::swap(lu_(k, j), lu_(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    const Complex inv_pivot = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < d; ++i) {
      const Complex f = lu_(i, k) * inv_pivot;
      lu_(i, k) = f;
      if (f == Complex{}) continue;
      for (std::size_t j = k + 1; j < d; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

std::vector<Complex> LuDecomp::solve(std::span<const Complex> rhs) const {
  const std::size_t d = lu_.dim();
  if (rhs.size() != d) throw DimensionMismatch("LU solve: rhs size mismatch");
  std::vector<Complex> x(d);
  for (std::size_t i = 0; i < d; ++i) {
    Complex s = rhs[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = d; i-- > 0;) {
    Complex s = x[i];
    for (std::size_t j = i + 1; j < d; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

CMat LuDecomp::inverse() const {
  const std::size_t d = lu_.dim();
  CMat out(d);
  std::vector<Complex> e(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(e.begin(), e.end(), Complex{});
    e[j] = 1.0;
    const auto col = solve(e);
    for (std::size_t i = 0; i < d; ++i) out(i, j) = col[i];
  }
  return out;
}

CMat inverse(const CMat& m) {
  if (m.dim() == 1) {
    const Complex x = m(0, 0);
    if (!(std::abs(x) > 0.0)) throw SingularMatrix("inverse: zero scalar");
    return CMat(1, {1.0 / x});
  }
  return LuDecomp(m).inverse();
}

// ---------------------------------------------------------------------------
// vec / kron

std::vector<Complex> vec(const CMat& m) {
  const std::size_t d = m.dim();
  std::vector<Complex> v(d * d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) v[i + d * j] = m(i, j);
  return v;
}

CMat unvec(std::span<const Complex> v, std::size_t dim) {
  if (v.size() != dim * dim) throw DimensionMismatch("unvec: size mismatch");
  CMat m(dim);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) m(i, j) = v[i + dim * j];
  return m;
}

CMat kron(const CMat& a, const CMat& b) {
  const std::size_t na = a.dim();
  const std::size_t nb = b.dim();
  CMat out(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex{}) continue;
      for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t l = 0; l < nb; ++l) out(i * nb + k, j * nb + l) = aij * b(k, l);
    }
  return out;
}

}  // namespace opval
