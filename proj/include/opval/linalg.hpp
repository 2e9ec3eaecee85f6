#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace opval {

using Complex = std::complex<double>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense square complex matrix, row-major.
class CMat {
 public:
  explicit CMat(std::size_t dim);
  CMat(std::size_t dim, std::vector<Complex> entries);
  CMat(std::initializer_list<std::initializer_list<Complex>> rows);

  static CMat identity(std::size_t dim);
  static CMat zeros(std::size_t dim) { return CMat(dim); }
  static CMat diagonal(std::span<const Complex> diag);
  static CMat unit(std::size_t dim, std::size_t i, std::size_t j);

  std::size_t dim() const { return dim_; }

  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  std::span<const Complex> entries() const { return data_; }
  std::span<Complex> entries() { return data_; }

  CMat& operator+=(const CMat& rhs);
  CMat& operator-=(const CMat& rhs);
  CMat& operator*=(Complex s);

 private:
  std::size_t dim_;
  std::vector<Complex> data_;
};

CMat operator+(CMat lhs, const CMat& rhs);
CMat operator-(CMat lhs, const CMat& rhs);
CMat operator*(const CMat& lhs, const CMat& rhs);
CMat operator*(Complex s, CMat m);
CMat operator*(CMat m, Complex s);

inline CMat add(const CMat& a, const CMat& b) { return a + b; }
inline CMat sub(const CMat& a, const CMat& b) { return a - b; }
inline CMat mul(const CMat& a, const CMat& b) { return a * b; }
inline CMat scale(Complex s, const CMat& m) { return s * m; }
inline CMat identity(std::size_t dim) { return CMat::identity(dim); }

CMat adjoint(const CMat& m);
CMat transpose(const CMat& m);
CMat conj(const CMat& m);
Complex trace(const CMat& m);

// Hermitian matrix. Construction checks Hermiticity to 1e-12 per component
// and then stores the exactly symmetrized matrix.
class HermMat {
 public:
  explicit HermMat(const CMat& m);
  static HermMat from_symmetrized(const CMat& m);

  std::size_t dim() const { return m_.dim(); }
  const CMat& mat() const { return m_; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  struct Unchecked {};
  HermMat(const CMat& m, Unchecked);
  CMat m_;
};

// re_part(M) + i * im_part(M) == M
HermMat re_part(const CMat& m);
HermMat im_part(const CMat& m);

struct EigDecomp {
  std::vector<double> eigenvalues;  // ascending
  CMat eigenvectors;                // columns
};

inline constexpr int kJacobiMaxSweeps = 100;

// Cyclic complex Jacobi. Throws NonConvergence after kJacobiMaxSweeps.
EigDecomp herm_eig(const HermMat& m);
std::vector<double> herm_eigenvalues(const HermMat& m);

double fro_norm(const CMat& m);
double op_norm(const CMat& m);
double lambda_min(const HermMat& m);
double lambda_max(const HermMat& m);

// LU factorization with partial pivoting. `pivot_tol` is relative to the
// Frobenius norm of the input; a smaller pivot magnitude raises SingularMatrix.
class LuDecomp {
 public:
  LuDecomp(const CMat& m, double pivot_tol = 1e-14);

  std::size_t dim() const { return lu_.dim(); }
  double min_pivot() const { return min_pivot_; }
  std::vector<Complex> solve(std::span<const Complex> rhs) const;
  CMat inverse() const;

 private:
  CMat lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

CMat inverse(const CMat& m);

// Column-stacking: vec(X)[i + d*j] = X(i, j), so vec(AXB) = (B^T kron A) vec(X).
std::vector<Complex> vec(const CMat& m);
CMat unvec(std::span<const Complex> v, std::size_t dim);
CMat kron(const CMat& a, const CMat& b);

// Eigenvalues (ascending) of a dense real symmetric n x n matrix stored
// row-major. Householder tridiagonalization followed by implicit QL.
std::vector<double> sym_eigenvalues(std::vector<double> a, std::size_t n);

}  // namespace opval
