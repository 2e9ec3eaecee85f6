#include <algorithm>
#include <cmath>
#include <limits>

#include "opval/linalg.hpp"

namespace opval {

namespace {

// Reduces the symmetric matrix to tridiagonal form in place by Householder
// reflections applied from both sides. Only rows are traversed.
void tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& diag,
                    std::vector<double>& off) {
  diag.assign(n, 0.0);
  off.assign(n, 0.0);
  std::vector<double> v(n);
  std::vector<double> p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t first = k + 1;
    const std::size_t m = n - first;
    double sigma2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = a[k * n + first + i];
      sigma2 += v[i] * v[i];
    }
    if (sigma2 == 0.0) {
      off[k] = 0.0;
      continue;
    }
    const double sigma = std::sqrt(sigma2);
    const double alpha = v[0] > 0.0 ? -sigma : sigma;
    v[0] -= alpha;
    const double vtv = sigma2 - 2.0 * alpha * (v[0] + alpha) + alpha * alpha;
    off[k] = alpha;
    if (vtv == 0.0) continue;
    const double beta = 2.0 / vtv;

    double ptv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = &a[(first + i) * n + first];
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      p[i] = beta * s;
      ptv += p[i] * v[i];
    }
    const double half = 0.5 * beta * ptv;
    for (std::size_t i = 0; i < m; ++i) p[i] -= half * v[i];
    for (std::size_t i = 0; i < m; ++i) {
      double* row = &a[(first + i) * n + first];
      const double vi = v[i];
      const double wi = p[i];
      for (std::size_t j = 0; j < m; ++j) row[j] -= vi * p[j] + wi * v[j];
    }
  }
  if (n >= 2) off[n - 2] = a[(n - 2) * n + (n - 1)];
  for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
  off[n - 1] = 0.0;
}

// Implicit QL with Wilkinson-style shifts on (diag, off) where off[i] couples
// i and i+1.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e) {
  const int n = static_cast<int>(d.size());
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw NonConvergence("tridiagonal QL: too many iterations");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          const double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

std::vector<double> sym_eigenvalues(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw DimensionMismatch("sym_eigenvalues: size mismatch");
  if (n == 0) return {};
  std::vector<double> diag;
  std::vector<double> off;
  tridiagonalize(a, n, diag, off);
  tridiagonal_ql(diag, off);
  std::sort(diag.begin(), diag.end());
  return diag;
}

}  // namespace opval
