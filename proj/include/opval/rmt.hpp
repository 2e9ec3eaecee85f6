#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opval/sweep.hpp"

namespace opval {

class SupportMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Block random matrix: block (i, j) is the independent symmetric N x N
// Gaussian matrix with id assignment[i][j], the whole thing scaled by
// `normalization`.
struct BlockProfile {
  std::size_t block_dim = 1;
  std::size_t inner_dim = 1;
  std::vector<std::vector<int>> assignment;
  double normalization = 1.0;

  static BlockProfile toeplitz3(std::size_t n);  // [[A,B,C],[B,A,B],[C,B,A]] / sqrt(3N)
  static BlockProfile wigner(std::size_t n);     // A / sqrt(N)

  void validate() const;
  std::size_t size() const { return block_dim * inner_dim; }
};

// Dense real symmetric matrix, row-major.
struct SymMatrix {
  std::size_t n = 0;
  std::vector<double> data;
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

struct Histogram {
  std::vector<double> edges;         // ascending, size bins + 1
  std::vector<std::uint64_t> counts;
  std::vector<double> heights;       // unit total area

  std::size_t bins() const { return heights.size(); }
  double mass(std::size_t bin) const { return heights[bin] * (edges[bin + 1] - edges[bin]); }
};

struct SpectrumSample {
  std::vector<double> eigenvalues;  // pooled, trial-major
  std::size_t trials = 0;
  std::size_t inner_dim = 0;
  std::uint64_t seed = 0;
  Histogram histogram;
};

// Entries x_ij = x_ji ~ N(0, 1) for i <= j, one draw per distinct id, in
// ascending id order and row-major upper-triangular order within an id.
SymMatrix sample_block_matrix(const BlockProfile& profile, std::uint64_t seed);

// Trial k uses Rng::stream(seed, k). Trials run on up to `threads` workers
// (0 = hardware concurrency); the pooled result does not depend on it.
SpectrumSample empirical_spectrum(const BlockProfile& profile, std::size_t trials,
                                  std::uint64_t seed, std::size_t bins, unsigned threads = 0,
                                  std::optional<std::pair<double, double>> range = std::nullopt);

// Histogram normalized to unit area. Without a range the data extremes are used.
Histogram make_histogram(std::span<const double> values, std::size_t bins,
                         std::optional<std::pair<double, double>> range = std::nullopt);

struct Comparison {
  double l1 = 0.0;
  double ks = 0.0;
};

// Analytic bin mass integrates the piecewise-linear density exactly; failed
// rows count as zero density. Throws SupportMismatch when more than 1% of the
// histogram mass lies outside the curve's t-range.
Comparison compare(const DensityCurve& curve, const Histogram& histogram);

// Integral of the piecewise-linear curve density over (-inf, x].
double curve_cdf(const DensityCurve& curve, double x);

// Inverse-CDF sampling from the normalized curve density.
std::vector<double> sample_from_curve(const DensityCurve& curve, std::size_t count,
                                      std::uint64_t seed);

}  // namespace opval
