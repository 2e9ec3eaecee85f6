#include "opval/rmt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "opval/random.hpp"

namespace opval {

namespace {

SymMatrix sample_with(const BlockProfile& profile, Rng& rng) {
  const std::size_t n = profile.inner_dim;
  const std::size_t d = profile.block_dim;
  std::set<int> ids;
  for (const auto& row : profile.assignment) ids.insert(row.begin(), row.end());

  std::map<int, std::vector<double>> blocks;
  for (int id : ids) {
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double x = rng.normal();
        m[i * n + j] = x;
        m[j * n + i] = x;
      }
    }
    blocks.emplace(id, std::move(m));
  }

  SymMatrix out{d * n, std::vector<double>(d * n * d * n)};
  const double s = profile.normalization;
  for (std::size_t bi = 0; bi < d; ++bi) {
    for (std::size_t bj = 0; bj < d; ++bj) {
      const auto& m = blocks.at(profile.assignment[bi][bj]);
      for (std::size_t i = 0; i < n; ++i) {
        double* dst = &out.data[(bi * n + i) * out.n + bj * n];
        const double* src = &m[i * n];
        for (std::size_t j = 0; j < n; ++j) dst[j] = s * src[j];
      }
    }
  }
  return out;
}

// Piecewise-linear density through the curve rows; failed rows count as 0.
class CurveCdf {
 public:
  explicit CurveCdf(const DensityCurve& curve) {
    t_.reserve(curve.rows.size());
    y_.reserve(curve.rows.size());
    for (const auto& r : curve.rows) {
      t_.push_back(r.t);
      y_.push_back(std::isfinite(r.density) ? r.density : 0.0);
    }
    cum_.assign(t_.size(), 0.0);
    for (std::size_t i = 1; i < t_.size(); ++i) {
      cum_[i] = cum_[i - 1] + 0.5 * (y_[i - 1] + y_[i]) * (t_[i] - t_[i - 1]);
    }
  }

  double lo() const { return t_.front(); }
  double hi() const { return t_.back(); }
  double total() const { return cum_.back(); }

  double operator()(double x) const {
    if (t_.empty() || x <= t_.front()) return 0.0;
    if (x >= t_.back()) return cum_.back();
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), x) - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double s = x - t_[i];
    const double yx = y_[i] + (y_[i + 1] - y_[i]) * (s / h);
    return cum_[i] + 0.5 * (y_[i] + yx) * s;
  }

  // x with cdf(x) = target, 0 <= target <= total.
  double inverse(double target) const {
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    if (it == cum_.begin()) return t_.front();
    if (it == cum_.end()) return t_.back();
    const std::size_t i = static_cast<std::size_t>(it - cum_.begin()) - 1;
    const double r = target - cum_[i];
    const double h = t_[i + 1] - t_[i];
    const double ya = y_[i];
    const double k = (y_[i + 1] - ya) / h;
    const double disc = std::max(ya * ya + 2.0 * k * r, 0.0);
    const double denom = ya + std::sqrt(disc);
    const double s = denom > 0.0 ? 2.0 * r / denom : 0.0;
    return t_[i] + std::clamp(s, 0.0, h);
  }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> cum_;
};

}  // namespace

BlockProfile BlockProfile::toeplitz3(std::size_t n) {
  return BlockProfile{3, n, {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}},
                      1.0 / std::sqrt(3.0 * static_cast<double>(n))};
}

BlockProfile BlockProfile::wigner(std::size_t n) {
  return BlockProfile{1, n, {{0}}, 1.0 / std::sqrt(static_cast<double>(n))};
}

void BlockProfile::validate() const {
  if (block_dim == 0 || inner_dim == 0) throw std::invalid_argument("BlockProfile: empty dimensions");
  if (!(normalization > 0.0)) throw std::invalid_argument("BlockProfile: normalization must be positive");
  if (assignment.size() != block_dim) throw std::invalid_argument("BlockProfile: assignment has wrong row count");
  for (std::size_t i = 0; i < block_dim; ++i) {
    if (assignment[i].size() != block_dim) {
      throw std::invalid_argument("BlockProfile: assignment must be square");
    }
  }
  for (std::size_t i = 0; i < block_dim; ++i)
    for (std::size_t j = 0; j < block_dim; ++j)
      if (assignment[i][j] != assignment[j][i]) {
        throw std::invalid_argument("BlockProfile: assignment must be symmetric");
      }
}

SymMatrix sample_block_matrix(const BlockProfile& profile, std::uint64_t seed) {
  profile.validate();
  Rng rng(seed);
  return sample_with(profile, rng);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins,
                         std::optional<std::pair<double, double>> range) {
  if (bins == 0) throw std::invalid_argument("make_histogram: bins must be >= 1");
  if (values.empty()) throw std::invalid_argument("make_histogram: no values");
  double lo = 0.0;
  double hi = 0.0;
  if (range) {
    std::tie(lo, hi) = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  if (!(hi > lo)) throw std::invalid_argument("make_histogram: empty range");

  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = lo + width * static_cast<double>(k);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  std::uint64_t used = 0;
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto k = static_cast<std::size_t>((v - lo) / width);
    if (k >= bins) k = bins - 1;
    ++h.counts[k];
    ++used;
  }
  h.heights.assign(bins, 0.0);
  if (used > 0) {
    for (std::size_t k = 0; k < bins; ++k) {
      h.heights[k] = static_cast<double>(h.counts[k]) /
                     (static_cast<double>(used) * (h.edges[k + 1] - h.edges[k]));
    }
  }
  return h;
}

SpectrumSample empirical_spectrum(const BlockProfile& profile, std::size_t trials,
                                  std::uint64_t seed, std::size_t bins, unsigned threads,
                                  std::optional<std::pair<double, double>> range) {
  profile.validate();
  if (trials == 0) throw std::invalid_argument("empirical_spectrum: trials must be >= 1");
  if (bins < 10) throw std::invalid_argument("empirical_spectrum: bins must be >= 10");

  const std::size_t per_trial = profile.size();
  SpectrumSample out;
  out.trials = trials;
  out.inner_dim = profile.inner_dim;
  out.seed = seed;
  out.eigenvalues.resize(trials * per_trial);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < trials; k = next++) {
      Rng rng = Rng::stream(seed, k);
      SymMatrix m = sample_with(profile, rng);
      const auto ev = sym_eigenvalues(std::move(m.data), m.n);
      std::copy(ev.begin(), ev.end(), out.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k * per_trial));
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads == 0 ? hw : threads, trials));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  out.histogram = make_histogram(out.eigenvalues, bins, range);
  return out;
}

double curve_cdf(const DensityCurve& curve, double x) {
  if (curve.rows.empty()) return 0.0;
  return CurveCdf(curve)(x);
}

Comparison compare(const DensityCurve& curve, const Histogram& histogram) {
  if (curve.rows.size() < 2) throw std::invalid_argument("compare: curve needs at least two rows");
  if (histogram.bins() == 0) throw std::invalid_argument("compare: empty histogram");
  const CurveCdf cdf(curve);

  double outside = 0.0;
  for (std::size_t k = 0; k < histogram.bins(); ++k) {
    const double a = histogram.edges[k];
    const double b = histogram.edges[k + 1];
    const double inside = std::max(0.0, std::min(b, cdf.hi()) - std::max(a, cdf.lo()));
    outside += histogram.mass(k) * (1.0 - inside / (b - a));
  }
  if (outside > 0.01) {
    throw SupportMismatch("compare: " + std::to_string(100.0 * outside) +
                          "% of the histogram mass lies outside the curve range [" +
                          std::to_string(cdf.lo()) + ", " + std::to_string(cdf.hi()) + "]");
  }

  Comparison c;
  double empirical_cdf = 0.0;
  double prev = cdf(histogram.edges.front());
  c.ks = std::abs(prev);
  for (std::size_t k = 0; k < histogram.bins(); ++k) {
    const double here = cdf(histogram.edges[k + 1]);
    const double mass = histogram.mass(k);
    c.l1 += std::abs((here - prev) - mass);
    empirical_cdf += mass;
    c.ks = std::max(c.ks, std::abs(here - empirical_cdf));
    prev = here;
  }
  return c;
}

std::vector<double> sample_from_curve(const DensityCurve& curve, std::size_t count,
                                      std::uint64_t seed) {
  if (curve.rows.size() < 2) throw std::invalid_argument("sample_from_curve: curve too short");
  const CurveCdf cdf(curve);
  if (!(cdf.total() > 0.0)) throw std::invalid_argument("sample_from_curve: curve has no mass");
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& x : out) x = cdf.inverse(rng.uniform() * cdf.total());
  return out;
}

}  // namespace opval
