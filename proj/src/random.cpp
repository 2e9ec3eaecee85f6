#include "opval/random.hpp"

#include <cmath>
#include <numbers>

namespace opval {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t index, bool with_index) {
  const auto lo = static_cast<std::uint32_t>(seed);
  const auto hi = static_cast<std::uint32_t>(seed >> 32);
  if (!with_index) return std::seed_seq{lo, hi};
  return std::seed_seq{lo, hi, static_cast<std::uint32_t>(index),
                       static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
}

}  // namespace

Rng::Rng(std::seed_seq& seq) : engine_(seq) {}

Rng::Rng(std::uint64_t seed) {
  auto seq = make_seq(seed, 0, false);
  engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  auto seq = make_seq(seed, index, true);
  return Rng(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace opval
