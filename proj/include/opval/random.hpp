#pragma once

#include <cstdint>
#include <random>

namespace opval {

// std::mt19937_64 seeded through std::seed_seq (both fully specified by the
// standard), with normals from the Box-Muller transform. Each pair of normals
// consumes exactly two engine outputs, so the variate stream does not depend
// on scheduling; the normal values themselves depend on the platform libm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, stream index), e.g. one per Monte Carlo trial.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double uniform();            // [0, 1)
  double uniform(double lo, double hi);
  double normal();             // standard normal
  std::uint64_t next_u64() { return engine_(); }

 private:
  explicit Rng(std::seed_seq& seq);
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace opval
