#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lbseg {

// SplitMix64 (Steele, Lea & Flood constants). Every random draw in the
// project goes through this generator so streams are reproducible on any
// platform; only integer ops and exact double scaling are used.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n > 0. Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// Seed derivation: one root seed split into independent streams by fixed
// string labels and optional indices.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, SplitMix64& rng);

}  // namespace lbseg
