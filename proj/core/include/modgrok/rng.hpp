#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace modgrok {

/// Seeded 64-bit generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; conversion to doubles and bounded
/// integers is done here so streams are identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

/// n draws uniform in [lo, hi). Throws RangeError if lo >= hi.
std::vector<double> rng_uniform(SeededRng& rng, double lo, double hi, std::size_t n);

/// Sub-seed for a named pipeline stage, derived from the run seed by a fixed offset.
enum class SeedStream : std::uint64_t { kSplit = 1, kInit = 2 };
inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return seed + static_cast<std::uint64_t>(stream);
}

}  // namespace modgrok
