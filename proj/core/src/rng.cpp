#include "modgrok/rng.hpp"

#include "modgrok/errors.hpp"

namespace modgrok {

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
  if (bound == 0) throw RangeError("next_below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

std::vector<double> rng_uniform(SeededRng& rng, double lo, double hi, std::size_t n) {
  if (!(lo < hi)) throw RangeError("rng_uniform: need lo < hi, got lo=" + std::to_string(lo) + " hi=" + std::to_string(hi));
  std::vector<double> out(n);
  const double width = hi - lo;
  for (auto& v : out) {
    v = lo + width * rng.next_unit();
    // Rounding in lo + width*u can land exactly on hi.
    if (v >= hi) v = lo;
  }
  return out;
}

}  // namespace modgrok
