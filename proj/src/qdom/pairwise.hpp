#pragma once

#include <cstddef>

namespace qdom {

// Pairwise (cascade) summation of f(i) for i in [lo, hi). Blocks of 64 are
// summed directly.
template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, const F& f) {
  std::size_t n = hi - lo;
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  std::size_t mid = lo + n / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

} // namespace qdom
