#ifndef ELASTIC_MARKET_DETAIL_BISECT_HPP
#define ELASTIC_MARKET_DETAIL_BISECT_HPP

#include <cmath>
#include <utility>

namespace elastic_market::detail {

inline constexpr int kBisectionCap = 200;

struct Bracket {
  double lo;
  double hi;
  int iterations;
  bool collapsed;  // lo and hi are adjacent doubles (or equal)
};

/// Shrinks [lo, hi] around the boundary of a monotone predicate: `right(x)`
/// is true on [lo, x*) and false on (x*, hi]. Stops when the bracket cannot
/// shrink any further in double precision or when the cap is reached.
template <class Pred>
Bracket bisect(Pred&& right, double lo, double hi, int cap = kBisectionCap) {
  int it = 0;
  for (; it < cap; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) return {lo, hi, it, true};
    if (right(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double mid = lo + 0.5 * (hi - lo);
  return {lo, hi, it, !(mid > lo && mid < hi)};
}

/// Root of an increasing function `fn` with fn(lo) <= 0 <= fn(hi). Returns the
/// bracket end with the smaller |fn|.
template <class Fn>
std::pair<double, Bracket> increasing_root(Fn&& fn, double lo, double hi,
                                           int cap = kBisectionCap) {
  Bracket b = bisect([&](double x) { return fn(x) < 0.0; }, lo, hi, cap);
  const double flo = std::abs(fn(b.lo));
  const double fhi = std::abs(fn(b.hi));
  return {flo <= fhi ? b.lo : b.hi, b};
}

}  // namespace elastic_market::detail

#endif  // ELASTIC_MARKET_DETAIL_BISECT_HPP
