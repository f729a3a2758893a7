#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace opera {

// Pairwise (cascade) summation; the result depends only on the order of the
// inputs, never on how work was split across threads.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double sem = 0.0;     // standard error of the mean
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = pairwise_sum(xs) / static_cast<double>(s.n);
  if (s.n > 1) {
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - s.mean;
      sq[i] = d * d;
    }
    s.stddev = std::sqrt(pairwise_sum(sq) / static_cast<double>(s.n - 1));
    s.sem = s.stddev / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

// Standard error of a Bernoulli frequency with success probability p over n
// trials.
inline double bernoulli_se(double p, std::size_t n) {
  if (n == 0) return 0.0;
  const double q = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(n));
}

}  // namespace opera
