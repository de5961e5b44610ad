#pragma once

// Brute-force reference implementations. They sum data directly, without
// prefix sums or the vertex identity, so they stay independent of the code
// under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

inline std::size_t ceil_length(double delta, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(delta * static_cast<double>(n) - 1e-9)));
}

/// max over (a, b] with b - a >= ceil(delta n) of |sum y_{a+1..b}| / (scale sqrt(b - a)).
inline double sup_1d(std::span<const double> y, double delta, double scale) {
  const std::size_t n = y.size();
  const std::size_t lmin = ceil_length(delta, n);
  double best = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + lmin; b <= n; ++b) {
      double s = 0.0;
      for (std::size_t i = a; i < b; ++i) s += y[i];
      best = std::max(best, std::fabs(s) / (scale * std::sqrt(static_cast<double>(b - a))));
    }
  return best;
}

/// Direct sum of a row-major 2-d array over (a1, b1] x (a2, b2].
inline double box_sum_2d(std::span<const double> v, std::size_t cols, std::size_t a1, std::size_t b1, std::size_t a2,
                         std::size_t b2) {
  double s = 0.0;
  for (std::size_t i = a1; i < b1; ++i)
    for (std::size_t j = a2; j < b2; ++j) s += v[i * cols + j];
  return s;
}

inline double sup_2d(std::span<const double> v, std::size_t rows, std::size_t cols, double g1, double g2,
                     double scale) {
  const std::size_t l1 = ceil_length(g1, rows), l2 = ceil_length(g2, cols);
  double best = 0.0;
  for (std::size_t a1 = 0; a1 < rows; ++a1)
    for (std::size_t b1 = a1 + l1; b1 <= rows; ++b1)
      for (std::size_t a2 = 0; a2 < cols; ++a2)
        for (std::size_t b2 = a2 + l2; b2 <= cols; ++b2) {
          const double s = box_sum_2d(v, cols, a1, b1, a2, b2);
          const double area = static_cast<double>((b1 - a1) * (b2 - a2));
          best = std::max(best, std::fabs(s) / (scale * std::sqrt(area)));
        }
  return best;
}

/// Direct sum over a box of a row-major d-dimensional array.
inline double box_sum(std::span<const double> v, const std::vector<std::size_t>& shape,
                      const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t d = shape.size();
  std::vector<std::size_t> idx = a;
  double s = 0.0;
  while (true) {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < d; ++j) flat = flat * shape[j] + idx[j];
    s += v[flat];
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++idx[j] < b[j]) break;
      idx[j] = a[j];
      if (j == 0) return s;
    }
  }
}

/// Within-segment sum of squared deviations, computed directly.
inline double segment_sse(std::span<const double> y, std::size_t a, std::size_t b) {
  double mean = 0.0;
  for (std::size_t i = a; i < b; ++i) mean += y[i];
  mean /= static_cast<double>(b - a);
  double ss = 0.0;
  for (std::size_t i = a; i < b; ++i) ss += (y[i] - mean) * (y[i] - mean);
  return ss;
}

/// Exhaustive search over all breakpoint vectors of size K (K <= 3).
inline std::vector<std::size_t> best_segmentation(std::span<const double> y, std::size_t K, double* cost_out) {
  const std::size_t n = y.size();
  std::vector<std::size_t> best_bp;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> bp(K);
  auto eval = [&] {
    double c = 0.0;
    std::size_t prev = 0;
    for (std::size_t t : bp) {
      c += segment_sse(y, prev, t);
      prev = t;
    }
    c += segment_sse(y, prev, n);
    if (c < best) {
      best = c;
      best_bp = bp;
    }
  };
  auto rec = [&](auto&& self, std::size_t k, std::size_t start) -> void {
    if (k == K) {
      eval();
      return;
    }
    for (std::size_t t = start; t + (K - k - 1) < n; ++t) {
      bp[k] = t;
      self(self, k + 1, t + 1);
    }
  };
  rec(rec, 0, 1);
  if (cost_out) *cost_out = best;
  return best_bp;
}

}  // namespace oracle
