#pragma once

// Discrete POSIR statistic in one dimension.
//
// For a series y_1..y_n with prefix sums S_0 = 0, S_k = y_1 + ... + y_k the
// statistic over the window (a, b] is |S_b - S_a| / (scale * sqrt(b - a)).
// A window is admissible for a relative length delta when
// b - a >= ceil(delta * n). The supremum over admissible windows is computed
// from per-length maxima followed by a suffix maximum over lengths, so a
// whole grid of deltas costs one O(n^2) pass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posir/error.hpp"

namespace posir {

/// Observed values y_1..y_n, all finite, n >= 1.
class Series {
 public:
  Series() = default;

  explicit Series(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) fail(ErrorKind::data, "empty series");
    for (double v : values_)
      if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite data");
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Prefix sums with sums[0] = 0 and sums[k] = y_1 + ... + y_k.
class CumSum1D {
 public:
  explicit CumSum1D(std::span<const double> values) : sums_(values.size() + 1, 0.0) {
    for (std::size_t k = 0; k < values.size(); ++k) sums_[k + 1] = sums_[k] + values[k];
  }
  explicit CumSum1D(const Series& series) : CumSum1D(series.values()) {}

  std::size_t length() const noexcept { return sums_.size() - 1; }
  std::span<const double> sums() const noexcept { return sums_; }
  double operator[](std::size_t k) const { return sums_[k]; }

  /// Sum of y over the window (a, b].
  double window_sum(std::size_t a, std::size_t b) const { return sums_[b] - sums_[a]; }

 private:
  std::vector<double> sums_;
};

inline void check_delta(double delta) {
  if (!(delta > 0.0 && std::isfinite(delta))) fail(ErrorKind::usage, "delta must be positive");
}

inline void check_scale(double scale) {
  if (!(std::isfinite(scale) && scale > 0.0)) fail(ErrorKind::numeric, "invalid scale");
}

/// Smallest admissible window length ceil(delta * n). A product delta * n that
/// is integral up to floating error is not rounded up.
inline std::size_t min_window_length(double delta, std::size_t n) {
  check_delta(delta);
  const double raw = std::ceil(delta * static_cast<double>(n) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

/// Strictly increasing relative lengths in (0, 1].
class DeltaGrid {
 public:
  DeltaGrid() = default;

  explicit DeltaGrid(std::vector<double> deltas) : deltas_(std::move(deltas)) {
    if (deltas_.empty()) fail(ErrorKind::usage, "empty delta grid");
    for (std::size_t j = 0; j < deltas_.size(); ++j) {
      if (!(deltas_[j] > 0.0 && deltas_[j] <= 1.0)) fail(ErrorKind::usage, "delta must lie in (0, 1]");
      if (j > 0 && !(deltas_[j] > deltas_[j - 1]))
        fail(ErrorKind::usage, "delta grid must be strictly increasing");
    }
  }

  /// Sorts and deduplicates before validating.
  static DeltaGrid from_unsorted(std::vector<double> deltas) {
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
    return DeltaGrid(std::move(deltas));
  }

  std::size_t size() const noexcept { return deltas_.size(); }
  std::span<const double> values() const noexcept { return deltas_; }
  double operator[](std::size_t j) const { return deltas_[j]; }

  /// Minimum window lengths for an axis of n points, one per delta (non-decreasing).
  std::vector<std::size_t> min_lengths(std::size_t n) const {
    std::vector<std::size_t> out;
    out.reserve(deltas_.size());
    for (double d : deltas_) out.push_back(min_window_length(d, n));
    return out;
  }

 private:
  std::vector<double> deltas_;
};

/// 1 / sqrt(L) for L = 0..max_length (entry 0 is unused and set to 0).
inline std::vector<double> inverse_sqrt_table(std::size_t max_length) {
  std::vector<double> out(max_length + 1, 0.0);
  for (std::size_t L = 1; L <= max_length; ++L) out[L] = 1.0 / std::sqrt(static_cast<double>(L));
  return out;
}

namespace detail {

// max_a |S_{a+L} - S_a| / sqrt(L) for L = 0..n, without the scale.
inline std::vector<double> unscaled_length_maxima(const CumSum1D& cs, std::size_t min_length) {
  const std::size_t n = cs.length();
  const auto s = cs.sums();
  const auto inv_sqrt = inverse_sqrt_table(n);
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t L = std::max<std::size_t>(min_length, 1); L <= n; ++L) {
    double m = 0.0;
    for (std::size_t a = 0; a + L <= n; ++a) m = std::max(m, std::fabs(s[a + L] - s[a]));
    out[L] = m * inv_sqrt[L];
  }
  return out;
}

}  // namespace detail

/// Entry L (1..n) is max over a of |S_{a+L} - S_a| / (scale * sqrt(L)).
/// The returned vector has n + 1 entries; entry 0 is 0.
inline std::vector<double> per_length_max(const Series& series, double scale) {
  check_scale(scale);
  auto out = detail::unscaled_length_maxima(CumSum1D(series), 1);
  for (double& v : out) v /= scale;
  return out;
}

/// Supremum of the normalized window statistic over windows of length >= ceil(delta n).
inline double posir_sup_1d(const Series& series, double delta, double scale) {
  check_scale(scale);
  const std::size_t n = series.size();
  const std::size_t lmin = min_window_length(delta, n);
  if (lmin > n) fail(ErrorKind::numeric, "delta too large for n");
  const auto maxima = detail::unscaled_length_maxima(CumSum1D(series), lmin);
  const double best = *std::max_element(maxima.begin() + static_cast<std::ptrdiff_t>(lmin), maxima.end());
  return best / scale;
}

/// One supremum per delta of the grid. Non-increasing along the grid.
inline std::vector<double> posir_sup_grid_1d(const Series& series, const DeltaGrid& grid, double scale) {
  check_scale(scale);
  const std::size_t n = series.size();
  const auto lengths = grid.min_lengths(n);
  if (lengths.back() > n) fail(ErrorKind::numeric, "delta too large for n");
  auto maxima = detail::unscaled_length_maxima(CumSum1D(series), lengths.front());
  for (std::size_t L = n; L-- > 1;) maxima[L] = std::max(maxima[L], maxima[L + 1]);
  std::vector<double> out;
  out.reserve(grid.size());
  for (std::size_t L : lengths) out.push_back(maxima[L] / scale);
  return out;
}

/// The window achieving the supremum; ties resolve to the smallest (a, b).
struct Window {
  std::size_t a = 0;
  std::size_t b = 0;
  double value = 0.0;
};

inline Window posir_argmax_1d(const Series& series, double delta, double scale) {
  check_scale(scale);
  const std::size_t n = series.size();
  const std::size_t lmin = min_window_length(delta, n);
  if (lmin > n) fail(ErrorKind::numeric, "delta too large for n");
  const CumSum1D cs(series);
  const auto inv_sqrt = inverse_sqrt_table(n);
  Window best{0, n, -1.0};
  for (std::size_t a = 0; a + lmin <= n; ++a) {
    for (std::size_t b = a + lmin; b <= n; ++b) {
      const double v = std::fabs(cs[b] - cs[a]) * inv_sqrt[b - a];
      if (v > best.value) best = {a, b, v};
    }
  }
  best.value /= scale;
  return best;
}

}  // namespace posir
