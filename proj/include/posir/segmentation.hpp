#pragma once

// Piecewise-constant signals, least-squares segmentation with a fixed number
// of breakpoints, and simultaneous intervals over the estimated segments.
//
// Breakpoints are positions t in (0, n): segments are (0, t_1], (t_1, t_2],
// ..., (t_K, n] in the 0-based cumulative coordinates used everywhere else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"
#include "posir/inference.hpp"
#include "posir/noise.hpp"
#include "posir/quantile_engine.hpp"

namespace posir {

/// Segment boundaries [0, t_1, ..., t_K, n] from breakpoints.
inline std::vector<std::size_t> segment_bounds(std::size_t n, std::span<const std::size_t> breakpoints) {
  std::vector<std::size_t> out;
  out.reserve(breakpoints.size() + 2);
  out.push_back(0);
  out.insert(out.end(), breakpoints.begin(), breakpoints.end());
  out.push_back(n);
  return out;
}

class PiecewiseSignal {
 public:
  PiecewiseSignal(std::size_t n, std::vector<std::size_t> breakpoints, std::vector<double> levels)
      : n_(n), breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
    if (n_ == 0) fail(ErrorKind::usage, "signal length must be >= 1");
    if (levels_.size() != breakpoints_.size() + 1) fail(ErrorKind::usage, "need one more level than breakpoints");
    std::size_t prev = 0;
    for (std::size_t t : breakpoints_) {
      if (!(t > prev && t < n_)) fail(ErrorKind::usage, "breakpoints must be strictly increasing inside (0, n)");
      prev = t;
    }
    for (double v : levels_)
      if (!std::isfinite(v)) fail(ErrorKind::usage, "non-finite level");
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<std::size_t>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& levels() const noexcept { return levels_; }

  /// mu_1..mu_n.
  std::vector<double> values() const {
    std::vector<double> mu(n_);
    const auto bounds = segment_bounds(n_, breakpoints_);
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s)
      std::fill(mu.begin() + static_cast<std::ptrdiff_t>(bounds[s]), mu.begin() + static_cast<std::ptrdiff_t>(bounds[s + 1]),
                levels_[s]);
    return mu;
  }

  /// Mean of mu over the window (a, b].
  double mean_over(std::size_t a, std::size_t b) const {
    if (!(a < b && b <= n_)) fail(ErrorKind::usage, "window out of range");
    const auto bounds = segment_bounds(n_, breakpoints_);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
      const std::size_t lo = std::max(a, bounds[s]);
      const std::size_t hi = std::min(b, bounds[s + 1]);
      if (hi > lo) total += levels_[s] * static_cast<double>(hi - lo);
    }
    return total / static_cast<double>(b - a);
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> breakpoints_;
  std::vector<double> levels_;
};

/// Y_i = mu_i + eps_i.
inline Series generate_piecewise(const PiecewiseSignal& signal, const NoiseSpec& noise, const RngSpec& rng) {
  auto y = signal.values();
  std::vector<double> eps(y.size());
  Engine engine = make_engine(rng);
  sample_into(noise, engine, eps);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += eps[i];
  return Series(std::move(y));
}

struct Segmentation {
  std::vector<std::size_t> breakpoints;
  std::vector<double> segment_costs;  // within-segment sums of squared deviations
  double total_cost = 0.0;
};

/// Within-segment sum of squares from prefix sums of y and y^2.
class SegmentCost {
 public:
  explicit SegmentCost(std::span<const double> y)
      : s1_(y.size() + 1, 0.0), s2_(y.size() + 1, 0.0), inv_(y.size() + 1, 0.0) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    // Centering keeps the y^2 sums small relative to the costs.
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double c = y[i] - mean;
      s1_[i + 1] = s1_[i] + c;
      s2_[i + 1] = s2_[i] + c * c;
      inv_[i + 1] = 1.0 / static_cast<double>(i + 1);
    }
  }

  /// Cost of the segment (s, t].
  double operator()(std::size_t s, std::size_t t) const {
    const double sum = s1_[t] - s1_[s];
    const double c = (s2_[t] - s2_[s]) - sum * sum * inv_[t - s];
    return c > 0.0 ? c : 0.0;
  }

  double total_squares() const { return s2_.back(); }

 private:
  std::vector<double> s1_;
  std::vector<double> s2_;
  std::vector<double> inv_;
};

/// Optimal least-squares segmentation into K + 1 segments by dynamic
/// programming. Among optimal solutions the lexicographically smallest
/// breakpoint vector is returned.
///
/// The recursion runs over suffixes: best[k][s] is the optimal cost of
/// (s, n] with k breakpoints. A candidate next breakpoint t is dropped for
/// all starts before s once cost(s, t) + best[k-1][t] exceeds best[k-1][s]
/// (plus a rounding margin), which is exact because splitting a segment
/// never increases its cost.
inline Segmentation dp_segment(const Series& data, std::size_t K) {
  const std::size_t n = data.size();
  if (K >= n) fail(ErrorKind::usage, "breakpoint count must be < n");
  const SegmentCost cost(data.values());
  const double margin = 1e-10 * (cost.total_squares() + 1.0);

  std::vector<double> prev(n), cur(n);
  for (std::size_t s = 0; s < n; ++s) prev[s] = cost(s, n);
  // choice[k][s]: first breakpoint of the best split of (s, n] into k + 1 segments.
  std::vector<std::vector<std::size_t>> choice(K + 1);
  std::vector<std::size_t> candidates;
  for (std::size_t k = 1; k <= K; ++k) {
    choice[k].assign(n, 0);
    std::fill(cur.begin(), cur.end(), 0.0);
    candidates.clear();
    const std::size_t last_t = n - k;  // prev[t] needs n - t >= k points
    for (std::size_t s = last_t; s-- > 0;) {
      // Candidates are kept in decreasing order; "<=" keeps the smallest t on ties.
      candidates.push_back(s + 1);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t t : candidates) {
        const double v = cost(s, t) + prev[t];
        if (v <= best) {
          best = v;
          arg = t;
        }
      }
      cur[s] = best;
      choice[k][s] = arg;
      const double bar = prev[s] + margin;
      std::erase_if(candidates, [&](std::size_t t) { return cost(s, t) + prev[t] > bar; });
    }
    std::swap(prev, cur);
  }

  Segmentation seg;
  std::size_t s = 0;
  for (std::size_t k = K; k >= 1; --k) {
    s = choice[k][s];
    seg.breakpoints.push_back(s);
  }
  const auto bounds = segment_bounds(n, seg.breakpoints);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    seg.segment_costs.push_back(cost(bounds[i], bounds[i + 1]));
    seg.total_cost += seg.segment_costs.back();
  }
  return seg;
}

struct SegmentCI {
  std::size_t a = 0;
  std::size_t b = 0;
  std::optional<RegionCI> ci;  // empty when the segment is shorter than delta * n
};

struct SegmentCIs {
  std::vector<SegmentCI> segments;
  /// Consecutive eligible segments (by index into segments) and whether their
  /// intervals overlap.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> overlap;
  double sigma = 0.0;
  double quantile = 0.0;
};

/// Intervals for every segment of relative length >= delta; shorter segments
/// are marked and skipped. Overlap flags are computed between consecutive
/// eligible segments.
inline SegmentCIs segment_cis(const Series& data, std::span<const std::size_t> breakpoints, double alpha,
                              double delta, const QuantileTable& table, const SigmaEstimator& est) {
  check_table_dim(table, 1);
  const std::size_t n = data.size();
  SegmentCIs out;
  out.sigma = sigma_hat(data, est);
  out.quantile = lookup(table, alpha, delta);
  const std::size_t lmin = min_window_length(delta, n);
  const Tensor tensor(data);
  const CumSumTensor cs(tensor);
  const auto bounds = segment_bounds(n, breakpoints);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    if (!(bounds[i] < bounds[i + 1] && bounds[i + 1] <= n)) fail(ErrorKind::usage, "breakpoints must be increasing inside (0, n)");
    SegmentCI s{bounds[i], bounds[i + 1], std::nullopt};
    if (s.b - s.a >= lmin) s.ci = region_ci_from(cs, Rect{{s.a}, {s.b}}, alpha, delta, out.quantile, out.sigma);
    out.segments.push_back(std::move(s));
  }
  std::vector<RegionCI> eligible;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < out.segments.size(); ++i)
    if (out.segments[i].ci) {
      eligible.push_back(*out.segments[i].ci);
      index.push_back(i);
    }
  out.overlap = overlap_flags(eligible);
  for (std::size_t k = 0; k + 1 < index.size(); ++k) out.pairs.emplace_back(index[k], index[k + 1]);
  return out;
}

inline SegmentCIs segment_cis(const Series& data, const Segmentation& seg, double alpha, double delta,
                              const QuantileTable& table, const SigmaEstimator& est) {
  return segment_cis(data, seg.breakpoints, alpha, delta, table, est);
}

}  // namespace posir
