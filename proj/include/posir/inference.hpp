#pragma once

// Simultaneous confidence intervals for region means, valid for every
// admissible region at once and therefore for any data-driven selection of
// regions.
//
//   CI = mean_hat +- K(1 - alpha, delta) * sigma_hat / sqrt(|region|)
//
// where K comes from a QuantileTable of matching dimension.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"
#include "posir/ndstat.hpp"
#include "posir/quantile_engine.hpp"

namespace posir {

/// How sigma is obtained from the data.
class SigmaEstimator {
 public:
  enum class Kind { known, global_empirical, user };
  using Hook = std::function<double(std::span<const double>)>;

  static SigmaEstimator known(double sigma) {
    if (!(std::isfinite(sigma) && sigma > 0.0)) fail(ErrorKind::usage, "known sigma must be > 0");
    SigmaEstimator e(Kind::known);
    e.value_ = sigma;
    return e;
  }
  /// Sample standard deviation of all entries (denominator n - 1). Under a
  /// non-constant mean it overestimates sigma, which makes intervals wider.
  static SigmaEstimator global_empirical() { return SigmaEstimator(Kind::global_empirical); }
  static SigmaEstimator user(Hook hook) {
    SigmaEstimator e(Kind::user);
    e.hook_ = std::move(hook);
    return e;
  }

  Kind kind() const noexcept { return kind_; }

  double operator()(std::span<const double> data) const {
    switch (kind_) {
      case Kind::known: return value_;
      case Kind::global_empirical: return sample_sd(data);
      case Kind::user: {
        const double v = hook_(data);
        if (!(std::isfinite(v) && v > 0.0)) fail(ErrorKind::numeric, "user sigma estimate must be > 0");
        return v;
      }
    }
    return 0.0;
  }

  static double sample_sd(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n < 2) fail(ErrorKind::numeric, "global_empirical sigma needs at least 2 values");
    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : data) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
  }

 private:
  explicit SigmaEstimator(Kind kind) : kind_(kind) {}

  Kind kind_;
  double value_ = 0.0;
  Hook hook_;
};

inline double sigma_hat(std::span<const double> data, const SigmaEstimator& est) { return est(data); }
inline double sigma_hat(const Series& data, const SigmaEstimator& est) { return est(data.values()); }
inline double sigma_hat(const Tensor& data, const SigmaEstimator& est) { return est(data.values()); }

/// Confidence interval for the mean of one region.
struct RegionCI {
  Rect region;
  double mean_hat = 0.0;
  double half_width = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  double delta = 0.0;

  bool covers(double value) const { return lower <= value && value <= upper; }
};

/// Throws unless every side of r is at least ceil(delta * n_j).
inline void check_region_admissible(const Rect& r, double delta, const Shape& shape) {
  check_rect(r, shape);
  for (std::size_t j = 0; j < shape.size(); ++j)
    if (r.side(j) < min_window_length(delta, shape[j]))
      fail(ErrorKind::numeric, "region shorter than delta*n: no CI computed");
}

/// Interval from precomputed ingredients: cumulative sums, K and sigma_hat.
inline RegionCI region_ci_from(const CumSumTensor& cs, const Rect& region, double alpha, double delta, double K,
                               double sigma) {
  if (!(std::isfinite(sigma) && sigma > 0.0)) fail(ErrorKind::numeric, "sigma estimate must be > 0");
  check_region_admissible(region, delta, cs.data_shape());
  const double volume = static_cast<double>(region.volume());
  RegionCI ci;
  ci.region = region;
  ci.mean_hat = rect_sum(cs, region) / volume;
  ci.half_width = K * sigma / std::sqrt(volume);
  ci.lower = ci.mean_hat - ci.half_width;
  ci.upper = ci.mean_hat + ci.half_width;
  ci.alpha = alpha;
  ci.delta = delta;
  return ci;
}

inline void check_table_dim(const QuantileTable& table, std::size_t d) {
  if (table.dim() != d)
    fail(ErrorKind::usage, "quantile table is " + std::to_string(table.dim()) + "-dimensional, data is " +
                               std::to_string(d) + "-dimensional");
}

inline RegionCI region_ci(const Tensor& data, const Rect& region, double alpha, double delta,
                          const QuantileTable& table, const SigmaEstimator& est) {
  check_table_dim(table, data.dim());
  check_region_admissible(region, delta, data.shape());
  const double K = lookup(table, alpha, delta);
  return region_ci_from(CumSumTensor(data), region, alpha, delta, K, sigma_hat(data, est));
}

/// One-dimensional form: the region is the window (a, b].
inline RegionCI region_ci(const Series& data, std::size_t a, std::size_t b, double alpha, double delta,
                          const QuantileTable& table, const SigmaEstimator& est) {
  return region_ci(Tensor(data), Rect{{a}, {b}}, alpha, delta, table, est);
}

/// For consecutive segments: flag k is true when the intervals of segments k
/// and k + 1 intersect (closed intervals, so touching counts), i.e. the
/// breakpoint between them is not established at level alpha.
inline std::vector<bool> overlap_flags(std::span<const RegionCI> cis) {
  std::vector<bool> out;
  if (cis.size() < 2) return out;
  out.reserve(cis.size() - 1);
  for (std::size_t k = 0; k + 1 < cis.size(); ++k)
    out.push_back(cis[k].lower <= cis[k + 1].upper && cis[k + 1].lower <= cis[k].upper);
  return out;
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Goodness-of-fit test of a constant mean mu0:
/// T = sup over windows of length >= delta n of sqrt(|I|) |mean_I - mu0| / sigma_hat,
/// with a p-value from the simulated null suprema in store.
inline TestResult t_delta_test(const Series& data, double mu0, double delta, const SigmaEstimator& est,
                               const SampleStore& store) {
  if (store.dim() != 1) fail(ErrorKind::usage, "the test needs a 1-dimensional sample store");
  const double sigma = sigma_hat(data, est);
  if (!(std::isfinite(sigma) && sigma > 0.0)) fail(ErrorKind::numeric, "sigma estimate must be > 0");
  std::vector<double> centered(data.values().begin(), data.values().end());
  for (double& v : centered) v -= mu0;
  TestResult res;
  res.statistic = posir_sup_1d(Series(std::move(centered)), delta, sigma);
  res.p_value = tail_prob(store, delta, res.statistic);
  return res;
}

/// Standard normal quantile: Acklam's rational approximation followed by
/// one Halley step on erfc.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::usage, "normal quantile needs p in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Ratio of interval diameters, data splitting with Bonferroni over L
/// segments versus POSIR: sqrt(2) * z(1 - alpha / (2L)) / K(1 - alpha, delta).
/// Values above 1 mean the POSIR intervals are shorter.
inline double split_ratio(std::size_t segments, double alpha, double delta, const QuantileTable& table) {
  if (segments == 0) fail(ErrorKind::usage, "segment count must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::usage, "alpha must lie in (0, 1)");
  const double z = normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(segments)));
  return std::numbers::sqrt2 * z / lookup(table, alpha, delta);
}

}  // namespace posir
