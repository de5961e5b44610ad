#pragma once

// POSIR statistic over hyper-rectangles of a d-dimensional array.
//
// Rectangle sums come from the cumulative-sum tensor through the 2^d vertex
// identity. The rectangle ((a_1, b_1], ..., (a_d, b_d)] has statistic
// |sum| / (scale * sqrt(prod_j (b_j - a_j))) and is admissible for
// gamma when every side satisfies b_j - a_j >= ceil(gamma_j * n_j).
//
// d = 1 and d = 2 are the tested dimensions. Higher d works but costs
// prod_j n_j^2 and is treated as experimental.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"

namespace posir {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Row-major strides (last axis fastest).
inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t j = shape.size(); j-- > 1;) strides[j - 1] = strides[j] * shape[j];
  return strides;
}

/// A d-dimensional array of finite values in row-major order.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty()) fail(ErrorKind::data, "tensor needs at least one axis");
    for (std::size_t n : shape_)
      if (n == 0) fail(ErrorKind::data, "tensor axis of length 0");
    if (values_.size() != shape_volume(shape_)) fail(ErrorKind::data, "tensor value count does not match its shape");
    for (double v : values_)
      if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite data");
  }

  explicit Tensor(const Series& series) : Tensor({series.size()}, {series.values().begin(), series.values().end()}) {}

  std::size_t dim() const noexcept { return shape_.size(); }
  const Shape& shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Region (a_1, b_1] x ... x (a_d, b_d] in 0-based cumulative-sum coordinates.
struct Rect {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;

  std::size_t dim() const noexcept { return a.size(); }
  std::size_t side(std::size_t j) const { return b[j] - a[j]; }
  std::size_t volume() const {
    std::size_t v = 1;
    for (std::size_t j = 0; j < a.size(); ++j) v *= side(j);
    return v;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline void check_rect(const Rect& r, const Shape& shape) {
  if (r.a.size() != shape.size() || r.b.size() != shape.size())
    fail(ErrorKind::usage, "rect dimension does not match the data");
  for (std::size_t j = 0; j < shape.size(); ++j)
    if (!(r.a[j] < r.b[j] && r.b[j] <= shape[j])) fail(ErrorKind::usage, "rect out of bounds");
}

/// Per-axis relative minimum side lengths, each in (0, 1].
class GammaVec {
 public:
  GammaVec() = default;

  explicit GammaVec(std::vector<double> gammas) : gammas_(std::move(gammas)) {
    if (gammas_.empty()) fail(ErrorKind::usage, "empty gamma vector");
    for (double g : gammas_) check_delta(g);
  }

  static GammaVec isotropic(double delta, std::size_t d) { return GammaVec(std::vector<double>(d, delta)); }

  std::size_t size() const noexcept { return gammas_.size(); }
  double operator[](std::size_t j) const { return gammas_[j]; }

 private:
  std::vector<double> gammas_;
};

/// Cumulative sums over a tensor, shape (n_1 + 1, ..., n_d + 1). Entries with
/// any coordinate 0 are 0.
class CumSumTensor {
 public:
  explicit CumSumTensor(const Tensor& t) : data_shape_(t.shape()) {
    const std::size_t d = data_shape_.size();
    shape_.resize(d);
    for (std::size_t j = 0; j < d; ++j) shape_[j] = data_shape_[j] + 1;
    strides_ = row_major_strides(shape_);
    sums_.assign(shape_volume(shape_), 0.0);

    const auto data_strides = row_major_strides(data_shape_);
    const auto values = t.values();
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
      std::size_t off = 0;
      for (std::size_t j = 0; j < d; ++j) off += ((flat / data_strides[j]) % data_shape_[j] + 1) * strides_[j];
      sums_[off] = values[flat];
    }
    // Running sums along one axis at a time.
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t stride = strides_[j];
      for (std::size_t off = 0; off < sums_.size(); ++off) {
        if ((off / stride) % shape_[j] != 0) sums_[off] += sums_[off - stride];
      }
    }
  }

  std::size_t dim() const noexcept { return shape_.size(); }
  /// Shape of the underlying data (n_1, ..., n_d).
  const Shape& data_shape() const noexcept { return data_shape_; }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  std::span<const double> sums() const noexcept { return sums_; }

  double at(std::span<const std::size_t> index) const {
    std::size_t off = 0;
    for (std::size_t j = 0; j < index.size(); ++j) off += index[j] * strides_[j];
    return sums_[off];
  }

 private:
  Shape data_shape_;
  Shape shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> sums_;
};

namespace detail {

// Vertex identity without bounds checks. Corner h picks b_j when bit j of h
// is set. Differences are taken along axis 0 first, then axis 1, and so on;
// for d = 2 this is (C[b1][b2] - C[a1][b2]) - (C[b1][a2] - C[a1][a2]).
inline double rect_sum_unchecked(const CumSumTensor& cs, const std::size_t* a, const std::size_t* b) {
  const std::size_t d = cs.dim();
  const auto& strides = cs.strides();
  const auto sums = cs.sums();
  if (d == 1) return sums[b[0]] - sums[a[0]];
  if (d == 2) {
    const std::size_t rb = b[0] * strides[0], ra = a[0] * strides[0];
    return (sums[rb + b[1]] - sums[ra + b[1]]) - (sums[rb + a[1]] - sums[ra + a[1]]);
  }
  std::vector<double> vals(std::size_t{1} << d);
  for (std::size_t h = 0; h < vals.size(); ++h) {
    std::size_t off = 0;
    for (std::size_t j = 0; j < d; ++j) off += (((h >> j) & 1U) ? b[j] : a[j]) * strides[j];
    vals[h] = sums[off];
  }
  for (std::size_t size = vals.size(); size > 1; size /= 2)
    for (std::size_t h = 0; h < size / 2; ++h) vals[h] = vals[2 * h + 1] - vals[2 * h];
  return vals[0];
}

// 1 / sqrt(p) for every p up to the tensor volume.
inline std::vector<double> inverse_sqrt_volume_table(const Shape& shape) {
  return inverse_sqrt_table(shape_volume(shape));
}

// Calls fn(lengths) for every length vector with lo[j] <= L_j <= hi[j].
template <class Fn>
void for_each_box(const std::vector<std::size_t>& lo, const std::vector<std::size_t>& hi, Fn&& fn) {
  const std::size_t d = lo.size();
  for (std::size_t j = 0; j < d; ++j)
    if (lo[j] > hi[j]) return;
  std::vector<std::size_t> cur = lo;
  while (true) {
    fn(std::as_const(cur));
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (cur[j] < hi[j]) {
        ++cur[j];
        break;
      }
      cur[j] = lo[j];
      if (j == 0) return;
    }
  }
}

// max over positions of |rect sum| for rects with the given side lengths.
inline double max_abs_sum_for_lengths(const CumSumTensor& cs, const std::vector<std::size_t>& lengths) {
  const auto& n = cs.data_shape();
  const std::size_t d = n.size();
  std::vector<std::size_t> lo(d, 0), hi(d), b(d);
  for (std::size_t j = 0; j < d; ++j) hi[j] = n[j] - lengths[j];
  double m = 0.0;
  for_each_box(lo, hi, [&](const std::vector<std::size_t>& a) {
    for (std::size_t j = 0; j < d; ++j) b[j] = a[j] + lengths[j];
    m = std::max(m, std::fabs(rect_sum_unchecked(cs, a.data(), b.data())));
  });
  return m;
}

}  // namespace detail

/// Sum of the data over a rectangle, from the 2^d vertices of the cumulative sums.
inline double rect_sum(const CumSumTensor& cs, const Rect& r) {
  check_rect(r, cs.data_shape());
  return detail::rect_sum_unchecked(cs, r.a.data(), r.b.data());
}

/// Minimum admissible side lengths ceil(gamma_j * n_j); throws when some axis has none.
inline std::vector<std::size_t> min_side_lengths(const GammaVec& gamma, const Shape& shape) {
  if (gamma.size() != shape.size()) fail(ErrorKind::usage, "gamma dimension does not match the data");
  std::vector<std::size_t> out(shape.size());
  for (std::size_t j = 0; j < shape.size(); ++j) {
    out[j] = min_window_length(gamma[j], shape[j]);
    if (out[j] > shape[j]) fail(ErrorKind::numeric, "gamma too large");
  }
  return out;
}

inline bool is_admissible(const Rect& r, const GammaVec& gamma, const Shape& shape) {
  const auto lmin = min_side_lengths(gamma, shape);
  for (std::size_t j = 0; j < shape.size(); ++j)
    if (r.side(j) < lmin[j]) return false;
  return true;
}

/// Supremum over rectangles whose sides satisfy b_j - a_j >= ceil(gamma_j n_j).
inline double posir_sup_nd(const Tensor& t, const GammaVec& gamma, double scale) {
  check_scale(scale);
  const auto lmin = min_side_lengths(gamma, t.shape());
  const CumSumTensor cs(t);
  const auto inv_sqrt = detail::inverse_sqrt_volume_table(t.shape());
  double best = 0.0;
  detail::for_each_box(lmin, t.shape(), [&](const std::vector<std::size_t>& lengths) {
    std::size_t vol = 1;
    for (std::size_t L : lengths) vol *= L;
    best = std::max(best, detail::max_abs_sum_for_lengths(cs, lengths) * inv_sqrt[vol]);
  });
  return best / scale;
}

/// One supremum per delta for the isotropic family gamma = delta * (1, ..., 1).
/// Maxima are computed once per side-length vector, then reduced by a suffix
/// maximum over the grid.
inline std::vector<double> posir_sup_grid_nd(const Tensor& t, const DeltaGrid& grid, double scale) {
  check_scale(scale);
  const auto& shape = t.shape();
  const std::size_t d = shape.size();
  const std::size_t m = grid.size();
  // Per-axis bucket of a side length: largest grid index j with L >= ceil(delta_j n).
  std::vector<std::vector<int>> bucket(d);
  std::vector<std::size_t> lo(d);
  for (std::size_t ax = 0; ax < d; ++ax) {
    const auto lengths = grid.min_lengths(shape[ax]);
    if (lengths.back() > shape[ax]) fail(ErrorKind::numeric, "gamma too large");
    lo[ax] = lengths.front();
    bucket[ax].assign(shape[ax] + 1, -1);
    for (std::size_t L = 1; L <= shape[ax]; ++L)
      for (std::size_t j = 0; j < m; ++j)
        if (lengths[j] <= L) bucket[ax][L] = static_cast<int>(j);
  }
  const CumSumTensor cs(t);
  const auto inv_sqrt = detail::inverse_sqrt_volume_table(shape);
  std::vector<double> best(m, 0.0);
  detail::for_each_box(lo, shape, [&](const std::vector<std::size_t>& lengths) {
    std::size_t vol = 1;
    int k = static_cast<int>(m) - 1;
    for (std::size_t ax = 0; ax < d; ++ax) {
      vol *= lengths[ax];
      k = std::min(k, bucket[ax][lengths[ax]]);
    }
    const double v = detail::max_abs_sum_for_lengths(cs, lengths) * inv_sqrt[vol];
    best[static_cast<std::size_t>(k)] = std::max(best[static_cast<std::size_t>(k)], v);
  });
  for (std::size_t j = m - 1; j-- > 0;) best[j] = std::max(best[j], best[j + 1]);
  for (double& v : best) v /= scale;
  return best;
}

}  // namespace posir
