#pragma once

// Exact branch-and-bound evaluation of the grid suprema, used by the
// Monte-Carlo engines.
//
// Pairs of dyadic blocks (I, K) of prefix-sum indices are visited from the
// coarsest level down. For a in I and b in K we have
//   |S_b - S_a| <= max(max_K S - min_I S, max_I S - min_K S)
// and the normalization is non-increasing in b - a, so a block pair whose
// bound cannot beat the running maximum of every grid bucket it touches is
// skipped. Every value that is evaluated is computed with exactly the same
// floating-point operations as the reference scans in core_stat.hpp and
// ndstat.hpp; because rounding is monotone the results are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/ndstat.hpp"

namespace posir {

namespace detail {

// Running suffix maxima over grid buckets. suffix[j] is the best value seen
// among windows whose bucket is >= j, i.e. the current supremum for delta_j.
struct BucketMaxima {
  std::vector<double> suffix;

  explicit BucketMaxima(std::size_t m = 0) : suffix(m, 0.0) {}

  void reset() { std::fill(suffix.begin(), suffix.end(), 0.0); }

  void offer(std::size_t k, double v) {
    if (!(v > suffix[k])) return;
    for (std::size_t j = k + 1; j-- > 0 && suffix[j] < v;) suffix[j] = v;
  }
};

// Branch-and-bound scan of one prefix-sum sequence P[0..N]. Window (a, b]
// has value |P[b] - P[a]| * norm(b - a) and grid bucket
// min(cap, raw_bucket[b - a]).
class DyadicScanner {
 public:
  static constexpr unsigned kLeafLevel = 3;

  // min_lengths: non-decreasing minimum window length per grid bucket.
  DyadicScanner(std::size_t N, std::vector<std::size_t> min_lengths)
      : N_(N), min_lengths_(std::move(min_lengths)), raw_bucket_(N + 1, -1) {
    for (std::size_t L = 1; L <= N_; ++L)
      for (std::size_t j = 0; j < min_lengths_.size(); ++j)
        if (min_lengths_[j] <= L) raw_bucket_[L] = static_cast<int>(j);
    top_ = 0;
    while ((std::size_t{1} << top_) < N_ + 1) ++top_;
    mins_.resize(top_ + 1);
    maxs_.resize(top_ + 1);
    for (unsigned l = 0; l <= top_; ++l) {
      const std::size_t blocks = ((N_ + 1) + (std::size_t{1} << l) - 1) >> l;
      mins_[l].resize(blocks);
      maxs_[l].resize(blocks);
    }
  }

  std::size_t length() const noexcept { return N_; }

  // Offers every admissible window of P to acc. norm(L) must be
  // non-increasing in L. Only buckets <= cap are touched.
  // With seed set, a coarse lattice of windows is evaluated first.
  template <class Norm>
  void scan(std::span<const double> P, std::size_t cap, const Norm& norm, BucketMaxima& acc, bool seed = true) {
    P_ = P.data();
    cap_ = static_cast<int>(cap);
    build_pyramid();
    const std::size_t lmin = min_lengths_.front();
    if (lmin > N_) return;
    if (!promising(maxs_[top_][0] - mins_[top_][0], lmin, N_, norm, acc)) return;
    if (seed) seed_lattice(norm, acc);
    visit(top_, 0, 0, norm, acc);
  }

 private:
  int bucket(std::size_t L) const { return std::min(cap_, raw_bucket_[L]); }

  void build_pyramid() {
    for (std::size_t i = 0; i <= N_; ++i) mins_[0][i] = maxs_[0][i] = P_[i];
    for (unsigned l = 1; l <= top_; ++l) {
      const auto& pmin = mins_[l - 1];
      const auto& pmax = maxs_[l - 1];
      for (std::size_t i = 0; i < mins_[l].size(); ++i) {
        const std::size_t c = 2 * i;
        if (c + 1 < pmin.size()) {
          mins_[l][i] = std::min(pmin[c], pmin[c + 1]);
          maxs_[l][i] = std::max(pmax[c], pmax[c + 1]);
        } else {
          mins_[l][i] = pmin[c];
          maxs_[l][i] = pmax[c];
        }
      }
    }
  }

  template <class Norm>
  void offer_window(std::size_t a, std::size_t b, const Norm& norm, BucketMaxima& acc) const {
    const std::size_t L = b - a;
    acc.offer(static_cast<std::size_t>(bucket(L)), std::fabs(P_[b] - P_[a]) * norm(L));
  }

  // Can a window with |P[b] - P[a]| <= spread and length in [shortest, longest]
  // raise the running maximum of its bucket?
  template <class Norm>
  bool promising(double spread, std::size_t shortest, std::size_t longest, const Norm& norm,
                 const BucketMaxima& acc) const {
    const int k_lo = bucket(shortest);
    const int k_hi = bucket(longest);
    for (int kb = k_lo; kb <= k_hi; ++kb) {
      const std::size_t L = std::max(shortest, min_lengths_[static_cast<std::size_t>(kb)]);
      if (L > longest) break;
      if (spread * norm(L) > acc.suffix[static_cast<std::size_t>(kb)]) return true;
    }
    return false;
  }

  // A coarse lattice of windows gives good running maxima before pruning starts.
  template <class Norm>
  void seed_lattice(const Norm& norm, BucketMaxima& acc) const {
    const std::size_t lmin = min_lengths_.front();
    const std::size_t stride = std::max<std::size_t>(1, N_ / 32);
    for (std::size_t a = 0; a + lmin <= N_; a += stride)
      for (std::size_t b = N_; b >= a + lmin; b -= std::min(stride, b)) offer_window(a, b, norm, acc);
  }

  template <class Norm>
  void visit(unsigned l, std::size_t i, std::size_t k, const Norm& norm, BucketMaxima& acc) const {
    const std::size_t a_lo = i << l;
    const std::size_t b_lo = k << l;
    if (a_lo > N_ || b_lo > N_) return;
    const std::size_t a_hi = std::min(a_lo + (std::size_t{1} << l) - 1, N_);
    const std::size_t b_hi = std::min(b_lo + (std::size_t{1} << l) - 1, N_);
    const std::size_t lmin = min_lengths_.front();
    const std::size_t longest = b_hi - a_lo;
    if (longest < lmin) return;

    if (i == k) {
      if (l == 0) return;
      if (l <= kLeafLevel) {
        for (std::size_t a = a_lo; a + lmin <= a_hi; ++a)
          for (std::size_t b = a + lmin; b <= a_hi; ++b) offer_window(a, b, norm, acc);
        return;
      }
      visit(l - 1, 2 * i, 2 * i, norm, acc);
      visit(l - 1, 2 * i, 2 * i + 1, norm, acc);
      visit(l - 1, 2 * i + 1, 2 * i + 1, norm, acc);
      return;
    }

    const std::size_t shortest = std::max(b_lo - a_hi, lmin);
    const double spread = std::max(maxs_[l][k] - mins_[l][i], maxs_[l][i] - mins_[l][k]);
    if (!promising(spread, shortest, longest, norm, acc)) return;

    if (l <= kLeafLevel) {
      for (std::size_t a = a_lo; a <= a_hi; ++a) {
        const std::size_t b0 = std::max(b_lo, a + lmin);
        for (std::size_t b = b0; b <= b_hi; ++b) offer_window(a, b, norm, acc);
      }
      return;
    }
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) visit(l - 1, 2 * i + x, 2 * k + y, norm, acc);
  }

  std::size_t N_;
  std::vector<std::size_t> min_lengths_;
  std::vector<int> raw_bucket_;
  unsigned top_ = 0;
  std::vector<std::vector<double>> mins_;
  std::vector<std::vector<double>> maxs_;
  const double* P_ = nullptr;
  int cap_ = 0;
};

}  // namespace detail

/// Reusable evaluator of posir_sup_grid_1d for many series of one length.
/// Results are bit-identical to posir_sup_grid_1d.
class PrunedGridSup1D {
 public:
  PrunedGridSup1D(std::size_t n, const DeltaGrid& grid)
      : n_(n), m_(grid.size()), inv_sqrt_(inverse_sqrt_table(n)), scanner_(n, grid.min_lengths(n)), acc_(grid.size()) {
    if (grid.min_lengths(n).back() > n) fail(ErrorKind::numeric, "delta too large for n");
  }

  std::vector<double> operator()(std::span<const double> values, double scale) {
    check_scale(scale);
    if (values.size() != n_) fail(ErrorKind::usage, "series length does not match the evaluator");
    prefix_.assign(n_ + 1, 0.0);
    for (std::size_t k = 0; k < n_; ++k) prefix_[k + 1] = prefix_[k] + values[k];
    acc_.reset();
    const auto& inv = inv_sqrt_;
    scanner_.scan(prefix_, m_ - 1, [&inv](std::size_t L) { return inv[L]; }, acc_);
    std::vector<double> out(acc_.suffix);
    for (double& v : out) v /= scale;
    return out;
  }

  std::vector<double> operator()(const Series& series, double scale) { return (*this)(series.values(), scale); }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> inv_sqrt_;
  detail::DyadicScanner scanner_;
  detail::BucketMaxima acc_;
  std::vector<double> prefix_;
};

/// Reusable evaluator of posir_sup_grid_nd for d = 2 and a fixed shape.
/// Each pair of rows (a_1, b_1) reduces to a one-dimensional scan of the
/// column strip sums. Results are bit-identical to posir_sup_grid_nd.
class PrunedGridSup2D {
 public:
  PrunedGridSup2D(const Shape& shape, const DeltaGrid& grid)
      : shape_(shape),
        m_(grid.size()),
        row_lengths_(check_shape(shape, grid)),
        inv_sqrt_(detail::inverse_sqrt_volume_table(shape)),
        scanner_(shape[1], grid.min_lengths(shape[1])),
        acc_(grid.size()) {}

  std::vector<double> operator()(const Tensor& t, double scale) {
    check_scale(scale);
    if (t.shape() != shape_) fail(ErrorKind::usage, "tensor shape does not match the evaluator");
    const CumSumTensor cs(t);
    const std::size_t n1 = shape_[0], n2 = shape_[1];
    const std::size_t stride = cs.strides()[0];
    const auto C = cs.sums();
    strip_.assign(n2 + 1, 0.0);
    acc_.reset();
    bool first = true;
    for (std::size_t L1 = n1; L1 >= row_lengths_.front(); --L1) {
      std::size_t cap = 0;
      for (std::size_t j = 0; j < m_; ++j)
        if (row_lengths_[j] <= L1) cap = j;
      const double* inv = inv_sqrt_.data();
      const auto norm = [inv, L1](std::size_t L2) { return inv[L1 * L2]; };
      for (std::size_t a1 = 0; a1 + L1 <= n1; ++a1) {
        const double* top = C.data() + (a1 + L1) * stride;
        const double* bottom = C.data() + a1 * stride;
        for (std::size_t x = 0; x <= n2; ++x) strip_[x] = top[x] - bottom[x];
        scanner_.scan(strip_, cap, norm, acc_, first);
        first = false;
      }
      if (L1 == 1) break;
    }
    std::vector<double> out(acc_.suffix);
    for (double& v : out) v /= scale;
    return out;
  }

 private:
  static std::vector<std::size_t> check_shape(const Shape& shape, const DeltaGrid& grid) {
    if (shape.size() != 2) fail(ErrorKind::usage, "PrunedGridSup2D needs a 2-d shape");
    return grid.min_lengths(shape[0]);
  }

  Shape shape_;
  std::size_t m_;
  std::vector<std::size_t> row_lengths_;
  std::vector<double> inv_sqrt_;
  detail::DyadicScanner scanner_;
  detail::BucketMaxima acc_;
  std::vector<double> strip_;
};

}  // namespace posir
