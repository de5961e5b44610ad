#pragma once

// Effective simultaneous error levels under mu = 0.
//
// Each replicate draws noise, studentizes with the global empirical sigma
// and records whether the supremum over admissible regions exceeds the
// tabulated quantile. The exceedance proportion estimates the probability
// that at least one admissible region's interval misses its mean.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"
#include "posir/format.hpp"
#include "posir/inference.hpp"
#include "posir/ndstat.hpp"
#include "posir/noise.hpp"
#include "posir/parallel.hpp"
#include "posir/pruned_sup.hpp"
#include "posir/quantile_engine.hpp"

namespace posir {

struct CoverageReport {
  std::string noise;             // short text form of the noise spec
  Shape n;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  DeltaGrid grid;
  std::vector<double> alphas;
  std::vector<double> proportion;  // alpha-major, alphas.size() x grid.size()

  double at(std::size_t alpha_index, std::size_t delta_index) const {
    return proportion[alpha_index * grid.size() + delta_index];
  }
  /// Monte-Carlo standard error sqrt(p (1 - p) / R).
  double se(std::size_t alpha_index, std::size_t delta_index) const {
    const double p = at(alpha_index, delta_index);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(replicates));
  }
};

/// Fills the buffer with the noise of replicate r.
using NoiseSource = std::function<void(std::uint64_t replicate, std::span<double> out)>;

inline NoiseSource noise_source(const NoiseSpec& spec, std::uint64_t seed) {
  spec.validate();
  return [spec, seed](std::uint64_t r, std::span<double> out) {
    Engine engine = make_engine({seed, r});
    sample_into(spec, engine, out);
  };
}

struct CoverageConfig {
  Shape n;
  DeltaGrid grid;
  std::vector<double> alphas;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

namespace detail {

inline CoverageReport run_coverage(const CoverageConfig& cfg, const std::string& label, const NoiseSource& source,
                                   const QuantileTable& table) {
  if (cfg.replicates == 0) fail(ErrorKind::usage, "replicates must be >= 1");
  QuantileTable::check_alpha_grid(cfg.alphas);
  check_table_dim(table, cfg.n.size());
  const std::size_t d = cfg.n.size();
  if (d != 1 && d != 2) fail(ErrorKind::usage, "coverage simulation supports d = 1 or 2");
  const std::size_t m = cfg.grid.size();
  const std::size_t a = cfg.alphas.size();

  std::vector<double> threshold(a * m);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < m; ++j) threshold[i * m + j] = lookup(table, cfg.alphas[i], cfg.grid[j]);

  struct Worker {
    std::vector<double> noise;
    std::optional<PrunedGridSup1D> one;
    std::optional<PrunedGridSup2D> two;
  };
  const std::size_t volume = shape_volume(cfg.n);
  std::vector<std::uint8_t> exceed(cfg.replicates * a * m, 0);
  parallel_for(
      cfg.replicates, cfg.workers,
      [&] {
        Worker w;
        w.noise.resize(volume);
        if (d == 1) w.one.emplace(cfg.n[0], cfg.grid);
        if (d == 2) w.two.emplace(cfg.n, cfg.grid);
        return w;
      },
      [&](Worker& w, std::size_t r) {
        source(r, w.noise);
        const double sigma = SigmaEstimator::sample_sd(w.noise);
        if (!(sigma > 0.0)) fail(ErrorKind::numeric, "sigma estimate must be > 0");
        const auto sup = d == 1 ? (*w.one)(w.noise, sigma) : (*w.two)(Tensor(cfg.n, w.noise), sigma);
        std::uint8_t* row = exceed.data() + r * a * m;
        for (std::size_t k = 0; k < a * m; ++k) row[k] = sup[k % m] > threshold[k] ? 1 : 0;
      });

  CoverageReport rep;
  rep.noise = label;
  rep.n = cfg.n;
  rep.replicates = cfg.replicates;
  rep.seed = cfg.seed;
  rep.grid = cfg.grid;
  rep.alphas = cfg.alphas;
  rep.proportion.assign(a * m, 0.0);
  for (std::size_t k = 0; k < a * m; ++k) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) count += exceed[r * a * m + k];
    rep.proportion[k] = static_cast<double>(count) / static_cast<double>(cfg.replicates);
  }
  return rep;
}

}  // namespace detail

/// One-dimensional effective levels; cfg.n must have one entry.
inline CoverageReport effective_levels(const NoiseSpec& noise, const CoverageConfig& cfg, const QuantileTable& table) {
  if (cfg.n.size() != 1) fail(ErrorKind::usage, "effective_levels expects a 1-d shape");
  return detail::run_coverage(cfg, to_string(noise), noise_source(noise, cfg.seed), table);
}

/// Two-dimensional effective levels over rectangles; cfg.n = {n1, n2}.
inline CoverageReport effective_levels_2d(const NoiseSpec& noise, const CoverageConfig& cfg,
                                          const QuantileTable& table) {
  if (cfg.n.size() != 2) fail(ErrorKind::usage, "effective_levels_2d expects a 2-d shape");
  return detail::run_coverage(cfg, to_string(noise), noise_source(noise, cfg.seed), table);
}

/// Same as above with a caller-supplied noise source.
inline CoverageReport effective_levels_with(const NoiseSource& source, const std::string& label,
                                            const CoverageConfig& cfg, const QuantileTable& table) {
  return detail::run_coverage(cfg, label, source, table);
}

inline void write_coverage_header(std::ostream& os) { os << "family,params,n,delta,alpha,proportion,se,R,seed\n"; }

/// Tidy CSV rows; parameters inside a field are separated by ';'.
inline void write_coverage_rows(std::ostream& os, const CoverageReport& rep) {
  const auto colon = rep.noise.find(':');
  const std::string family = rep.noise.substr(0, colon);
  std::string params = colon == std::string::npos ? std::string{} : rep.noise.substr(colon + 1);
  for (char& c : params)
    if (c == ',') c = ';';
  for (std::size_t i = 0; i < rep.alphas.size(); ++i)
    for (std::size_t j = 0; j < rep.grid.size(); ++j)
      os << family << ',' << params << ',' << format_shape(rep.n) << ',' << format_number(rep.grid[j]) << ','
         << format_number(rep.alphas[i]) << ',' << format_number(rep.at(i, j)) << ',' << format_number(rep.se(i, j))
         << ',' << rep.replicates << ',' << rep.seed << '\n';
}

}  // namespace posir
