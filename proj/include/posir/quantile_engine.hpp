#pragma once

// Monte-Carlo quantiles of the limiting POSIR functional.
//
// Replicate r draws standard Gaussian white noise from stream (seed, r) on a
// grid of n points per axis and records the discrete supremum for every
// delta of the grid (scale 1, no studentization). Quantiles are upper order
// statistics of each column, so tables are monotone in both alpha and delta
// by construction.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"
#include "posir/format.hpp"
#include "posir/ndstat.hpp"
#include "posir/noise.hpp"
#include "posir/parallel.hpp"
#include "posir/pruned_sup.hpp"

namespace posir {

inline constexpr int kTableFormatVersion = 1;

/// How a table or store was generated.
struct GenerationMeta {
  Shape n;                        // points per axis; size() is the dimension
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  std::string generator = "gaussian:sd=1";
  std::string created;            // empty when output must be deterministic

  std::size_t dim() const noexcept { return n.size(); }
  friend bool operator==(const GenerationMeta&, const GenerationMeta&) = default;
};

inline std::string format_shape(const Shape& n) {
  std::string out;
  for (std::size_t j = 0; j < n.size(); ++j) out += (j ? "x" : "") + std::to_string(n[j]);
  return out;
}

inline Shape parse_shape(const std::string& text) {
  Shape out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto x = text.find('x', pos);
    const std::string part = text.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
    const auto v = parse_number(part);
    if (!v || *v < 1 || *v != std::floor(*v)) fail(ErrorKind::data, "bad shape '" + text + "'");
    out.push_back(static_cast<std::size_t>(*v));
    if (x == std::string::npos) break;
    pos = x + 1;
  }
  return out;
}

/// Raw simulated suprema: one row per replicate, one column per delta.
class SampleStore {
 public:
  SampleStore() = default;
  SampleStore(GenerationMeta meta, DeltaGrid grid, std::vector<double> samples)
      : meta_(std::move(meta)), grid_(std::move(grid)), samples_(std::move(samples)) {
    if (grid_.size() == 0 || samples_.size() % grid_.size() != 0)
      fail(ErrorKind::data, "sample count is not a multiple of the grid size");
    meta_.replicates = samples_.size() / grid_.size();
  }

  const GenerationMeta& meta() const noexcept { return meta_; }
  const DeltaGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return meta_.dim(); }
  std::size_t replicates() const noexcept { return grid_.size() ? samples_.size() / grid_.size() : 0; }
  std::span<const double> samples() const noexcept { return samples_; }

  double at(std::size_t r, std::size_t j) const { return samples_[r * grid_.size() + j]; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(replicates());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, j);
    return out;
  }

 private:
  GenerationMeta meta_;
  DeltaGrid grid_;
  std::vector<double> samples_;
};

/// Quantiles K(1 - alpha, delta); rows follow the alpha grid, columns the delta grid.
class QuantileTable {
 public:
  QuantileTable() = default;
  QuantileTable(GenerationMeta meta, std::vector<double> alphas, DeltaGrid deltas, std::vector<double> quantiles)
      : meta_(std::move(meta)), alphas_(std::move(alphas)), deltas_(std::move(deltas)), q_(std::move(quantiles)) {
    check_alpha_grid(alphas_);
    if (q_.size() != alphas_.size() * deltas_.size()) fail(ErrorKind::data, "quantile matrix has the wrong size");
  }

  static void check_alpha_grid(const std::vector<double>& alphas) {
    if (alphas.empty()) fail(ErrorKind::usage, "empty alpha grid");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) fail(ErrorKind::usage, "alpha must lie in (0, 1)");
      if (i > 0 && !(alphas[i] > alphas[i - 1])) fail(ErrorKind::usage, "alpha grid must be strictly increasing");
    }
  }

  const GenerationMeta& meta() const noexcept { return meta_; }
  GenerationMeta& meta() noexcept { return meta_; }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  const DeltaGrid& deltas() const noexcept { return deltas_; }
  std::size_t dim() const noexcept { return meta_.dim(); }

  double at(std::size_t alpha_index, std::size_t delta_index) const {
    return q_[alpha_index * deltas_.size() + delta_index];
  }

  friend bool operator==(const QuantileTable& x, const QuantileTable& y) {
    return x.meta_ == y.meta_ && x.alphas_ == y.alphas_ &&
           std::equal(x.deltas_.values().begin(), x.deltas_.values().end(), y.deltas_.values().begin(),
                      y.deltas_.values().end()) &&
           x.q_ == y.q_;
  }

 private:
  GenerationMeta meta_;
  std::vector<double> alphas_;
  DeltaGrid deltas_;
  std::vector<double> q_;
};

inline const DeltaGrid& default_delta_grid() {
  static const DeltaGrid grid({0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  return grid;
}

inline const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> alphas{0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.5};
  return alphas;
}

struct SimulationConfig {
  Shape n;                       // points per axis
  DeltaGrid grid = default_delta_grid();
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;          // 0 = hardware concurrency
};

/// Simulated suprema for every replicate and delta. The result does not
/// depend on the worker count.
inline SampleStore simulate_samples(const SimulationConfig& cfg) {
  if (cfg.replicates == 0) fail(ErrorKind::usage, "replicates must be >= 1");
  if (cfg.n.empty()) fail(ErrorKind::usage, "dimension must be >= 1");
  for (std::size_t nj : cfg.n)
    if (nj == 0) fail(ErrorKind::usage, "n must be >= 1");
  const std::size_t d = cfg.n.size();
  const std::size_t m = cfg.grid.size();
  const std::size_t volume = shape_volume(cfg.n);
  for (std::size_t nj : cfg.n)
    if (cfg.grid.min_lengths(nj).back() > nj) fail(ErrorKind::numeric, "delta too large for n");

  struct Worker {
    std::vector<double> noise;
    std::optional<PrunedGridSup1D> one;
    std::optional<PrunedGridSup2D> two;
  };
  const NoiseSpec standard = NoiseSpec::gaussian(1.0);
  std::vector<double> samples(cfg.replicates * m);
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
        Engine engine = make_engine({cfg.seed, r});
        sample_into(standard, engine, w.noise);
        std::vector<double> sup;
        if (d == 1) {
          sup = (*w.one)(w.noise, 1.0);
        } else if (d == 2) {
          sup = (*w.two)(Tensor(cfg.n, w.noise), 1.0);
        } else {
          sup = posir_sup_grid_nd(Tensor(cfg.n, w.noise), cfg.grid, 1.0);
        }
        std::copy(sup.begin(), sup.end(), samples.begin() + static_cast<std::ptrdiff_t>(r * m));
      });

  GenerationMeta meta;
  meta.n = cfg.n;
  meta.replicates = cfg.replicates;
  meta.seed = cfg.seed;
  meta.generator = to_string(standard);
  return SampleStore(std::move(meta), cfg.grid, std::move(samples));
}

/// 1-based rank of the upper order statistic used for the (1 - alpha) quantile.
inline std::size_t quantile_rank(double alpha, std::size_t replicates) {
  const double raw = std::ceil((1.0 - alpha) * static_cast<double>(replicates) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, replicates);
}

/// True when the smallest alpha is too small for the replicate count.
inline bool undersampled(std::size_t replicates, const std::vector<double>& alphas) {
  return !alphas.empty() && static_cast<double>(replicates) * alphas.front() < 1.0;
}

inline QuantileTable quantiles_from_samples(const SampleStore& store, std::vector<double> alphas) {
  QuantileTable::check_alpha_grid(alphas);
  const std::size_t R = store.replicates();
  if (R == 0) fail(ErrorKind::data, "empty sample store");
  const std::size_t m = store.grid().size();
  std::vector<double> q(alphas.size() * m);
  for (std::size_t j = 0; j < m; ++j) {
    auto col = store.column(j);
    std::sort(col.begin(), col.end());
    for (std::size_t i = 0; i < alphas.size(); ++i) q[i * m + j] = col[quantile_rank(alphas[i], R) - 1];
  }
  return QuantileTable(store.meta(), std::move(alphas), store.grid(), std::move(q));
}

namespace detail {

// Index of the largest grid value <= x (with a relative tolerance for values
// that went through text), or npos.
inline std::size_t snap_down(std::span<const double> grid, double x) {
  std::size_t found = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] <= x * (1.0 + 1e-12)) found = i;
  return found;
}

}  // namespace detail

/// Column of the store or table that serves a requested delta: the largest
/// grid delta not above it.
inline std::size_t delta_column(const DeltaGrid& grid, double delta) {
  const std::size_t j = detail::snap_down(grid.values(), delta);
  if (j == static_cast<std::size_t>(-1)) fail(ErrorKind::numeric, "delta not covered by table");
  return j;
}

/// K(1 - alpha, delta). Off-grid requests snap to the largest grid alpha <=
/// alpha and the largest grid delta <= delta; both can only enlarge K.
inline double lookup(const QuantileTable& table, double alpha, double delta) {
  const auto& alphas = table.alphas();
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::usage, "alpha must lie in (0, 1)");
  if (alpha > alphas.back() * (1.0 + 1e-12)) fail(ErrorKind::numeric, "alpha not covered by table");
  const std::size_t i = detail::snap_down(alphas, alpha);
  if (i == static_cast<std::size_t>(-1)) fail(ErrorKind::numeric, "alpha not covered by table");
  return table.at(i, delta_column(table.deltas(), delta));
}

/// Monte-Carlo p-value (#{samples > t} + 1) / (R + 1).
inline double tail_prob(const SampleStore& store, double delta, double t) {
  const std::size_t j = delta_column(store.grid(), delta);
  const std::size_t R = store.replicates();
  if (R == 0) fail(ErrorKind::data, "empty sample store");
  std::size_t above = 0;
  for (std::size_t r = 0; r < R; ++r) above += store.at(r, j) > t ? 1 : 0;
  return static_cast<double>(above + 1) / static_cast<double>(R + 1);
}

// ---------------------------------------------------------------------------
// Persistence

inline void write_meta_lines(std::ostream& os, const GenerationMeta& meta, const std::string& prefix) {
  os << prefix << "format-version=" << kTableFormatVersion << '\n';
  os << prefix << "d=" << meta.dim() << '\n';
  os << prefix << "n=" << format_shape(meta.n) << '\n';
  os << prefix << "replicates=" << meta.replicates << '\n';
  os << prefix << "seed=" << meta.seed << '\n';
  os << prefix << "generator=" << meta.generator << '\n';
  if (!meta.created.empty()) os << prefix << "created=" << meta.created << '\n';
}

namespace detail {

inline std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const auto v = parse_number(value);
  if (!v || *v < 0 || *v != std::floor(*v)) fail(ErrorKind::data, "bad value for " + key + ": '" + value + "'");
  return static_cast<std::uint64_t>(*v);
}

// Fills meta from key=value pairs; checks the format version.
inline GenerationMeta meta_from_pairs(const std::map<std::string, std::string>& kv) {
  const auto version = kv.find("format-version");
  if (version == kv.end()) fail(ErrorKind::data, "missing format-version");
  if (version->second != std::to_string(kTableFormatVersion))
    fail(ErrorKind::data, "unsupported format-version " + version->second);
  GenerationMeta meta;
  if (auto it = kv.find("n"); it != kv.end()) meta.n = parse_shape(it->second);
  if (auto it = kv.find("d"); it != kv.end()) {
    const auto d = parse_count("d", it->second);
    if (meta.n.empty()) meta.n.assign(d, 0);
    if (meta.n.size() != d) fail(ErrorKind::data, "d does not match n");
  }
  if (meta.n.empty()) fail(ErrorKind::data, "missing d");
  if (auto it = kv.find("replicates"); it != kv.end()) meta.replicates = parse_count("replicates", it->second);
  if (auto it = kv.find("seed"); it != kv.end()) meta.seed = parse_count("seed", it->second);
  if (auto it = kv.find("generator"); it != kv.end()) meta.generator = it->second;
  if (auto it = kv.find("created"); it != kv.end()) meta.created = it->second;
  return meta;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// CSV layout: "#"-prefixed metadata lines, a header "alpha\delta,d1,d2,...",
/// then one row per alpha.
inline void write_table_csv(std::ostream& os, const QuantileTable& table) {
  os << "# posir quantile table\n";
  write_meta_lines(os, table.meta(), "# ");
  os << "alpha\\delta";
  for (double d : table.deltas().values()) os << ',' << format_number(d);
  os << '\n';
  for (std::size_t i = 0; i < table.alphas().size(); ++i) {
    os << format_number(table.alphas()[i]);
    for (std::size_t j = 0; j < table.deltas().size(); ++j) os << ',' << format_number(table.at(i, j));
    os << '\n';
  }
}

inline QuantileTable read_table_csv(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::vector<double> deltas, alphas, q;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& what) { fail(ErrorKind::data, "line " + std::to_string(line_no) + ": " + what); };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.erase(body.begin());
      const auto eq = body.find('=');
      if (eq != std::string::npos) kv[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    const auto fields = detail::split_csv(line);
    if (!header_seen) {
      if (fields.size() < 2) bad("table header needs at least one delta column");
      for (std::size_t f = 1; f < fields.size(); ++f) {
        const auto v = parse_number(fields[f]);
        if (!v) bad("bad delta '" + fields[f] + "'");
        deltas.push_back(*v);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != deltas.size() + 1) bad("expected " + std::to_string(deltas.size() + 1) + " fields");
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto v = parse_number(fields[f]);
      if (!v) bad("bad number '" + fields[f] + "'");
      (f == 0 ? alphas : q).push_back(*v);
    }
  }
  if (!header_seen) fail(ErrorKind::data, "quantile table has no header row");
  GenerationMeta meta = detail::meta_from_pairs(kv);
  return QuantileTable(std::move(meta), std::move(alphas), DeltaGrid(std::move(deltas)), std::move(q));
}

inline void save_table(const std::string& path, const QuantileTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot write " + path);
  write_table_csv(os, table);
  if (!os) fail(ErrorKind::data, "error writing " + path);
}

inline QuantileTable load_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "cannot read " + path);
  try {
    return read_table_csv(is);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  os.write(bytes.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 8)) fail(ErrorKind::data, "truncated sample store");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline constexpr char kStoreMagic[9] = "POSIRSS1";

/// Binary layout: magic "POSIRSS1", little-endian u64 d, m, R, the m deltas
/// as f64, then R * m f64 samples row-major.
inline void write_store(std::ostream& os, const SampleStore& store) {
  os.write(kStoreMagic, 8);
  detail::put_u64(os, store.dim());
  detail::put_u64(os, store.grid().size());
  detail::put_u64(os, store.replicates());
  for (double d : store.grid().values()) detail::put_f64(os, d);
  for (double s : store.samples()) detail::put_f64(os, s);
}

/// Reads the binary part. Metadata other than d and R comes from the sidecar.
inline SampleStore read_store(std::istream& is, GenerationMeta meta) {
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != kStoreMagic) fail(ErrorKind::data, "not a POSIR sample store");
  const auto d = detail::get_u64(is);
  const auto m = detail::get_u64(is);
  const auto R = detail::get_u64(is);
  if (d == 0 || m == 0 || m > (1U << 20) || R > (std::uint64_t{1} << 40)) fail(ErrorKind::data, "corrupt store header");
  std::vector<double> deltas(m);
  for (auto& x : deltas) x = detail::get_f64(is);
  std::vector<double> samples(m * R);
  for (auto& x : samples) x = detail::get_f64(is);
  if (meta.n.size() != d) meta.n.assign(d, 0);
  meta.replicates = R;
  return SampleStore(std::move(meta), DeltaGrid(std::move(deltas)), std::move(samples));
}

inline std::string sidecar_path(const std::string& store_path) { return store_path + ".meta"; }

/// Writes the store and its text metadata sidecar (path + ".meta").
inline void save_store(const std::string& path, const SampleStore& store) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::data, "cannot write " + path);
    write_store(os, store);
    if (!os) fail(ErrorKind::data, "error writing " + path);
  }
  std::ofstream meta(sidecar_path(path), std::ios::binary);
  if (!meta) fail(ErrorKind::data, "cannot write " + sidecar_path(path));
  meta << "# posir sample store metadata\n";
  write_meta_lines(meta, store.meta(), "");
}

inline SampleStore load_store(const std::string& path) {
  GenerationMeta meta;
  if (std::ifstream side(sidecar_path(path), std::ios::binary); side) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(side, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    meta = detail::meta_from_pairs(kv);
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "cannot read " + path);
  return read_store(is, std::move(meta));
}

}  // namespace posir
