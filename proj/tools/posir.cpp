// posir: command-line front end.
//
//   posir quantiles  simulate a quantile table (and optionally the raw samples)
//   posir ci         simultaneous intervals for regions of a data file
//   posir pvalue     goodness-of-fit test of a constant mean
//   posir coverage   effective error levels under a noise family
//   posir segment    least-squares segmentation plus segment intervals
//   posir ratios     diameter ratio against Bonferroni data splitting
//   posir generate   synthetic piecewise-constant data
//
// Exit codes: 0 success, 2 usage error, 3 data/parse error, 4 numeric
// precondition violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "posir/posir.hpp"

using namespace posir;
using Json = nlohmann::ordered_json;

#ifndef POSIR_DATA_DIR
#define POSIR_DATA_DIR "data"
#endif

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// ---------------------------------------------------------------------------
// Small parsing helpers

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& field : detail::split_csv(text)) {
    const auto v = parse_number(field);
    if (!v) fail(ErrorKind::usage, "bad value '" + field + "' in " + what);
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  for (double v : parse_list(text, what)) {
    if (!(v >= 0 && v == std::floor(v))) fail(ErrorKind::usage, "bad index " + format_number(v) + " in " + what);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

Shape parse_n(const std::string& text, std::size_t d) {
  Shape n;
  try {
    n = parse_shape(text);
  } catch (const Error&) {
    fail(ErrorKind::usage, "bad --n '" + text + "'");
  }
  if (n.size() == 1 && d > 1) n.assign(d, n[0]);
  if (n.size() != d) fail(ErrorKind::usage, "--n has " + std::to_string(n.size()) + " entries, --d is " + std::to_string(d));
  return n;
}

// Strips a trailing "# ..." comment and blanks.
std::string content_of(std::string line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  return trim(line);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& what) {
  fail(ErrorKind::data, path + ":" + std::to_string(line) + ": " + what);
}

double field_number(const std::string& path, std::size_t line, const std::string& field) {
  const auto v = parse_number(field);
  if (!v) fail_at(path, line, "bad number '" + trim(field) + "'");
  if (!std::isfinite(*v)) fail_at(path, line, "non-finite data");
  return *v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::data, "cannot read " + path);
  return is;
}

/// One value per line (1-d), or a "rows,cols" header followed by row-major
/// values separated by commas and/or newlines (2-d).
Tensor read_data(const std::string& path) {
  auto is = open_input(path);
  std::vector<double> values;
  std::optional<Shape> shape;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string body = content_of(line);
    if (body.empty()) continue;
    const auto fields = detail::split_csv(body);
    if (first) {
      first = false;
      if (fields.size() == 2) {
        const double rows = field_number(path, line_no, fields[0]);
        const double cols = field_number(path, line_no, fields[1]);
        if (rows < 1 || cols < 1 || rows != std::floor(rows) || cols != std::floor(cols))
          fail_at(path, line_no, "header must be 'rows,cols' with positive integers");
        shape = Shape{static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
        continue;
      }
    }
    if (!shape && fields.size() != 1) fail_at(path, line_no, "expected one value per line");
    for (const auto& f : fields) values.push_back(field_number(path, line_no, f));
  }
  if (!shape) {
    if (values.empty()) fail(ErrorKind::data, path + ": no data values");
    shape = Shape{values.size()};
  }
  if (values.size() != shape_volume(*shape))
    fail(ErrorKind::data, path + ": expected " + std::to_string(shape_volume(*shape)) + " values, found " +
                              std::to_string(values.size()));
  return Tensor(*shape, std::move(values));
}

/// Regions as "a,b" (1-d) or "a1,b1,a2,b2" (2-d) per line; a non-numeric
/// first line is taken as a header.
std::vector<Rect> read_regions(const std::string& path, const Shape& shape) {
  auto is = open_input(path);
  const std::size_t d = shape.size();
  std::vector<Rect> out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string body = content_of(line);
    if (body.empty()) continue;
    const auto fields = detail::split_csv(body);
    if (first && !parse_number(fields[0])) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 2 * d) fail_at(path, line_no, "expected " + std::to_string(2 * d) + " fields (a,b per axis)");
    Rect r;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = field_number(path, line_no, fields[2 * j]);
      const double b = field_number(path, line_no, fields[2 * j + 1]);
      if (a < 0 || a != std::floor(a) || b != std::floor(b)) fail_at(path, line_no, "bounds must be integers >= 0");
      r.a.push_back(static_cast<std::size_t>(a));
      r.b.push_back(static_cast<std::size_t>(b));
    }
    try {
      check_rect(r, shape);
    } catch (const Error& e) {
      fail_at(path, line_no, e.what());
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) fail(ErrorKind::data, path + ": no regions");
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

/// Writes to a file, or to stdout when path is "-".
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::data, "cannot write " + path);
  os << text;
  if (!os) fail(ErrorKind::data, "error writing " + path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// "# key=value" lines for CSV outputs.
std::string comment_block(const Json& config) {
  std::string out;
  for (const auto& [key, value] : config.items())
    out += "# " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
  return out;
}

Json rect_json(const Rect& r) { return Json{{"a", r.a}, {"b", r.b}}; }

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Shared options

struct SeedOption {
  std::uint64_t value = 0;
  CLI::Option* opt = nullptr;

  void add(CLI::App* app) { opt = app->add_option("--seed", value, "Base seed of the random streams (default 0)"); }

  std::uint64_t get() const {
    if (opt->count() == 0) std::cerr << "note: no --seed given, using seed 0\n";
    return value;
  }
};

struct TableOption {
  std::string path;

  void add(CLI::App* app) {
    app->add_option("--table", path, "Quantile table CSV (default: the shipped table for the data dimension)");
  }

  QuantileTable load(std::size_t d) const {
    std::string p = path;
    if (p.empty()) {
      p = std::string(POSIR_DATA_DIR) + "/quantiles_" + std::to_string(d) + "d.csv";
      if (!std::filesystem::exists(p))
        fail(ErrorKind::usage, "no quantile table given and " + p + " does not exist; pass --table");
    }
    auto table = load_table(p);
    check_table_dim(table, d);
    return table;
  }

  std::string label(std::size_t d) const {
    return path.empty() ? "quantiles_" + std::to_string(d) + "d.csv (shipped)" : path;
  }
};

struct SigmaOption {
  double known = 0.0;
  CLI::Option* opt = nullptr;

  void add(CLI::App* app) {
    opt = app->add_option("--sigma", known, "Known noise standard deviation (default: global empirical estimate)");
  }

  SigmaEstimator get() const {
    return opt->count() ? SigmaEstimator::known(known) : SigmaEstimator::global_empirical();
  }

  Json label() const { return opt->count() ? Json(known) : Json("global_empirical"); }
};

// ---------------------------------------------------------------------------
// quantiles

struct QuantilesCmd {
  std::size_t d = 1;
  std::string n;
  std::size_t replicates = 0;
  SeedOption seed;
  std::string deltas;
  std::string alphas;
  std::string output = "-";
  std::string keep_samples;
  unsigned workers = 0;
  bool deterministic = false;
  bool paper_scale = false;
  bool ratio_grid = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("quantiles", "Simulate a quantile table");
    sub->add_option("--d", d, "Dimension")->check(CLI::Range(1, 4));
    sub->add_option("--n", n, "Points per axis, e.g. 5000 or 100x100");
    sub->add_option("--replicates", replicates, "Monte-Carlo replicates")->check(CLI::PositiveNumber);
    seed.add(sub);
    sub->add_option("--deltas", deltas, "Comma-separated delta grid");
    sub->add_option("--alphas", alphas, "Comma-separated alpha grid");
    sub->add_flag("--ratio-grid", ratio_grid, "Add the deltas c/L used by 'posir ratios' to the grid");
    sub->add_option("-o,--output", output, "Output CSV ('-' for stdout)");
    sub->add_option("--keep-samples", keep_samples, "Also write the raw sample store to this path");
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
    sub->add_flag("--deterministic", deterministic, "Omit the creation timestamp");
    sub->add_flag("--paper-scale", paper_scale, "Paper-scale defaults (n = 50000 or 400 per axis, 10^6 replicates)");
    sub->callback([this] { run(); });
  }

  void run() {
    SimulationConfig cfg;
    std::size_t default_n = 20, default_r = 10000;
    if (d == 1) default_n = paper_scale ? 50000 : 5000, default_r = paper_scale ? 1000000 : 100000;
    if (d == 2) default_n = paper_scale ? 400 : 100, default_r = paper_scale ? 1000000 : 20000;
    if (d >= 3) std::cerr << "note: d >= 3 is experimental; cost grows as the product of n_j^2\n";
    cfg.n = n.empty() ? Shape(d, default_n) : parse_n(n, d);
    cfg.replicates = replicates ? replicates : default_r;
    cfg.seed = seed.get();
    cfg.workers = workers;
    std::vector<double> grid = deltas.empty() ? std::vector<double>(default_delta_grid().values().begin(),
                                                                    default_delta_grid().values().end())
                                              : parse_list(deltas, "--deltas");
    if (ratio_grid) {
      const auto extra = ratio_deltas();
      grid.insert(grid.end(), extra.begin(), extra.end());
    }
    cfg.grid = DeltaGrid::from_unsorted(grid);
    const auto alpha_grid = alphas.empty() ? default_alpha_grid() : parse_list(alphas, "--alphas");
    QuantileTable::check_alpha_grid(alpha_grid);
    if (undersampled(cfg.replicates, alpha_grid))
      std::cerr << "warning: " << cfg.replicates << " replicates are too few for alpha = "
                << format_number(alpha_grid.front()) << "\n";

    const auto start = std::chrono::steady_clock::now();
    auto store = simulate_samples(cfg);
    auto table = quantiles_from_samples(store, alpha_grid);
    if (!deterministic) table.meta().created = utc_timestamp();
    std::ostringstream os;
    write_table_csv(os, table);
    emit(output, os.str());
    if (!keep_samples.empty()) save_store(keep_samples, store);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "simulated " << cfg.replicates << " replicates at n=" << format_shape(cfg.n) << " in "
              << format_number(std::round(secs * 10) / 10) << " s\n";
  }

  static std::vector<double> ratio_deltas() {
    std::vector<double> out;
    for (double c : {0.25, 0.5, 0.75, 1.0})
      for (int L = 1; L <= 20; ++L) out.push_back(c / L);
    return out;
  }
};

// ---------------------------------------------------------------------------
// ci

struct CiCmd {
  std::string data;
  std::string regions;
  std::size_t dp_k = 0;
  CLI::Option* dp_opt = nullptr;
  double alpha = 0.05;
  double delta = 0.0;
  TableOption table;
  SigmaOption sigma;
  std::string output = "-";
  std::string csv;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("ci", "Simultaneous confidence intervals for regions");
    sub->add_option("--data", data, "Data CSV")->required();
    auto* reg = sub->add_option("--regions", regions, "Regions CSV: a,b per axis on each line");
    dp_opt = sub->add_option("--segments-from-dp", dp_k, "Use the K-breakpoint least-squares segmentation (1-d)");
    reg->excludes(dp_opt);
    sub->add_option("--alpha", alpha, "Simultaneous error level");
    sub->add_option("--delta", delta, "Minimum relative region length")->required();
    table.add(sub);
    sigma.add(sub);
    sub->add_option("-o,--output", output, "JSON output ('-' for stdout)");
    sub->add_option("--csv", csv, "Also write the intervals as CSV");
    sub->callback([this] { run(); });
  }

  void run() {
    if (regions.empty() && dp_opt->count() == 0) fail(ErrorKind::usage, "give --regions or --segments-from-dp");
    const Tensor t = read_data(data);
    const std::size_t d = t.dim();
    const auto tab = table.load(d);
    const double K = lookup(tab, alpha, delta);
    const double s = sigma_hat(t, sigma.get());
    if (!(s > 0.0)) fail(ErrorKind::numeric, "sigma estimate must be > 0");

    std::vector<Rect> rects;
    if (dp_opt->count()) {
      if (d != 1) fail(ErrorKind::usage, "--segments-from-dp needs 1-d data");
      const Series series(std::vector<double>(t.values().begin(), t.values().end()));
      const auto seg = dp_segment(series, dp_k);
      const auto bounds = segment_bounds(series.size(), seg.breakpoints);
      for (std::size_t i = 0; i + 1 < bounds.size(); ++i) rects.push_back(Rect{{bounds[i]}, {bounds[i + 1]}});
    } else {
      rects = read_regions(regions, t.shape());
    }

    const CumSumTensor cs(t);
    std::vector<std::optional<RegionCI>> cis;
    std::vector<RegionCI> eligible;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      bool ok = true;
      for (std::size_t j = 0; j < d; ++j) ok = ok && rects[i].side(j) >= min_window_length(delta, t.shape()[j]);
      if (!ok) {
        std::cerr << "warning: region " << i << " is shorter than delta*n: no CI computed\n";
        cis.emplace_back();
        continue;
      }
      cis.emplace_back(region_ci_from(cs, rects[i], alpha, delta, K, s));
      eligible.push_back(*cis.back());
      index.push_back(i);
    }
    const auto flags = overlap_flags(eligible);

    Json config{{"command", "ci"},       {"data", data},
                {"regions", dp_opt->count() ? "dp:K=" + std::to_string(dp_k) : regions},
                {"alpha", alpha},        {"delta", delta},
                {"table", table.label(d)}, {"sigma", sigma.label()}};
    Json out{{"config", config}, {"sigma_hat", s}, {"quantile", K}, {"regions", Json::array()}};
    for (std::size_t i = 0; i < rects.size(); ++i) {
      Json r = rect_json(rects[i]);
      r["eligible"] = cis[i].has_value();
      if (cis[i]) {
        r["mean"] = cis[i]->mean_hat;
        r["half_width"] = cis[i]->half_width;
        r["lower"] = cis[i]->lower;
        r["upper"] = cis[i]->upper;
      }
      out["regions"].push_back(r);
    }
    out["overlap"] = Json::array();
    for (std::size_t k = 0; k < flags.size(); ++k)
      out["overlap"].push_back({{"left", index[k]}, {"right", index[k + 1]}, {"overlap", static_cast<bool>(flags[k])}});
    emit(output, out.dump(2) + "\n");

    if (!csv.empty()) {
      std::ostringstream os;
      os << comment_block(config);
      for (std::size_t j = 0; j < d; ++j) os << "a" << j + 1 << ",b" << j + 1 << ",";
      os << "eligible,mean,lower,upper\n";
      for (std::size_t i = 0; i < rects.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) os << rects[i].a[j] << ',' << rects[i].b[j] << ',';
        if (cis[i])
          os << "1," << format_number(cis[i]->mean_hat) << ',' << format_number(cis[i]->lower) << ','
             << format_number(cis[i]->upper) << '\n';
        else
          os << "0,,,\n";
      }
      emit(csv, os.str());
    }
  }
};

// ---------------------------------------------------------------------------
// pvalue

struct PvalueCmd {
  std::string data;
  double mu0 = 0.0;
  double delta = 0.0;
  std::string store_path;
  std::size_t replicates = 10000;
  std::size_t n = 0;
  SeedOption seed;
  unsigned workers = 0;
  SigmaOption sigma;
  std::string output;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("pvalue", "Test of a constant mean mu0 over all long windows");
    sub->add_option("--data", data, "1-d data CSV")->required();
    sub->add_option("--mu0", mu0, "Mean under the null hypothesis");
    sub->add_option("--delta", delta, "Minimum relative window length")->required();
    sub->add_option("--store", store_path, "Sample store from 'posir quantiles --keep-samples'");
    sub->add_option("--replicates", replicates, "Replicates when simulating the null (no --store)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--n", n, "Discretization when simulating the null (default: data length)");
    seed.add(sub);
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
    sigma.add(sub);
    sub->add_option("-o,--output", output, "Also write the result as JSON");
    sub->callback([this] { run(); });
  }

  void run() {
    const Tensor t = read_data(data);
    if (t.dim() != 1) fail(ErrorKind::usage, "pvalue needs 1-d data");
    const Series series(std::vector<double>(t.values().begin(), t.values().end()));
    SampleStore store;
    Json source;
    if (!store_path.empty()) {
      store = load_store(store_path);
      source = store_path;
    } else {
      SimulationConfig cfg;
      cfg.n = {n ? n : series.size()};
      cfg.grid = DeltaGrid({delta});
      cfg.replicates = replicates;
      cfg.seed = seed.get();
      cfg.workers = workers;
      store = simulate_samples(cfg);
      source = Json{{"n", cfg.n[0]}, {"replicates", replicates}, {"seed", cfg.seed}};
    }
    const auto res = t_delta_test(series, mu0, delta, sigma.get(), store);
    std::cout << "T_delta=" << format_number(res.statistic) << " p_value=" << format_number(res.p_value) << "\n";
    if (!output.empty()) {
      Json out{{"config",
                {{"command", "pvalue"}, {"data", data}, {"mu0", mu0}, {"delta", delta}, {"null", source},
                 {"sigma", sigma.label()}}},
               {"statistic", res.statistic},
               {"p_value", res.p_value}};
      emit(output, out.dump(2) + "\n");
    }
  }
};

// ---------------------------------------------------------------------------
// coverage

struct CoverageCmd {
  std::string noise = "gaussian:sd=1";
  std::size_t d = 1;
  std::string ns;
  std::string deltas;
  std::string alphas;
  std::size_t replicates = 100000;
  SeedOption seed;
  unsigned workers = 0;
  TableOption table;
  std::string output = "-";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("coverage", "Effective simultaneous error levels under mu = 0");
    sub->add_option("--noise", noise, "Noise spec, e.g. gaussian:sd=1, laplace:scale=1, pareto:shape=2.1,xm=1");
    sub->add_option("--d", d, "Dimension (1 or 2)")->check(CLI::Range(1, 2));
    sub->add_option("--n", ns, "Comma-separated sizes (points per axis)");
    sub->add_option("--deltas", deltas, "Comma-separated deltas (default: the table grid)");
    sub->add_option("--alphas", alphas, "Comma-separated alphas (default: the table grid)");
    sub->add_option("--replicates", replicates, "Replicates per size")->check(CLI::PositiveNumber);
    seed.add(sub);
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
    table.add(sub);
    sub->add_option("-o,--output", output, "Output CSV ('-' for stdout)");
    sub->callback([this] { run(); });
  }

  void run() {
    const auto spec = parse_noise_spec(noise);
    const auto tab = table.load(d);
    std::vector<std::size_t> sizes =
        ns.empty() ? (d == 1 ? std::vector<std::size_t>{30, 100, 300, 1000, 3000} : std::vector<std::size_t>{20, 50, 100})
                   : parse_index_list(ns, "--n");
    CoverageConfig cfg;
    cfg.grid = deltas.empty() ? tab.deltas() : DeltaGrid::from_unsorted(parse_list(deltas, "--deltas"));
    cfg.alphas = alphas.empty() ? tab.alphas() : parse_list(alphas, "--alphas");
    cfg.replicates = replicates;
    cfg.seed = seed.get();
    cfg.workers = workers;

    Json config{{"command", "coverage"}, {"noise", to_string(spec)},  {"d", d},
                {"n", join(sizes)},      {"replicates", replicates}, {"seed", cfg.seed},
                {"table", table.label(d)}};
    std::ostringstream os;
    os << comment_block(config);
    write_coverage_header(os);
    for (std::size_t size : sizes) {
      if (size == 0) fail(ErrorKind::usage, "--n entries must be >= 1");
      cfg.n = Shape(d, size);
      const auto rep = d == 1 ? effective_levels(spec, cfg, tab) : effective_levels_2d(spec, cfg, tab);
      write_coverage_rows(os, rep);
    }
    emit(output, os.str());
  }
};

// ---------------------------------------------------------------------------
// segment

struct SegmentCmd {
  std::string data;
  std::size_t K = 0;
  double alpha = 0.05;
  double delta = 0.0;
  TableOption table;
  SigmaOption sigma;
  std::string output = "-";
  std::string csv;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("segment", "Least-squares segmentation with simultaneous segment intervals");
    sub->add_option("--data", data, "1-d data CSV")->required();
    sub->add_option("--K", K, "Number of breakpoints")->required();
    sub->add_option("--alpha", alpha, "Simultaneous error level");
    sub->add_option("--delta", delta, "Minimum relative segment length")->required();
    table.add(sub);
    sigma.add(sub);
    sub->add_option("-o,--output", output, "JSON output ('-' for stdout)");
    sub->add_option("--csv", csv, "Also write plot-ready segment CSV");
    sub->callback([this] { run(); });
  }

  void run() {
    const Tensor t = read_data(data);
    if (t.dim() != 1) fail(ErrorKind::usage, "segment needs 1-d data");
    const Series series(std::vector<double>(t.values().begin(), t.values().end()));
    const auto tab = table.load(1);
    const auto seg = dp_segment(series, K);
    const auto res = segment_cis(series, seg, alpha, delta, tab, sigma.get());

    Json config{{"command", "segment"}, {"data", data},
                {"K", K},               {"alpha", alpha},
                {"delta", delta},       {"table", table.label(1)},
                {"sigma", sigma.label()}};
    Json out{{"config", config},
             {"breakpoints", seg.breakpoints},
             {"total_cost", seg.total_cost},
             {"sigma_hat", res.sigma},
             {"quantile", res.quantile},
             {"segments", Json::array()},
             {"overlap", Json::array()}};
    for (std::size_t i = 0; i < res.segments.size(); ++i) {
      const auto& s = res.segments[i];
      Json j{{"a", s.a}, {"b", s.b}, {"cost", seg.segment_costs[i]}, {"eligible", s.ci.has_value()}};
      if (s.ci) {
        j["mean"] = s.ci->mean_hat;
        j["lower"] = s.ci->lower;
        j["upper"] = s.ci->upper;
      } else {
        std::cerr << "warning: segment (" << s.a << "," << s.b << "] is shorter than delta*n: no CI computed\n";
      }
      out["segments"].push_back(j);
    }
    for (std::size_t k = 0; k < res.overlap.size(); ++k)
      out["overlap"].push_back({{"left", res.pairs[k].first},
                                {"right", res.pairs[k].second},
                                {"overlap", static_cast<bool>(res.overlap[k])}});
    emit(output, out.dump(2) + "\n");

    if (!csv.empty()) {
      std::ostringstream os;
      os << comment_block(config);
      os << "a,b,eligible,mean,lower,upper\n";
      for (const auto& s : res.segments) {
        os << s.a << ',' << s.b << ',';
        if (s.ci)
          os << "1," << format_number(s.ci->mean_hat) << ',' << format_number(s.ci->lower) << ','
             << format_number(s.ci->upper) << '\n';
        else
          os << "0,,,\n";
      }
      emit(csv, os.str());
    }
  }
};

// ---------------------------------------------------------------------------
// ratios

struct RatiosCmd {
  double alpha = 0.05;
  std::size_t max_segments = 20;
  std::string cs = "0.25,0.5,0.75,1";
  TableOption table;
  std::string output = "-";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("ratios", "Interval diameter ratio, data splitting over POSIR, at delta = c/L");
    sub->add_option("--alpha", alpha, "Error level");
    sub->add_option("--max-segments", max_segments, "Largest segment count L")->check(CLI::PositiveNumber);
    sub->add_option("--c", cs, "Comma-separated values of c in (0, 1]");
    table.add(sub);
    sub->add_option("-o,--output", output, "Output CSV ('-' for stdout)");
    sub->callback([this] { run(); });
  }

  void run() {
    const auto tab = table.load(1);
    const auto cvals = parse_list(cs, "--c");
    Json config{{"command", "ratios"}, {"alpha", alpha}, {"max_segments", max_segments}, {"c", cs},
                {"table", table.label(1)}};
    std::ostringstream os;
    os << comment_block(config);
    os << "c,L,delta,table_delta,ratio\n";
    for (double c : cvals) {
      if (!(c > 0.0 && c <= 1.0)) fail(ErrorKind::usage, "c must lie in (0, 1]");
      for (std::size_t L = 1; L <= max_segments; ++L) {
        const double delta = c / static_cast<double>(L);
        const double used = tab.deltas()[delta_column(tab.deltas(), delta)];
        os << format_number(c) << ',' << L << ',' << format_number(delta) << ',' << format_number(used) << ','
           << format_number(split_ratio(L, alpha, delta, tab)) << '\n';
      }
    }
    emit(output, os.str());
  }
};

// ---------------------------------------------------------------------------
// generate

struct GenerateCmd {
  std::size_t n = 0;
  std::string breakpoints;
  std::string levels = "0";
  std::string noise = "gaussian:sd=1";
  SeedOption seed;
  std::string output = "-";

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("generate", "Synthetic piecewise-constant data plus noise");
    sub->add_option("--n", n, "Length")->required()->check(CLI::PositiveNumber);
    sub->add_option("--breakpoints", breakpoints, "Comma-separated breakpoints in (0, n)");
    sub->add_option("--levels", levels, "Comma-separated segment levels (one more than breakpoints)");
    sub->add_option("--noise", noise, "Noise spec");
    seed.add(sub);
    sub->add_option("-o,--output", output, "Output CSV ('-' for stdout)");
    sub->callback([this] { run(); });
  }

  void run() {
    const auto spec = parse_noise_spec(noise);
    const auto bp = parse_index_list(breakpoints, "--breakpoints");
    const auto lv = parse_list(levels, "--levels");
    const PiecewiseSignal signal(n, bp, lv);
    const std::uint64_t s = seed.get();
    const auto y = generate_piecewise(signal, spec, {s, 0});
    std::ostringstream os;
    os << "# posir generate n=" << n << " seed=" << s << " noise=" << to_string(spec) << "\n";
    os << "# breakpoints=" << join(bp) << "\n";
    os << "# levels=" << join(lv) << "\n";
    for (double v : y.values()) os << format_number(v) << '\n';
    emit(output, os.str());
  }
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numeric: return kExitNumeric;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POSIR: simultaneous confidence intervals for region means after selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "posir 1.0");

  QuantilesCmd quantiles;
  CiCmd ci;
  PvalueCmd pvalue;
  CoverageCmd coverage;
  SegmentCmd segment;
  RatiosCmd ratios;
  GenerateCmd generate;
  quantiles.add(app);
  ci.add(app);
  pvalue.add(app);
  coverage.add(app);
  segment.add(app);
  ratios.add(app);
  generate.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
