#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "posir/quantile_engine.hpp"

using namespace posir;
using Catch::Approx;

namespace {

SampleStore constant_store(double c, std::size_t R, const DeltaGrid& grid) {
  GenerationMeta meta;
  meta.n = {10};
  return SampleStore(meta, grid, std::vector<double>(R * grid.size(), c));
}

QuantileTable small_table() {
  SimulationConfig cfg;
  cfg.n = {200};
  cfg.grid = DeltaGrid({0.1, 0.2, 0.5, 0.6, 1.0});
  cfg.replicates = 400;
  cfg.seed = 3;
  return quantiles_from_samples(simulate_samples(cfg), {0.01, 0.05, 0.1, 0.5});
}

}  // namespace

TEST_CASE("constant store gives constant quantiles", "[quantile]") {
  const auto table = quantiles_from_samples(constant_store(2.5, 37, DeltaGrid({0.2, 1.0})), {0.05, 0.5});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(table.at(i, j) == 2.5);
  GenerationMeta meta;
  meta.n = {10};
  CHECK_THROWS(quantiles_from_samples(SampleStore(meta, DeltaGrid({1.0}), {}), {0.05}));
}

TEST_CASE("order statistic convention", "[quantile]") {
  CHECK(quantile_rank(0.05, 100) == 95);
  CHECK(quantile_rank(0.05, 101) == 96);
  CHECK(quantile_rank(0.5, 1) == 1);
  CHECK(quantile_rank(0.999, 10) == 1);
  GenerationMeta meta;
  meta.n = {5};
  std::vector<double> samples;
  for (int r = 1; r <= 20; ++r) samples.push_back(r);
  const auto table = quantiles_from_samples(SampleStore(meta, DeltaGrid({1.0}), samples), {0.05, 0.5});
  CHECK(table.at(0, 0) == 19.0);
  CHECK(table.at(1, 0) == 10.0);
  CHECK(undersampled(500, {0.001, 0.5}));
  CHECK_FALSE(undersampled(1000, {0.001, 0.5}));
}

TEST_CASE("generated tables are monotone and positive", "[quantile]") {
  const auto table = small_table();
  for (std::size_t i = 0; i < table.alphas().size(); ++i)
    for (std::size_t j = 0; j < table.deltas().size(); ++j) {
      CHECK(table.at(i, j) > 0.0);
      if (j > 0) CHECK(table.at(i, j) <= table.at(i, j - 1));
      if (i > 0) CHECK(table.at(i, j) <= table.at(i - 1, j));
    }
}

TEST_CASE("store rows are non-increasing in delta", "[quantile]") {
  SimulationConfig cfg;
  cfg.n = {12, 9};
  cfg.grid = DeltaGrid({0.2, 0.5, 1.0});
  cfg.replicates = 30;
  const auto store = simulate_samples(cfg);
  for (std::size_t r = 0; r < store.replicates(); ++r)
    for (std::size_t j = 1; j < 3; ++j) CHECK(store.at(r, j) <= store.at(r, j - 1));
}

TEST_CASE("simulation is reproducible and independent of workers", "[quantile]") {
  SimulationConfig cfg;
  cfg.n = {300};
  cfg.grid = DeltaGrid({0.05, 0.5, 1.0});
  cfg.replicates = 1;
  cfg.seed = 11;
  const auto one = simulate_samples(cfg);
  REQUIRE(one.replicates() == 1);
  const auto again = simulate_samples(cfg);
  CHECK(std::ranges::equal(one.samples(), again.samples()));

  cfg.replicates = 97;
  cfg.workers = 1;
  const auto serial = simulate_samples(cfg);
  cfg.workers = 4;
  const auto parallel = simulate_samples(cfg);
  CHECK(std::ranges::equal(serial.samples(), parallel.samples()));

  cfg.n = {15, 15};
  cfg.workers = 1;
  const auto s2 = simulate_samples(cfg);
  cfg.workers = 3;
  CHECK(std::ranges::equal(s2.samples(), simulate_samples(cfg).samples()));

  cfg.n = {4, 4, 4};
  cfg.replicates = 5;
  CHECK(simulate_samples(cfg).replicates() == 5);
}

TEST_CASE("first replicate sample at delta = 1 is the normalized total", "[quantile]") {
  SimulationConfig cfg;
  cfg.n = {64};
  cfg.grid = DeltaGrid({0.5, 1.0});
  cfg.replicates = 3;
  cfg.seed = 9;
  const auto store = simulate_samples(cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto eps = sample(NoiseSpec::gaussian(), {9, r}, 64);
    double total = 0.0;
    for (double v : eps.values()) total += v;
    CHECK(store.at(r, 1) == Approx(std::fabs(total) / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("lookup snaps conservatively", "[quantile]") {
  const auto table = small_table();
  CHECK(lookup(table, 0.05, 1.0) == table.at(1, 4));
  CHECK(lookup(table, 0.05, 0.55) == table.at(1, 2));
  CHECK(lookup(table, 0.04, 0.5) == table.at(0, 2));
  CHECK(lookup(table, 0.5, 0.3) == table.at(3, 1));
  CHECK(lookup(table, 0.05, 0.1 * 3.0 / 3.0) == table.at(1, 0));
  CHECK_THROWS_WITH(lookup(table, 0.05, 0.05), "delta not covered by table");
  CHECK_THROWS_WITH(lookup(table, 0.005, 0.5), "alpha not covered by table");
  CHECK_THROWS_WITH(lookup(table, 0.6, 0.5), "alpha not covered by table");
  CHECK_THROWS(lookup(table, 1.5, 0.5));
}

TEST_CASE("tail probabilities", "[quantile]") {
  GenerationMeta meta;
  meta.n = {5};
  std::vector<double> samples;
  for (int r = 1; r <= 99; ++r) samples.push_back(0.1 * r);
  const SampleStore store(meta, DeltaGrid({1.0}), samples);
  CHECK(tail_prob(store, 1.0, -1.0) == Approx(1.0));
  CHECK(tail_prob(store, 1.0, INFINITY) == Approx(1.0 / 100.0));
  const auto table = quantiles_from_samples(store, {0.05});
  CHECK(tail_prob(store, 1.0, table.at(0, 0)) == Approx(0.05).margin(0.01));
  CHECK_THROWS_WITH(tail_prob(store, 0.5, 1.0), "delta not covered by table");
}

TEST_CASE("delta = 1 column follows |N(0,1)|", "[quantile]") {
  SimulationConfig cfg;
  cfg.n = {100};
  cfg.grid = DeltaGrid({1.0});
  cfg.replicates = 20000;
  cfg.seed = 4;
  cfg.workers = 0;
  const auto table = quantiles_from_samples(simulate_samples(cfg), {0.05, 0.5});
  CHECK(table.at(0, 0) == Approx(1.95996).margin(0.06));
  CHECK(table.at(1, 0) == Approx(0.67449).margin(0.03));
}

TEST_CASE("finer discretization raises small-delta quantiles", "[quantile]") {
  const DeltaGrid grid({0.1, 1.0});
  std::vector<double> q;
  for (std::size_t n : {100, 1000, 5000}) {
    SimulationConfig cfg;
    cfg.n = {n};
    cfg.grid = grid;
    cfg.replicates = 4000;
    cfg.seed = 12;
    cfg.workers = 0;
    q.push_back(quantiles_from_samples(simulate_samples(cfg), {0.5}).at(0, 0));
  }
  // Median MC error at R = 4000 is about 0.02; allow that much slack.
  CHECK(q[1] >= q[0] - 0.04);
  CHECK(q[2] >= q[1] - 0.04);
  CHECK(q[2] > q[0]);
}

TEST_CASE("table CSV round trip", "[quantile][io]") {
  auto table = small_table();
  table.meta().created = "2026-01-01T00:00:00Z";
  std::stringstream ss;
  write_table_csv(ss, table);
  const auto text = ss.str();
  CHECK(text.find("alpha\\delta,0.1,0.2,0.5,0.6,1\n") != std::string::npos);
  CHECK(text.find("# format-version=1\n") != std::string::npos);
  const auto back = read_table_csv(ss);
  CHECK(back == table);

  const auto path = std::filesystem::temp_directory_path() / "posir_test_table.csv";
  save_table(path.string(), table);
  CHECK(load_table(path.string()) == table);
  std::filesystem::remove(path);
}

TEST_CASE("table CSV rejects bad input", "[quantile][io]") {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return read_table_csv(is);
  };
  CHECK_THROWS_WITH(parse("# format-version=2\n# d=1\nalpha\\delta,1\n0.05,1.9\n"), "unsupported format-version 2");
  CHECK_THROWS_WITH(parse("# d=1\nalpha\\delta,1\n0.05,1.9\n"), "missing format-version");
  CHECK_THROWS_WITH(parse("# format-version=1\n# d=1\nalpha\\delta,1\n0.05,x\n"), "line 4: bad number 'x'");
  CHECK_THROWS_WITH(parse("# format-version=1\n# d=1\nalpha\\delta,0.5,1\n0.05,1.9\n"), "line 4: expected 3 fields");
  try {
    parse("# format-version=1\n# d=1\nalpha\\delta,1\n0.05,x\n");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("sample store round trip", "[quantile][io]") {
  SimulationConfig cfg;
  cfg.n = {50};
  cfg.grid = DeltaGrid({0.1, 1.0});
  cfg.replicates = 17;
  cfg.seed = 5;
  const auto store = simulate_samples(cfg);

  std::stringstream ss;
  write_store(ss, store);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "POSIRSS1");
  CHECK(bytes.size() == 8 + 3 * 8 + 2 * 8 + 17 * 2 * 8);
  CHECK(bytes[8] == 1);
  CHECK(bytes[16] == 2);
  CHECK(bytes[24] == 17);

  const auto path = (std::filesystem::temp_directory_path() / "posir_test_store.bin").string();
  save_store(path, store);
  const auto back = load_store(path);
  CHECK(back.meta() == store.meta());
  CHECK(std::ranges::equal(back.samples(), store.samples()));
  CHECK(std::ranges::equal(back.grid().values(), store.grid().values()));
  std::filesystem::remove(path);
  std::filesystem::remove(sidecar_path(path));

  std::istringstream junk("NOTASTORE.......");
  CHECK_THROWS(read_store(junk, {}));
}
