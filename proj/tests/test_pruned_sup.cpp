#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/ndstat.hpp"
#include "posir/pruned_sup.hpp"

using namespace posir;

namespace {

DeltaGrid random_grid(std::mt19937_64& gen) {
  std::vector<double> d;
  for (int k = 0; k < 1 + int(gen() % 6); ++k) d.push_back(double(1 + gen() % 1000) / 1000.0);
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return DeltaGrid(d);
}

}  // namespace

TEST_CASE("1-d pruned evaluator is bit-identical to the reference", "[pruned]") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> heavy(2.5);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + gen() % 700;
    const DeltaGrid grid = random_grid(gen);
    std::vector<double> y(n);
    for (double& v : y) v = rep % 2 ? normal(gen) : heavy(gen);
    if (rep % 7 == 0)
      for (std::size_t i = 0; i < n; ++i) y[i] += 0.01 * double(i);
    PrunedGridSup1D fast(n, grid);
    const Series s(y);
    REQUIRE(fast(s, 1.7) == posir_sup_grid_1d(s, grid, 1.7));
    // Reuse of the same evaluator.
    for (double& v : y) v = normal(gen);
    REQUIRE(fast(Series(y), 1.0) == posir_sup_grid_1d(Series(y), grid, 1.0));
  }
}

TEST_CASE("1-d pruned evaluator on degenerate input", "[pruned]") {
  const DeltaGrid grid({0.1, 0.5, 1.0});
  PrunedGridSup1D fast(50, grid);
  const Series zeros(std::vector<double>(50, 0.0));
  CHECK(fast(zeros, 1.0) == posir_sup_grid_1d(zeros, grid, 1.0));
  const Series constant(std::vector<double>(50, 2.0));
  CHECK(fast(constant, 1.0) == posir_sup_grid_1d(constant, grid, 1.0));
  CHECK_THROWS(fast(Series(std::vector<double>(49, 0.0)), 1.0));
}

TEST_CASE("2-d pruned evaluator is bit-identical to the reference", "[pruned]") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 60; ++rep) {
    const Shape shape{1 + gen() % 24, 1 + gen() % 24};
    const DeltaGrid grid = random_grid(gen);
    std::vector<double> v(shape_volume(shape));
    for (double& x : v) x = normal(gen);
    PrunedGridSup2D fast(shape, grid);
    const Tensor t(shape, v);
    REQUIRE(fast(t, 0.9) == posir_sup_grid_nd(t, grid, 0.9));
  }
}

TEST_CASE("2-d pruned evaluator at the table shape", "[pruned]") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  const Shape shape{40, 40};
  const DeltaGrid grid({0.05, 0.1, 0.3, 0.5, 1.0});
  PrunedGridSup2D fast(shape, grid);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> v(1600);
    for (double& x : v) x = normal(gen);
    const Tensor t(shape, v);
    REQUIRE(fast(t, 1.0) == posir_sup_grid_nd(t, grid, 1.0));
  }
}
