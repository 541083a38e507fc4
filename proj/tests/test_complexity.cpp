#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "vforecast/complexity.hpp"

using namespace vforecast;

TEST_CASE("monotone series has zero WPE") {
  CHECK(wpe(series_of(std::vector<double>{1, 2, 3, 4, 5})) == 0.0);
  CHECK(wpe(series_of(std::vector<double>{5, 4, 3, 2, 1})) == 0.0);
}

TEST_CASE("[1,3,2,4] gives ln 2 / ln 6") {
  const double expected = std::log(2.0) / std::log(6.0);
  CHECK(std::abs(wpe(series_of(std::vector<double>{1, 3, 2, 4})) - expected) <= 1e-12);
  CHECK(std::abs(oracle::wpe({1, 3, 2, 4}) - expected) <= 1e-12);
}

TEST_CASE("ordinal patterns agree with permutation enumeration") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    // Small integer alphabet forces ties.
    const double a = rng.below(4), b = rng.below(4), c = rng.below(4);
    CHECK(ordinal_pattern(a, b, c) == oracle::pattern_by_enumeration(a, b, c));
  }
}

TEST_CASE("WPE agrees with the brute-force oracle on short random series") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const int n = 4 + static_cast<int>(rng.below(20));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    CHECK(std::abs(wpe(series_of(v)) - oracle::wpe(v)) <= 1e-12);
  }
}

TEST_CASE("WPE is bounded in [0, 1]") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(50);
    for (auto& x : v) x = rng.uniform();
    const double h = wpe(series_of(v));
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
  }
}

TEST_CASE("Harmonic series are simpler than OU series") {
  Rng rng(4);
  double harmonic = 0.0, ou = 0.0;
  for (int i = 0; i < 500; ++i) {
    harmonic += wpe(generate_one({GeneratorKind::kHarmonic, 200, 0.0}, rng));
    ou += wpe(generate_one({GeneratorKind::kOU, 200, 0.0}, rng));
  }
  CHECK(harmonic / 500 < ou / 500);
}

TEST_CASE("histogram") {
  const auto h = histogram({0.0, 0.05, 0.5, 0.99, 1.0}, 20, 0.0, 1.0);
  REQUIRE(h.counts.size() == 20);
  REQUIRE(h.edges.size() == 21);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[10] == 1);
  CHECK(h.counts[19] == 2);  // the upper edge is inclusive
}
