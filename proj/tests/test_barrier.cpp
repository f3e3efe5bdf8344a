#include "pcbf/barrier.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace pcbf;

TEST_SUITE("barrier") {

TEST_CASE("safety value is squared distance minus squared radius") {
  const SafetyConfig cfg{5.0, 1};
  // [DERIVED] 3-4-5 triangle sits exactly on the boundary; (6, 8) gives 100 - 25.
  CHECK(safety_value(Vec2(3, 4), Vec2(0, 0), cfg) == doctest::Approx(0.0));
  CHECK(safety_value(Vec2(6, 8), Vec2(0, 0), cfg) == doctest::Approx(75.0));
  CHECK(safety_value(Vec2(1, 1), Vec2(1, 1), cfg) == doctest::Approx(-25.0));
  CHECK(safety_value(Vec2(0, 0), Vec2(6, 8), cfg) == safety_value(Vec2(6, 8), Vec2(0, 0), cfg));
}

TEST_CASE("safety value rejects non-finite positions") {
  const SafetyConfig cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(safety_value(Vec2(nan, 0), Vec2(0, 0), cfg), std::domain_error);
  CHECK_THROWS_AS(safety_value(Vec2(0, 0), Vec2(0, INFINITY), cfg), std::domain_error);
}

TEST_CASE("basis holds odd powers") {
  // [DERIVED] h = 2: [2, 8, 32]; h = -1: [-1, -1].
  const BarrierBasis b = basis(2.0, 3);
  REQUIRE(b.size() == 3);
  CHECK(b.values[0] == 2.0);
  CHECK(b.values[1] == 8.0);
  CHECK(b.values[2] == 32.0);
  const BarrierBasis n = basis(-1.0, 2);
  CHECK(n.values[0] == -1.0);
  CHECK(n.values[1] == -1.0);
  CHECK_THROWS_AS(basis(1.0, 0), ConfigError);
}

TEST_CASE("kappa evaluates the weighted polynomial") {
  // [DERIVED] 1*2 + 0.5*8 = 6; 0.2*(-3) + 0.1*(-27) = -3.3.
  CHECK(kappa(AlphaVector{1.0, 0.5}, 2.0) == doctest::Approx(6.0));
  CHECK(kappa(AlphaVector{0.2, 0.1}, -3.0) == doctest::Approx(-3.3));
  CHECK(kappa(AlphaVector{0.7}, 0.0) == 0.0);
  CHECK_THROWS_AS(kappa(AlphaVector{1.0, 1.0}, basis(1.0, 3)), ConfigError);
}

TEST_CASE("alpha vector validates and pads") {
  CHECK_THROWS_AS(AlphaVector({1.0, -0.1}), ConfigError);
  CHECK_THROWS_AS(AlphaVector(std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(AlphaVector({std::numeric_limits<double>::quiet_NaN()}), ConfigError);
  const AlphaVector a{0.3};
  const AlphaVector p = a.padded(3);
  CHECK(p.size() == 3);
  CHECK(p[0] == 0.3);
  CHECK(p[2] == 0.0);
  CHECK_THROWS_AS(p.padded(2), ConfigError);
  CHECK(to_string(AlphaVector{1.0, 0.5}) == "1 0.5");
}

TEST_CASE("discrete barrier rate") {
  // [DERIVED] dx = (1, 0), dv = (1, 0), du = (2, 0), dt = 0.1: 2*1 + 2*2*0.1 = 2.4.
  CHECK(hdot(Vec2(1, 0), Vec2(0, 0), Vec2(1, 0), Vec2(0, 0), Vec2(2, 0), Vec2(0, 0), 0.1) ==
        doctest::Approx(2.4));
  // Perpendicular relative motion leaves h unchanged to first order.
  CHECK(hdot(Vec2(1, 0), Vec2(0, 0), Vec2(0, 3), Vec2(0, 0), Vec2(0, 1), Vec2(0, 0), 0.1) == 0.0);
}

TEST_CASE("safety config validation") {
  CHECK_NOTHROW(SafetyConfig{}.validate());
  CHECK_THROWS_AS((SafetyConfig{0.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SafetyConfig{5.0, 0}.validate()), ConfigError);
}

TEST_CASE("class-K: zero at the origin and increasing, for random weights") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const AlphaVector a{w(rng) + 1e-3, w(rng), w(rng)};
    CHECK(kappa(a, 0.0) == 0.0);
    double prev = kappa(a, -10.0);
    for (double h = -9.9; h <= 10.0; h += 0.1) {
      const double k = kappa(a, h);
      REQUIRE(k > prev);
      prev = k;
    }
  }
}

}  // TEST_SUITE
