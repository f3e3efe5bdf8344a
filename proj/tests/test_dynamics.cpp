#include "pcbf/dynamics.hpp"

#include <doctest.h>

using namespace pcbf;

TEST_SUITE("dynamics") {

TEST_CASE("semi-implicit Euler updates velocity first") {
  // [DERIVED] v' = (1,0) + (2,0)*0.5 = (2,0); x' = 0 + v'*0.5 = (1,0).
  const VehicleState s{Vec2(0, 0), Vec2(1, 0)};
  const VehicleState n = step(s, {Vec2(2, 0)}, 0.5);
  CHECK(n.velocity.x() == doctest::Approx(2.0));
  CHECK(n.position.x() == doctest::Approx(1.0));
  CHECK(n.position.y() == 0.0);
}

TEST_CASE("zero input keeps constant velocity") {
  VehicleState s{Vec2(3, -1), Vec2(10, 2)};
  for (int k = 0; k < 100; ++k) s = step(s, {}, 0.01);
  CHECK(s.velocity == Vec2(10, 2));
  CHECK(s.position.x() == doctest::Approx(13.0));
  CHECK(s.position.y() == doctest::Approx(1.0));
}

TEST_CASE("finite-difference rate of h carries the dt |dv'|^2 term") {
  // h' - h = 2 dx.dv' dt + |dv'|^2 dt^2 exactly under this integrator.
  const SafetyConfig cfg;
  const VehicleState a{Vec2(0, 0), Vec2(10, 0)};
  const VehicleState b{Vec2(8, 1), Vec2(9, 0.5)};
  const double dt = 0.01;
  const ControlInput ua{Vec2(-1, 0.5)}, ub{Vec2(0.3, 0)};
  const VehicleState a1 = step(a, ua, dt), b1 = step(b, ub, dt);
  const Vec2 dx = a.position - b.position;
  const Vec2 dv1 = a1.velocity - b1.velocity;
  const double lhs = (safety_value(a1.position, b1.position, cfg) -
                      safety_value(a.position, b.position, cfg)) / dt;
  CHECK(lhs == doctest::Approx(2.0 * dx.dot(dv1) + dt * dv1.squaredNorm()).epsilon(1e-12));
}

}  // TEST_SUITE
