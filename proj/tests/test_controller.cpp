#include "pcbf/controller.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace pcbf;

TEST_SUITE("controller") {

TEST_CASE("nominal control is a clamped proportional cruise law") {
  // [DERIVED] 0.5 * (10*(1,0) - (8,0)) = (1, 0).
  const NominalPlan plan{10.0, Vec2::UnitX(), 0.5};
  const AccelLimits box;
  const ControlInput u = nominal_control({Vec2::Zero(), Vec2(8, 0)}, plan, box);
  CHECK(u.acceleration.isApprox(Vec2(1, 0)));
  const ControlInput fast = nominal_control({Vec2::Zero(), Vec2(30, 0)}, plan, box);
  CHECK(fast.acceleration.x() == -5.0);
}

TEST_CASE("safety row coefficients") {
  // [DERIVED] ego (0,0) v (1,0); other (10,0) at rest; alpha = [1]; r = 5; dt = 0.1.
  // dx = (-10, 0), h = 75, a = -2*0.1*dx = (2, 0), b = 2*(-10)(1) + 75 = 55.
  const SafetyConfig cfg{5.0, 1};
  const LinearRow r = build_safety_constraint({Vec2(0, 0), Vec2(1, 0)}, {Vec2(10, 0), Vec2(0, 0)},
                                              {}, AlphaVector{1.0}, cfg, 0.1);
  CHECK(r.a.isApprox(Vec2(2, 0)));
  CHECK(r.b == doctest::Approx(55.0));
  // An assumed neighbour acceleration (1, 0) shifts b by -2 dx.u dt = +2.
  const LinearRow r2 = build_safety_constraint({Vec2(0, 0), Vec2(1, 0)},
                                               {Vec2(10, 0), Vec2(0, 0)}, {Vec2(1, 0)},
                                               AlphaVector{1.0}, cfg, 0.1);
  CHECK(r2.b == doctest::Approx(57.0));
}

TEST_CASE("row satisfied with equality means the discrete rate meets -kappa") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const SafetyConfig cfg{5.0, 2};
  const AlphaVector alpha{0.8, 0.01};
  for (int k = 0; k < 100; ++k) {
    const VehicleState e{Vec2(20 * u(rng), 20 * u(rng)), Vec2(10 * u(rng), 10 * u(rng))};
    const VehicleState o{Vec2(20 * u(rng), 20 * u(rng)), Vec2(10 * u(rng), 10 * u(rng))};
    const LinearRow r = build_safety_constraint(e, o, {}, alpha, cfg, 0.01);
    // Any u on the row boundary.
    const Vec2 n = r.a.normalized();
    const Vec2 t(-n.y(), n.x());
    const Vec2 ue = r.b / r.a.norm() * n + 3.0 * u(rng) * t;
    const double rate =
        hdot(e.position, o.position, e.velocity, o.velocity, ue, Vec2::Zero(), 0.01);
    const double h = safety_value(e.position, o.position, cfg);
    CHECK(rate == doctest::Approx(-kappa(alpha, h)).epsilon(1e-9));
  }
}

TEST_CASE("no neighbours: filter returns the clamped nominal") {
  const NominalPlan plan{12.0, Vec2::UnitX(), 0.5};
  const SafeControl sc = safe_control({Vec2::Zero(), Vec2(2, 0)}, {}, AlphaVector{1.0}, plan,
                                      SafetyConfig{}, AccelLimits{}, 0.01);
  CHECK(sc.u.acceleration.isApprox(Vec2(5, 0)));
  CHECK_FALSE(sc.infeasible);
}

TEST_CASE("distant neighbour leaves the nominal untouched") {
  const NominalPlan plan{10.0, Vec2::UnitX(), 0.5};
  const std::vector<Neighbor> others{{{Vec2(500, 300), Vec2(0, 0)}, {}}};
  const SafeControl sc = safe_control({Vec2::Zero(), Vec2(9, 0)}, others, AlphaVector{1.0}, plan,
                                      SafetyConfig{}, AccelLimits{}, 0.01);
  CHECK(sc.u.acceleration.isApprox(sc.nominal.acceleration));
}

TEST_CASE("closing on a stopped car brakes") {
  const NominalPlan plan{10.0, Vec2::UnitX(), 0.5};
  const std::vector<Neighbor> others{{{Vec2(7, 0), Vec2(0, 0)}, {}}};
  const SafeControl sc = safe_control({Vec2::Zero(), Vec2(10, 0)}, others, AlphaVector{1.0}, plan,
                                      SafetyConfig{}, AccelLimits{}, 0.01);
  CHECK(sc.u.acceleration.x() < -1.0);
}

TEST_CASE("coincident positions cannot form a row") {
  CHECK_THROWS_AS(build_safety_constraint({Vec2(1, 1), Vec2()}, {Vec2(1, 1), Vec2(1, 0)}, {},
                                          AlphaVector{1.0}, SafetyConfig{}, 0.01),
                  DegenerateConstraintError);
}

TEST_CASE("non-finite neighbour state is rejected") {
  const std::vector<Neighbor> others{{{Vec2(std::nan(""), 0), Vec2(0, 0)}, {}}};
  CHECK_THROWS_AS(safe_control({Vec2::Zero(), Vec2(1, 0)}, others, AlphaVector{1.0},
                               NominalPlan{}, SafetyConfig{}, AccelLimits{}, 0.01),
                  std::domain_error);
}

TEST_CASE("plan and limit validation") {
  CHECK_THROWS_AS((NominalPlan{10.0, Vec2(2, 0), 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((NominalPlan{10.0, Vec2(1, 0), 0.0}.validate()), ConfigError);
  AccelLimits bad;
  bad.u_min = Vec2(1, -1);
  bad.u_max = Vec2(0, 1);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
