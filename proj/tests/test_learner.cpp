#include "pcbf/learner.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace pcbf;

namespace {

BarrierSample synthetic(double h, const AlphaVector& alpha, long step = 0) {
  // Active constraint: hdot = -kappa(alpha, h).
  BarrierSample s;
  s.step = step;
  s.basis = basis(h, static_cast<int>(alpha.size()));
  s.hdot_obs = -kappa(alpha, h);
  return s;
}

}  // namespace

TEST_SUITE("learner") {

TEST_CASE("fit recovers weights from noise-free active samples") {
  // [DERIVED] exact data, r = 1e-12: recovery to rounding.
  const AlphaVector truth{0.7, 0.01};
  std::vector<BarrierSample> data;
  for (double h : {1.0, 2.0, 3.5, 5.0}) data.push_back(synthetic(h, truth));
  RidgeConfig cfg;
  cfg.r = 1e-12;
  const AlphaEstimate e = fit(data, cfg);
  CHECK(e.alpha_hat[0] == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(e.alpha_hat[1] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(e.n_samples == 4);
}

TEST_CASE("degenerate linear style: cubic estimate stays near zero") {
  const AlphaVector truth{0.4, 0.0};
  std::vector<BarrierSample> data;
  for (double h = 0.5; h < 10.0; h += 0.5) data.push_back(synthetic(h, truth));
  const AlphaEstimate e = fit(data, RidgeConfig{});
  CHECK(e.alpha_hat[1] <= 1e-4);
  CHECK(e.alpha_hat[0] == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("sign convention as written recovers the negated weights") {
  const AlphaVector truth{0.5, 0.02};
  std::vector<BarrierSample> data;
  for (double h : {1.0, 2.0, 3.0}) data.push_back(synthetic(h, truth));
  RidgeConfig cfg;
  cfg.sign = SignConvention::kAsWritten;
  const AlphaEstimate e = fit(data, cfg);
  CHECK(e.raw[0] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(e.alpha_hat[0] == 0.0);  // clamped to the admissible set
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit({}, RidgeConfig{}), InsufficientDataError);
  RidgeConfig exact;
  exact.r = 0.0;
  // One sample cannot pin two weights without regularisation.
  CHECK_THROWS_AS(fit({synthetic(2.0, AlphaVector{1.0, 0.0})}, exact), RankDeficiencyError);
  RidgeConfig bad;
  bad.r = -1.0;
  CHECK_THROWS_AS(fit({synthetic(2.0, AlphaVector{1.0})}, bad), ConfigError);
}

TEST_CASE("observe: finite difference and analytic rates") {
  const SafetyConfig cfg{5.0, 2};
  const VehicleState j0{Vec2(0, 0), Vec2(10, 0)};
  const VehicleState k0{Vec2(8, 0), Vec2(9, 0)};
  const double dt = 0.01;
  const VehicleState j1{j0.position + j0.velocity * dt, j0.velocity};
  const VehicleState k1{k0.position + k0.velocity * dt, k0.velocity};
  // [DERIVED] h0 = 64 - 25 = 39, h1 = 7.99^2 - 25 = 38.8401; rate = -15.99.
  const BarrierSample fd = observe(j1, k1, j0, k0, cfg, dt, 5, BasisAt::kCurrent);
  CHECK(fd.hdot_obs == doctest::Approx(-15.99).epsilon(1e-9));
  CHECK(fd.h() == doctest::Approx(38.8401));
  CHECK(fd.step == 5);
  const BarrierSample prev = observe(j1, k1, j0, k0, cfg, dt, 5, BasisAt::kPrevious);
  CHECK(prev.h() == doctest::Approx(39.0));
  CHECK(prev.step == 4);
  // [DERIVED] analytic: 2 dx.dv = 2 (-8)(1) = -16.
  const BarrierSample an = observe_analytic(j0, k0, {}, {}, cfg, dt, 0);
  CHECK(an.hdot_obs == doctest::Approx(-16.0));
  CHECK(an.basis.size() == 2);
}

TEST_CASE("rmse pads the shorter vector") {
  // [DERIVED] sqrt((1 + 0)/2).
  CHECK(alpha_rmse(AlphaVector{1.0, 0.0}, AlphaVector{0.0}) == doctest::Approx(std::sqrt(0.5)));
  CHECK(alpha_rmse(AlphaVector{0.3, 0.2}, AlphaVector{0.3, 0.2}) == 0.0);
}

TEST_CASE("convergence needs a full window within tolerance") {
  RidgeConfig cfg;
  cfg.convergence_window = 3;
  cfg.convergence_tol = 1e-3;
  std::vector<AlphaEstimate> h;
  auto push = [&](double a) { h.push_back({AlphaVector{a, 0.0}, {}, 0, false}); };
  push(1.0);
  push(1.0005);
  CHECK_FALSE(check_convergence(h, cfg));
  push(1.0009);
  CHECK(check_convergence(h, cfg));
  push(1.01);
  CHECK_FALSE(check_convergence(h, cfg));
}

TEST_CASE("learner admission filter") {
  RidgeConfig cfg;
  cfg.convergence_window = 3;
  StyleLearner learner(cfg);
  const AccelLimits box;
  const BarrierSample s = synthetic(3.0, AlphaVector{1.0, 0.0});
  const ControlInput nominal{Vec2(0.5, 0.0)};
  // Input equal to the nominal: the constraint was not active.
  CHECK_FALSE(learner.offer(s, nominal, nominal, box));
  // Saturated on the box.
  CHECK_FALSE(learner.offer(s, {Vec2(-5.0, 0.0)}, nominal, box));
  // Deviation perpendicular to the pair offset: shaped by some other row.
  CHECK_FALSE(learner.offer(s, {Vec2(0.5, -1.0)}, nominal, box, Vec2(-6.0, 0.0)));
  // Deviation pointing away from the neighbour, along the offset.
  CHECK(learner.offer(s, {Vec2(-1.0, 0.0)}, nominal, box, Vec2(-6.0, 0.0)));
  CHECK(learner.samples().size() == 1);
  REQUIRE(learner.latest().has_value());

  AdmissionFilter off;
  off.enabled = false;
  StyleLearner all(cfg, off);
  CHECK(all.offer(s, nominal, nominal, box));
}

TEST_CASE("learner converges on a stream of exact samples") {
  RidgeConfig cfg;
  cfg.convergence_window = 5;
  cfg.convergence_tol = 1e-6;
  StyleLearner learner(cfg);
  const AlphaVector truth{0.9, 0.003};
  int n = 0;
  for (double h = 10.0; h > 0.5 && !learner.converged(); h *= 0.95, ++n) {
    learner.add(synthetic(h, truth, n));
  }
  CHECK(learner.converged());
  CHECK(n <= 10);
  CHECK(alpha_rmse(learner.latest()->alpha_hat, truth) < 1e-6);
}

}  // TEST_SUITE
