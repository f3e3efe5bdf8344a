#pragma once

#include "pcbf/barrier.hpp"

namespace pcbf {

/// Planar double-integrator state.
struct VehicleState {
  Vec2 position = Vec2::Zero();  // m
  Vec2 velocity = Vec2::Zero();  // m/s

  bool operator==(const VehicleState&) const = default;
};

struct ControlInput {
  Vec2 acceleration = Vec2::Zero();  // m/s^2

  bool operator==(const ControlInput&) const = default;
};

inline constexpr double kDefaultDt = 0.01;  // s

/// Semi-implicit Euler: v' = v + u dt, x' = x + v' dt.
VehicleState step(const VehicleState& state, const ControlInput& u, double dt);

}  // namespace pcbf
