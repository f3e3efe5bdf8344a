#include "pcbf/dynamics.hpp"

namespace pcbf {

VehicleState step(const VehicleState& state, const ControlInput& u, double dt) {
  VehicleState next;
  next.velocity = state.velocity + u.acceleration * dt;
  next.position = state.position + next.velocity * dt;
  return next;
}

}  // namespace pcbf
