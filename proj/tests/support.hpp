#pragma once

#include "pcbf/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

namespace pcbf::test {

inline std::filesystem::path preset(const std::string& name) {
  return std::filesystem::path(PCBF_PRESET_DIR) / (name + ".cfg");
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const auto dir = std::filesystem::temp_directory_path() /
                   ("pcbf-test-" + tag + "-" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline VehicleSpec vehicle(std::string id, Role role, Lane lane, Vec2 position, Vec2 velocity,
                           AlphaVector alpha = {1.0}) {
  VehicleSpec v;
  v.id = std::move(id);
  v.role = role;
  v.lane = lane;
  v.initial = {position, velocity};
  v.alpha = std::move(alpha);
  v.desired_speed = velocity.norm();
  if (lane == Lane::kFree && velocity.norm() > 0.0) v.heading = velocity.normalized();
  return v;
}

}  // namespace pcbf::test
