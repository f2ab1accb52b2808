#pragma once

#include <array>
#include <random>

#include "ergoguide/body_model.hpp"

namespace ergoguide {

/// Per-joint torque in N·m, chain order. Positive torque tips the distal
/// chain forward (+x) about the joint.
using TorqueVector = std::array<double, kJointCount>;

/// External vertical load held at the grasp point.
struct LoadSpec {
  double mass = 0.0;  // kg
};

struct PlateReading {
  double grf_z = 0.0;  // N
  double cop_x = 0.0;  // m
};

struct PlateNoise {
  double cop_sigma = 0.0;  // m
  double grf_sigma = 0.0;  // N
};

TorqueVector gravity_torques(const HumanModel& model, const Posture& q);
TorqueVector loaded_torques(const HumanModel& model, const Posture& q, const LoadSpec& load);

/// loaded_torques - gravity_torques; the statics ground truth.
TorqueVector overloading_torques_oracle(const HumanModel& model, const Posture& q,
                                        const LoadSpec& load);

PlateReading simulate_plate(const HumanModel& model, const Posture& q, const LoadSpec& load);
PlateReading simulate_plate(const HumanModel& model, const Posture& q, const LoadSpec& load,
                            const PlateNoise& noise, std::mt19937_64& rng);

struct EstimatorOptions {
  double min_load_mass = 0.2;     // kg; below this no external load is reported
  double grf_tolerance = 5.0;     // N of slack on the body-weight precondition
};

struct OverloadEstimate {
  TorqueVector torques{};
  bool load_detected = false;
  double mass = 0.0;    // estimated load mass, kg
  double load_x = 0.0;  // estimated application abscissa, m
};

/// Recovers the overloading torques from the CoP displacement between the
/// measured plate reading and the SESC-predicted unloaded CoP.
OverloadEstimate estimate_overloading(const PlateReading& plate, const SescParams& sesc,
                                      const HumanModel& model, const Posture& q,
                                      const EstimatorOptions& options = {});

/// True for joints on the ground-to-hand load path. Every joint of the
/// planar chain qualifies.
constexpr bool supports_load(Joint) { return true; }

}  // namespace ergoguide
