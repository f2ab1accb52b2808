#include "ergoguide/loading.hpp"

#include <sstream>

#include "ergoguide/errors.hpp"

namespace ergoguide {

TorqueVector gravity_torques(const HumanModel& model, const Posture& q) {
  const KeyPoints kp = forward_kinematics(model, q);
  const auto coms = segment_coms(model, q);
  const double g = model.gravity();
  TorqueVector tau{};
  // Joint j carries every segment from its own onward.
  for (std::size_t j = 0; j < kJointCount; ++j) {
    double moment = 0.0;
    for (std::size_t i = j; i < kJointCount; ++i) {
      moment += model.segments()[i].mass * g * (coms[i].x - kp.joints[j].x);
    }
    tau[j] = moment;
  }
  return tau;
}

TorqueVector loaded_torques(const HumanModel& model, const Posture& q, const LoadSpec& load) {
  TorqueVector tau = gravity_torques(model, q);
  const KeyPoints kp = forward_kinematics(model, q);
  const double force = load.mass * model.gravity();
  for (std::size_t j = 0; j < kJointCount; ++j) {
    tau[j] += force * (kp.hand.x - kp.joints[j].x);
  }
  return tau;
}

TorqueVector overloading_torques_oracle(const HumanModel& model, const Posture& q,
                                        const LoadSpec& load) {
  const TorqueVector loaded = loaded_torques(model, q, load);
  const TorqueVector base = gravity_torques(model, q);
  TorqueVector out{};
  for (std::size_t j = 0; j < kJointCount; ++j) out[j] = loaded[j] - base[j];
  return out;
}

PlateReading simulate_plate(const HumanModel& model, const Posture& q, const LoadSpec& load) {
  const double body = model.total_mass();
  const double m = load.mass;
  const double x_com = whole_body_com(model, q).x;
  const double x_hand = forward_kinematics(model, q).hand.x;
  PlateReading r;
  r.grf_z = (body + m) * model.gravity();
  r.cop_x = (body * x_com + m * x_hand) / (body + m);
  return r;
}

PlateReading simulate_plate(const HumanModel& model, const Posture& q, const LoadSpec& load,
                            const PlateNoise& noise, std::mt19937_64& rng) {
  PlateReading r = simulate_plate(model, q, load);
  if (noise.cop_sigma > 0.0) {
    r.cop_x += std::normal_distribution<double>(0.0, noise.cop_sigma)(rng);
  }
  if (noise.grf_sigma > 0.0) {
    r.grf_z += std::normal_distribution<double>(0.0, noise.grf_sigma)(rng);
  }
  return r;
}

OverloadEstimate estimate_overloading(const PlateReading& plate, const SescParams& sesc,
                                      const HumanModel& model, const Posture& q,
                                      const EstimatorOptions& options) {
  const double g = model.gravity();
  const double body = model.total_mass();
  if (plate.grf_z < body * g - options.grf_tolerance) {
    std::ostringstream msg;
    msg << "plate GRF " << plate.grf_z << " N is below body weight " << body * g << " N";
    throw InputError(msg.str());
  }
  OverloadEstimate est;
  est.mass = plate.grf_z / g - body;
  if (est.mass < options.min_load_mass) {
    est.mass = 0.0;
    return est;
  }
  const double x_com = sesc_com(sesc, q).x;
  est.load_x = (plate.cop_x * (body + est.mass) - body * x_com) / est.mass;
  est.load_detected = true;

  const KeyPoints kp = forward_kinematics(model, q);
  for (Joint j : kAllJoints) {
    if (!supports_load(j)) continue;
    est.torques[index(j)] = est.mass * g * (est.load_x - kp.joints[index(j)].x);
  }
  return est;
}

}  // namespace ergoguide
