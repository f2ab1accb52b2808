#pragma once

#include <array>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "ergoguide/feedback.hpp"

namespace ergoguide {

/// Simulated wearer. Stands in for a human subject in closed-loop runs.
struct AgentParams {
  std::array<double, 3> comprehension{1.0, 1.0, 1.0};  // per Modality
  double reaction_delay = 0.0;         // s
  double max_joint_speed = 20.0;       // deg/s
  double speed_gain = 1.0;             // 1/s, speed = gain * |q_c - q_d|
  double perception_threshold = 0.05;  // minimum perceived lambda
  double dwell = 1.6;                  // s a decoded motion persists without new cues
  double completion_hold = 2.5;        // s of silence before announcing completion

  void validate() const;
};

/// "ideal", "noisy" or "sluggish"; throws ConfigError otherwise.
AgentParams agent_preset(std::string_view name);

struct Decision {
  std::array<int, kGuidedCount> direction{};  // -1, 0, +1 in joint-angle sign

  bool empty() const;
  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Decodes the modality's cue into a direction per joint; a correct decode
/// happens with probability `comprehension`, otherwise the direction is inverted.
Decision agent_decide(const AgentParams& agent, std::span<const DeviceCommand> perceived,
                      Modality modality, const PlacementRegistry& reg, std::mt19937_64& rng);

/// Euler step: each moving joint advances at min(max_joint_speed, gain * error)
/// in its decided direction, clamped to the joint limits.
Posture agent_step(const AgentParams& agent, const Decision& decision, const Posture& q,
                   const ErrorVector& eps, const HumanModel& model, double dt);

/// Stateful wrapper: reaction delay, dwell and completion announcement.
class WearerAgent {
 public:
  WearerAgent(AgentParams params, PlacementRegistry registry, std::uint64_t seed);

  void perceive(double t, std::span<const DeviceCommand> commands);
  Posture advance(double t, double dt, const Posture& q, const ErrorVector& eps,
                  const HumanModel& model);
  /// True once no vibration has been felt for `completion_hold` seconds.
  bool announces_completion(double t) const;
  void reset(double t);

  const AgentParams& params() const { return params_; }
  Decision current() const;

 private:
  struct Pending {
    double at;
    Decision decision;
  };

  AgentParams params_;
  PlacementRegistry registry_;
  std::mt19937_64 rng_;
  std::vector<Pending> pending_;
  std::array<int, kGuidedCount> direction_{};
  std::array<double, kGuidedCount> expiry_{};
  double last_cue_ = 0.0;
};

}  // namespace ergoguide
