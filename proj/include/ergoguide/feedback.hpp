#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergoguide/body_model.hpp"

namespace ergoguide {

// ---- Guided joints ------------------------------------------------------------

enum class GuidedJoint : std::uint8_t { Torso = 0, Shoulder, Elbow };
inline constexpr std::size_t kGuidedCount = 3;
inline constexpr std::array<GuidedJoint, kGuidedCount> kGuidedJoints = {
    GuidedJoint::Torso, GuidedJoint::Shoulder, GuidedJoint::Elbow};

constexpr std::size_t index(GuidedJoint j) { return static_cast<std::size_t>(j); }
std::string_view guided_name(GuidedJoint j);
std::optional<GuidedJoint> guided_from_name(std::string_view name);
Joint model_joint(GuidedJoint j);

using GuidedAngles = std::array<double, kGuidedCount>;
GuidedAngles guided_angles(const Posture& q);

/// Maximum errors (deg) used to normalise: torso 90, shoulder 180, elbow 145.
inline constexpr GuidedAngles kDefaultMaxError = {90.0, 180.0, 145.0};

struct ErrorVector {
  std::array<double, kGuidedCount> value{};
  GuidedAngles max_error = kDefaultMaxError;

  double operator[](GuidedJoint j) const { return value[index(j)]; }
  bool all_below(double threshold) const;
};

/// eps_j = |q_c - q_d| / xi_j. Throws ConfigError for xi_j <= 0.
ErrorVector error_magnitude(const GuidedAngles& current, const GuidedAngles& desired,
                            const GuidedAngles& max_error = kDefaultMaxError);

// ---- Levels -----------------------------------------------------------------

enum class Level : std::uint8_t { Off = 0, L1, L2, L3 };
std::string_view level_name(Level l);
std::optional<Level> level_from_name(std::string_view name);

struct LevelTable {
  double dead_band = 0.05;
  double l2_threshold = 0.15;
  double l3_threshold = 0.30;
  std::array<double, 4> amplitude{0.0, 0.33, 0.66, 1.0};

  double lambda(Level l) const { return amplitude[static_cast<std::size_t>(l)]; }
  void validate() const;
};

/// Argmax with ties broken toward torso < shoulder < elbow; nullopt when every
/// error is inside the dead-band.
std::optional<GuidedJoint> select_target_joint(const ErrorVector& eps, double dead_band = 0.05);

Level select_level(double eps, const LevelTable& table = {});

// ---- Devices & commands -----------------------------------------------------

enum class Modality : std::uint8_t { Spot = 0, Ramp, Pattern };
std::string_view modality_name(Modality m);
std::optional<Modality> modality_from_name(std::string_view name);

/// Forward means q_c > q_d (the joint angle must decrease).
enum class Direction : std::uint8_t { Forward, Backward };
constexpr Direction direction_of(double current, double desired) {
  return current > desired ? Direction::Forward : Direction::Backward;
}
/// Sign of the joint-angle change the wearer should make.
constexpr int motion_sign(Direction d) { return d == Direction::Forward ? -1 : +1; }

struct DevicePlacement {
  std::uint16_t device_id = 0;
  GuidedJoint joint = GuidedJoint::Torso;
  int index = 0;           // position along the pattern axis
  int repulsion_sign = 0;  // joint-angle direction the wearer moves when this unit vibrates
  double spacing = 0.05;   // m
  std::string site;
};

class PlacementRegistry {
 public:
  PlacementRegistry(Modality modality, std::vector<DevicePlacement> placements);

  /// SPOT: 2 opposed units per joint; RAMP: 1 per joint; PATTERN: 3 torso, 2 + 2 arm.
  static PlacementRegistry standard(Modality modality);

  Modality modality() const { return modality_; }
  const std::vector<DevicePlacement>& placements() const { return placements_; }
  /// Units of one joint sorted by index. Throws RegistryError when empty.
  std::vector<DevicePlacement> units(GuidedJoint joint) const;
  const DevicePlacement* find(std::uint16_t device_id) const;

 private:
  Modality modality_;
  std::vector<DevicePlacement> placements_;
};

struct DeviceCommand {
  std::uint64_t tick = 0;
  std::uint16_t device_id = 0;
  Level level = Level::Off;
  double amplitude = 0.0;  // lambda in [0, 1]
  std::uint32_t duration_ms = 0;
  std::uint32_t onset_ms = 0;

  friend bool operator==(const DeviceCommand&, const DeviceCommand&) = default;
};

inline constexpr std::uint32_t kPulseMs = 400;

/// One repulsive pulse on the unit whose repulsion_sign matches the required motion.
std::vector<DeviceCommand> encode_spot(const PlacementRegistry& reg, GuidedJoint joint,
                                       Direction dir, Level level, const LevelTable& table = {},
                                       std::uint32_t pulse_ms = kPulseMs);

/// A `steps`-step amplitude ramp on the joint's single unit: increasing for
/// Forward, decreasing for Backward. `phase` selects the cycle position; only
/// phase 0 starts a cycle, other phases return no commands.
std::vector<DeviceCommand> encode_ramp(const PlacementRegistry& reg, GuidedJoint joint,
                                       Direction dir, Level level, int phase,
                                       const LevelTable& table = {}, int steps = 3,
                                       std::uint32_t pulse_ms = kPulseMs);

/// Sequential pulses, ascending unit index for Forward, descending for Backward.
std::vector<DeviceCommand> encode_pattern(const PlacementRegistry& reg, GuidedJoint joint,
                                          Direction dir, Level level,
                                          const LevelTable& table = {},
                                          std::uint32_t pulse_ms = kPulseMs);

// ---- Engine -----------------------------------------------------------------

struct FeedbackConfig {
  Modality modality = Modality::Spot;
  LevelTable levels;
  GuidedAngles max_error = kDefaultMaxError;
  std::uint32_t pulse_ms = kPulseMs;
  std::uint32_t tick_ms = 100;
  int ramp_steps = 3;

  /// Ticks between cycle starts for RAMP / PATTERN on `joint`; 1 for SPOT.
  int cycle_ticks(const PlacementRegistry& reg, GuidedJoint joint) const;
};

struct FeedbackState {
  std::array<int, kGuidedCount> phase{};
  bool active = false;
  std::optional<GuidedJoint> last_joint;
  std::optional<Direction> last_direction;

  friend bool operator==(const FeedbackState&, const FeedbackState&) = default;
};

struct FeedbackOutput {
  std::vector<DeviceCommand> commands;
  ErrorVector errors;
  std::optional<GuidedJoint> joint;
  Level level = Level::Off;
  Direction direction = Direction::Backward;
};

/// One 10 Hz control tick of the directional feedback loop.
std::pair<FeedbackOutput, FeedbackState> feedback_step(const FeedbackConfig& config,
                                                       const PlacementRegistry& reg,
                                                       const FeedbackState& state,
                                                       const GuidedAngles& current,
                                                       const GuidedAngles& desired,
                                                       std::uint64_t tick);

}  // namespace ergoguide
