#include "ergoguide/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {
constexpr std::array<std::string_view, kGuidedCount> kGuidedNames = {"torso", "shoulder", "elbow"};
constexpr std::array<std::string_view, 4> kLevelNames = {"OFF", "L1", "L2", "L3"};
constexpr std::array<std::string_view, 3> kModalityNames = {"spot", "ramp", "pattern"};
}  // namespace

std::string_view guided_name(GuidedJoint j) { return kGuidedNames[index(j)]; }

std::optional<GuidedJoint> guided_from_name(std::string_view name) {
  for (GuidedJoint j : kGuidedJoints) {
    if (guided_name(j) == name) return j;
  }
  if (name == "hip") return GuidedJoint::Torso;
  return std::nullopt;
}

Joint model_joint(GuidedJoint j) {
  switch (j) {
    case GuidedJoint::Torso: return Joint::Hip;
    case GuidedJoint::Shoulder: return Joint::Shoulder;
    case GuidedJoint::Elbow: return Joint::Elbow;
  }
  return Joint::Hip;
}

GuidedAngles guided_angles(const Posture& q) {
  return {q[Joint::Hip], q[Joint::Shoulder], q[Joint::Elbow]};
}

bool ErrorVector::all_below(double threshold) const {
  return std::all_of(value.begin(), value.end(), [&](double e) { return e < threshold; });
}

ErrorVector error_magnitude(const GuidedAngles& current, const GuidedAngles& desired,
                            const GuidedAngles& max_error) {
  ErrorVector eps;
  eps.max_error = max_error;
  for (std::size_t j = 0; j < kGuidedCount; ++j) {
    if (!(max_error[j] > 0.0)) {
      throw ConfigError("maximum error for '" + std::string(kGuidedNames[j]) + "' must be > 0");
    }
    eps.value[j] = std::abs(current[j] - desired[j]) / max_error[j];
  }
  return eps;
}

std::string_view level_name(Level l) { return kLevelNames[static_cast<std::size_t>(l)]; }

std::optional<Level> level_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLevelNames.size(); ++i) {
    if (kLevelNames[i] == name) return static_cast<Level>(i);
  }
  return std::nullopt;
}

void LevelTable::validate() const {
  if (!(0.0 < dead_band && dead_band < l2_threshold && l2_threshold < l3_threshold)) {
    throw ConfigError("level thresholds must satisfy 0 < dead_band < l2 < l3");
  }
  if (amplitude[0] != 0.0 || !(amplitude[1] > 0.0 && amplitude[1] < amplitude[2] &&
                               amplitude[2] < amplitude[3] && amplitude[3] <= 1.0)) {
    throw ConfigError("amplitudes must satisfy OFF = 0 < L1 < L2 < L3 <= 1");
  }
}

std::optional<GuidedJoint> select_target_joint(const ErrorVector& eps, double dead_band) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < kGuidedCount; ++j) {
    if (eps.value[j] > eps.value[best]) best = j;
  }
  if (eps.value[best] < dead_band) return std::nullopt;
  return static_cast<GuidedJoint>(best);
}

Level select_level(double eps, const LevelTable& table) {
  if (eps < table.dead_band) return Level::Off;
  if (eps < table.l2_threshold) return Level::L1;
  if (eps < table.l3_threshold) return Level::L2;
  return Level::L3;
}

std::string_view modality_name(Modality m) { return kModalityNames[static_cast<std::size_t>(m)]; }

std::optional<Modality> modality_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < kModalityNames.size(); ++i) {
    if (kModalityNames[i] == lower) return static_cast<Modality>(i);
  }
  return std::nullopt;
}

PlacementRegistry::PlacementRegistry(Modality modality, std::vector<DevicePlacement> placements)
    : modality_(modality), placements_(std::move(placements)) {
  for (GuidedJoint j : kGuidedJoints) {
    std::vector<const DevicePlacement*> mine;
    for (const auto& p : placements_) {
      if (p.joint == j) mine.push_back(&p);
    }
    if (mine.empty()) continue;
    if (modality_ == Modality::Spot) {
      if (mine.size() != 2 || mine[0]->repulsion_sign * mine[1]->repulsion_sign != -1) {
        throw ConfigError("SPOT needs exactly two opposed units on " +
                          std::string(guided_name(j)));
      }
    } else if (modality_ == Modality::Ramp && mine.size() != 1) {
      throw ConfigError("RAMP needs exactly one unit on " + std::string(guided_name(j)));
    } else if (modality_ == Modality::Pattern && mine.size() < 2) {
      throw ConfigError("PATTERN needs at least two units on " + std::string(guided_name(j)));
    }
  }
}

PlacementRegistry PlacementRegistry::standard(Modality modality) {
  using G = GuidedJoint;
  switch (modality) {
    case Modality::Spot:
      return PlacementRegistry(
          modality, {
                        {1, G::Torso, 0, -1, 0.0, "chest_T2"},
                        {2, G::Torso, 1, +1, 0.0, "upper_back_T2"},
                        {3, G::Shoulder, 0, +1, 0.0, "upper_arm_front"},
                        {4, G::Shoulder, 1, -1, 0.0, "upper_arm_back"},
                        {5, G::Elbow, 0, +1, 0.0, "forearm_front"},
                        {6, G::Elbow, 1, -1, 0.0, "forearm_back"},
                    });
    case Modality::Ramp:
      return PlacementRegistry(modality, {
                                             {1, G::Torso, 0, 0, 0.0, "upper_back"},
                                             {2, G::Shoulder, 0, 0, 0.0, "upper_arm"},
                                             {3, G::Elbow, 0, 0, 0.0, "forearm"},
                                         });
    case Modality::Pattern:
      return PlacementRegistry(modality, {
                                             {1, G::Torso, 0, 0, 0.05, "back_1"},
                                             {2, G::Torso, 1, 0, 0.05, "back_2"},
                                             {3, G::Torso, 2, 0, 0.05, "back_3"},
                                             {4, G::Shoulder, 0, 0, 0.05, "upper_arm_1"},
                                             {5, G::Shoulder, 1, 0, 0.05, "upper_arm_2"},
                                             {6, G::Elbow, 0, 0, 0.05, "forearm_1"},
                                             {7, G::Elbow, 1, 0, 0.05, "forearm_2"},
                                         });
  }
  throw ConfigError("unknown modality");
}

std::vector<DevicePlacement> PlacementRegistry::units(GuidedJoint joint) const {
  std::vector<DevicePlacement> out;
  for (const auto& p : placements_) {
    if (p.joint == joint) out.push_back(p);
  }
  if (out.empty()) {
    throw RegistryError("no " + std::string(modality_name(modality_)) + " unit registered for " +
                        std::string(guided_name(joint)));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

const DevicePlacement* PlacementRegistry::find(std::uint16_t device_id) const {
  for (const auto& p : placements_) {
    if (p.device_id == device_id) return &p;
  }
  return nullptr;
}

std::vector<DeviceCommand> encode_spot(const PlacementRegistry& reg, GuidedJoint joint,
                                       Direction dir, Level level, const LevelTable& table,
                                       std::uint32_t pulse_ms) {
  const auto units = reg.units(joint);
  if (level == Level::Off) return {};
  const int wanted = motion_sign(dir);
  for (const auto& u : units) {
    if (u.repulsion_sign == wanted) {
      return {DeviceCommand{0, u.device_id, level, table.lambda(level), pulse_ms, 0}};
    }
  }
  throw RegistryError("no SPOT unit repels toward the required direction on " +
                      std::string(guided_name(joint)));
}

std::vector<DeviceCommand> encode_ramp(const PlacementRegistry& reg, GuidedJoint joint,
                                       Direction dir, Level level, int phase,
                                       const LevelTable& table, int steps,
                                       std::uint32_t pulse_ms) {
  const auto units = reg.units(joint);
  if (level == Level::Off || phase != 0) return {};
  if (steps < 2) throw ConfigError("a ramp needs at least two steps");
  const double peak = table.lambda(level);
  std::vector<DeviceCommand> out;
  for (int s = 0; s < steps; ++s) {
    const int rung = dir == Direction::Forward ? s + 1 : steps - s;
    out.push_back(DeviceCommand{0, units.front().device_id, level,
                                peak * static_cast<double>(rung) / static_cast<double>(steps),
                                pulse_ms, static_cast<std::uint32_t>(s) * pulse_ms});
  }
  return out;
}

std::vector<DeviceCommand> encode_pattern(const PlacementRegistry& reg, GuidedJoint joint,
                                          Direction dir, Level level, const LevelTable& table,
                                          std::uint32_t pulse_ms) {
  auto units = reg.units(joint);
  if (level == Level::Off) return {};
  if (dir == Direction::Backward) std::reverse(units.begin(), units.end());
  std::vector<DeviceCommand> out;
  std::uint32_t onset = 0;
  for (const auto& u : units) {
    out.push_back(DeviceCommand{0, u.device_id, level, table.lambda(level), pulse_ms, onset});
    onset += pulse_ms;
  }
  return out;
}

int FeedbackConfig::cycle_ticks(const PlacementRegistry& reg, GuidedJoint joint) const {
  if (tick_ms == 0) throw ConfigError("tick period must be > 0");
  std::uint32_t span = 0;
  switch (modality) {
    case Modality::Spot: return 1;
    case Modality::Ramp: span = static_cast<std::uint32_t>(ramp_steps) * pulse_ms; break;
    case Modality::Pattern:
      span = static_cast<std::uint32_t>(reg.units(joint).size()) * pulse_ms;
      break;
  }
  return static_cast<int>(std::max<std::uint32_t>(1, (span + tick_ms - 1) / tick_ms));
}

std::pair<FeedbackOutput, FeedbackState> feedback_step(const FeedbackConfig& config,
                                                       const PlacementRegistry& reg,
                                                       const FeedbackState& state,
                                                       const GuidedAngles& current,
                                                       const GuidedAngles& desired,
                                                       std::uint64_t tick) {
  if (reg.modality() != config.modality) {
    throw ConfigError("device registry modality does not match the feedback modality");
  }
  FeedbackOutput out;
  out.errors = error_magnitude(current, desired, config.max_error);
  out.joint = select_target_joint(out.errors, config.levels.dead_band);

  if (!out.joint) {
    // Inside the dead-band: one all-OFF sweep on entry, silence afterwards.
    if (state.active) {
      for (const auto& p : reg.placements()) {
        out.commands.push_back(DeviceCommand{tick, p.device_id, Level::Off, 0.0, 0, 0});
      }
    }
    return {std::move(out), FeedbackState{}};
  }

  const GuidedJoint j = *out.joint;
  const std::size_t ji = index(j);
  out.level = select_level(out.errors.value[ji], config.levels);
  out.direction = direction_of(current[ji], desired[ji]);

  FeedbackState next = state;
  next.active = true;
  for (std::size_t k = 0; k < kGuidedCount; ++k) {
    if (k != ji) next.phase[k] = 0;
  }
  // A new joint or a reversed direction restarts the cycle immediately.
  if (state.last_joint != j || state.last_direction != out.direction) next.phase[ji] = 0;
  next.last_joint = j;
  next.last_direction = out.direction;

  const int phase = next.phase[ji];
  switch (config.modality) {
    case Modality::Spot:
      out.commands = encode_spot(reg, j, out.direction, out.level, config.levels, config.pulse_ms);
      break;
    case Modality::Ramp:
      out.commands = encode_ramp(reg, j, out.direction, out.level, phase, config.levels,
                                 config.ramp_steps, config.pulse_ms);
      break;
    case Modality::Pattern:
      if (phase == 0) {
        out.commands =
            encode_pattern(reg, j, out.direction, out.level, config.levels, config.pulse_ms);
      }
      break;
  }
  next.phase[ji] = (phase + 1) % config.cycle_ticks(reg, j);
  for (auto& c : out.commands) c.tick = tick;
  return {std::move(out), next};
}

}  // namespace ergoguide
