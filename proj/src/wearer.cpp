#include "ergoguide/wearer.hpp"

#include <algorithm>
#include <cmath>

#include "ergoguide/errors.hpp"

namespace ergoguide {

void AgentParams::validate() const {
  for (double p : comprehension) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("comprehension must lie in [0, 1]");
  }
  if (!(reaction_delay >= 0.0)) throw ConfigError("reaction delay must be >= 0");
  if (!(max_joint_speed > 0.0) || !(speed_gain > 0.0)) {
    throw ConfigError("agent speeds must be > 0");
  }
  if (!(dwell >= 0.0) || !(completion_hold > 0.0)) throw ConfigError("agent timings invalid");
}

AgentParams agent_preset(std::string_view name) {
  AgentParams p;
  if (name == "ideal") return p;
  if (name == "noisy") {
    p.comprehension = {0.85, 0.70, 0.75};
    p.reaction_delay = 0.3;
    p.max_joint_speed = 15.0;
    p.speed_gain = 0.8;
    p.perception_threshold = 0.2;
    return p;
  }
  if (name == "sluggish") {
    p.comprehension = {0.95, 0.95, 0.95};
    p.reaction_delay = 0.8;
    p.max_joint_speed = 6.0;
    p.speed_gain = 0.4;
    p.dwell = 2.0;
    return p;
  }
  throw ConfigError("unknown agent preset '" + std::string(name) + "'");
}

bool Decision::empty() const {
  return std::all_of(direction.begin(), direction.end(), [](int d) { return d == 0; });
}

namespace {

// Intended motion sign per joint, before comprehension noise.
std::array<int, kGuidedCount> decode(std::span<const DeviceCommand> cmds, Modality modality,
                                     const PlacementRegistry& reg) {
  std::array<int, kGuidedCount> dir{};
  std::array<std::vector<std::pair<const DeviceCommand*, const DevicePlacement*>>, kGuidedCount>
      by_joint;
  for (const auto& c : cmds) {
    const DevicePlacement* p = reg.find(c.device_id);
    if (!p) continue;
    by_joint[index(p->joint)].push_back({&c, p});
  }
  for (std::size_t j = 0; j < kGuidedCount; ++j) {
    auto& seen = by_joint[j];
    if (seen.empty()) continue;
    std::stable_sort(seen.begin(), seen.end(),
                     [](const auto& a, const auto& b) { return a.first->onset_ms < b.first->onset_ms; });
    switch (modality) {
      case Modality::Spot:
        dir[j] = seen.back().second->repulsion_sign;
        break;
      case Modality::Ramp: {
        if (seen.size() < 2) break;
        const double first = seen.front().first->amplitude;
        const double last = seen.back().first->amplitude;
        if (last > first) dir[j] = motion_sign(Direction::Forward);
        if (last < first) dir[j] = motion_sign(Direction::Backward);
        break;
      }
      case Modality::Pattern: {
        if (seen.size() < 2) break;
        const int first = seen.front().second->index;
        const int last = seen.back().second->index;
        if (last > first) dir[j] = motion_sign(Direction::Forward);
        if (last < first) dir[j] = motion_sign(Direction::Backward);
        break;
      }
    }
  }
  return dir;
}

}  // namespace

Decision agent_decide(const AgentParams& agent, std::span<const DeviceCommand> perceived,
                      Modality modality, const PlacementRegistry& reg, std::mt19937_64& rng) {
  std::vector<DeviceCommand> felt;
  for (const auto& c : perceived) {
    if (c.level != Level::Off && c.amplitude >= agent.perception_threshold) felt.push_back(c);
  }
  Decision d;
  d.direction = decode(felt, modality, reg);
  const double p = agent.comprehension[static_cast<std::size_t>(modality)];
  for (int& dir : d.direction) {
    if (dir == 0) continue;
    if (!std::bernoulli_distribution(p)(rng)) dir = -dir;
  }
  return d;
}

Posture agent_step(const AgentParams& agent, const Decision& decision, const Posture& q,
                   const ErrorVector& eps, const HumanModel& model, double dt) {
  Posture out = q;
  for (GuidedJoint g : kGuidedJoints) {
    const int dir = decision.direction[index(g)];
    if (dir == 0) continue;
    const double err_deg = eps.value[index(g)] * eps.max_error[index(g)];
    const double speed = std::min(agent.max_joint_speed, agent.speed_gain * err_deg);
    const Joint j = model_joint(g);
    const JointLimit& lim = model.limit(j);
    out[j] = std::clamp(q[j] + dir * speed * dt, lim.min_deg, lim.max_deg);
  }
  return out;
}

WearerAgent::WearerAgent(AgentParams params, PlacementRegistry registry, std::uint64_t seed)
    : params_(params), registry_(std::move(registry)), rng_(seed) {
  params_.validate();
}

void WearerAgent::perceive(double t, std::span<const DeviceCommand> commands) {
  bool felt = false;
  for (const auto& c : commands) {
    if (c.level != Level::Off && c.amplitude >= params_.perception_threshold) felt = true;
  }
  if (!felt) return;
  last_cue_ = t;
  Decision d = agent_decide(params_, commands, registry_.modality(), registry_, rng_);
  if (!d.empty()) pending_.push_back({t + params_.reaction_delay, d});
}

Posture WearerAgent::advance(double t, double dt, const Posture& q, const ErrorVector& eps,
                             const HumanModel& model) {
  std::size_t consumed = 0;
  for (const auto& p : pending_) {
    if (p.at > t + 1e-12) break;
    for (std::size_t j = 0; j < kGuidedCount; ++j) {
      if (p.decision.direction[j] == 0) continue;
      direction_[j] = p.decision.direction[j];
      expiry_[j] = p.at + params_.dwell;
    }
    ++consumed;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(consumed));

  Decision now;
  for (std::size_t j = 0; j < kGuidedCount; ++j) {
    if (direction_[j] != 0 && t < expiry_[j]) now.direction[j] = direction_[j];
  }
  return agent_step(params_, now, q, eps, model, dt);
}

Decision WearerAgent::current() const {
  Decision d;
  d.direction = direction_;
  return d;
}

bool WearerAgent::announces_completion(double t) const {
  return pending_.empty() && t - last_cue_ >= params_.completion_hold;
}

void WearerAgent::reset(double t) {
  pending_.clear();
  direction_ = {};
  expiry_ = {};
  last_cue_ = t;
}

}  // namespace ergoguide
