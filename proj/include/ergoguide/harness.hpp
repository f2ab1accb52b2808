#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoguide/body_model.hpp"
#include "ergoguide/feedback.hpp"
#include "ergoguide/posture_opt.hpp"
#include "ergoguide/trial_log.hpp"
#include "ergoguide/wearer.hpp"

namespace ergoguide {

enum class ProtocolKind : std::uint8_t { ModalityTest, ErgonomicTest };
std::string_view protocol_name(ProtocolKind k);
std::optional<ProtocolKind> protocol_from_name(std::string_view name);

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::ModalityTest;
  std::array<double, 3> torso_targets{-10.0, 30.0, 60.0};
  std::array<double, 3> shoulder_targets{10.0, -45.0, -90.0};
  std::array<double, 3> elbow_targets{-45.0, -90.0, -125.0};
  std::array<double, 3> distances{0.2, 0.5, 0.8};  // m ahead of the heel
  double load_mass = 4.0;                          // kg
  double object_height = 0.5;                      // m
  std::uint64_t seed = 1;
  double timeout = 180.0;  // s per segment

  void validate(const HumanModel& model) const;
};

/// Desired angle per guided joint; unset joints are held where they are.
using GuidedTarget = std::array<std::optional<double>, kGuidedCount>;
using TargetSequence = std::vector<GuidedTarget>;

/// "torso" or "arm" (shoulder and elbow together).
TargetSequence target_sequence(const ProtocolSpec& spec, std::string_view joint_set);
std::array<bool, kGuidedCount> guided_mask(std::string_view joint_set);

struct SessionConfig {
  std::string model_path;  // empty: standard anthropometry
  Modality modality = Modality::Spot;
  std::string agent = "ideal";  // preset name or "live"
  std::optional<AgentParams> agent_params;  // overrides the preset when set
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int tick_hz = 10;
  int sensor_hz = 1000;
  std::string joint_set = "torso";
  int subject = 0;
  ProtocolSpec protocol;
  double plate_cop_sigma = 0.0;  // m
  double plate_grf_sigma = 0.0;  // N
  double phase_a = 1.0;          // s hold at the initial posture (ergonomic test)
  double phase_c = 2.0;          // s hold after guidance (ergonomic test)
  int condition = 2;             // ergonomic condition used by live sessions

  void validate() const;
  HumanModel model() const;
  AgentParams resolved_agent() const;
  FeedbackConfig feedback() const;
  std::uint32_t tick_ms() const { return static_cast<std::uint32_t>(1000 / tick_hz); }
  int substeps() const { return sensor_hz / tick_hz; }
};

SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json session_config_to_json(const SessionConfig& c);
SessionConfig load_session_config(const std::string& path);

/// Closed loop over the target sequence: feedback tick, wire frames, device
/// emulator, wearer. A segment ends when the wearer announces completion
/// inside the dead-band, or at the timeout.
TrialLog run_modality_trial(const SessionConfig& config, const TargetSequence& targets);

// ---- Ergonomic test ---------------------------------------------------------

/// Reaching posture holding the object `distance` m ahead of the heel at
/// `height` m. Searches ankle, knee and elbow in a fixed order, preferring a
/// straight-legged stoop, and solves trunk and shoulder in closed form. The
/// first candidate inside the joint limits whose loaded CoP lies in the
/// support interval wins. Throws InfeasibleError when none does.
Posture reaching_posture(const HumanModel& model, double distance, double height,
                         const LoadSpec& load);

struct ErgonomicPlan {
  int condition = 1;
  double distance = 0.0;
  LoadSpec load;
  Posture q_init;
  OptimizationResult result;
};

/// q_init plus the optimized posture for condition 1..3.
ErgonomicPlan plan_ergonomic(const SessionConfig& config, int condition);

/// Phases: A holds q_init, B guides torso, shoulder and elbow with feedback
/// while the legs follow in proportion to progress, C holds the result.
/// Optimizer infeasibility yields an aborted log carrying the report.
TrialLog run_ergonomic_trial(const SessionConfig& config, int condition);

// ---- Campaign ---------------------------------------------------------------

struct CampaignOptions {
  int subjects = 15;
  std::vector<Modality> modalities{Modality::Spot, Modality::Ramp, Modality::Pattern};
  std::vector<std::string> joint_sets{"torso", "arm"};
  double jitter = 0.1;  // relative spread of agent parameters
};

/// Permutation of {0..n-1} for one subject; a pure function of the arguments.
std::vector<int> subject_order(std::uint64_t seed, int subject, int n);

/// Agent parameters of one virtual subject.
AgentParams jitter_agent(const AgentParams& base, std::uint64_t seed, int subject,
                         double jitter);

/// Every trial of every subject, in a fixed order independent of threading.
std::vector<TrialLog> run_campaign(const SessionConfig& base, const CampaignOptions& options);

// ---- Log self-consistency ---------------------------------------------------

/// Replays feedback_step over the logged q_c / q_d stream. Returns the index of
/// the first record whose commands differ, or nullopt when all match.
std::optional<std::size_t> replay_mismatch(const TrialLog& log);

}  // namespace ergoguide
