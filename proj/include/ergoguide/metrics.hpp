#pragma once

#include <array>
#include <optional>
#include <span>

#include "ergoguide/trial_log.hpp"

namespace ergoguide {

struct MetricsOptions {
  double dead_band = 0.05;
  double window = 2.0;                 // s, final evaluation window
  double moving_threshold = 0.5;       // deg/s
  double torque_threshold = 1e-6;      // N·m, below this D is absent
  std::array<bool, kGuidedCount> guided{true, true, true};
};

using Trace = std::span<const TickRecord>;

/// Records of one segment of a trial.
Trace segment_trace(const TrialLog& log, const SegmentInfo& seg);

/// Some sample of the final window has every guided error below the dead-band.
/// Throws EvaluationError for traces shorter than the window.
bool success(Trace trace, const MetricsOptions& opt = {});

/// Index of the sample that marks arrival: the first sample of the in-band run
/// that contains the last in-band sample of the final window.
std::optional<std::size_t> arrival_index(Trace trace, const MetricsOptions& opt = {});

std::optional<double> reaching_time(Trace trace, const MetricsOptions& opt = {});

struct MotionIndices {
  std::array<double, kGuidedCount> angular_distance{};  // deg
  std::array<double, kGuidedCount> velocity{};          // deg/s, chord over time
  std::array<double, kGuidedCount> speed{};             // deg/s, path over time
  bool degenerate = false;                              // zero duration or no motion
};

std::optional<MotionIndices> motion_indices(Trace trace, const MetricsOptions& opt = {});
std::optional<std::array<double, kGuidedCount>> angular_distance(Trace trace,
                                                                 const MetricsOptions& opt = {});
std::optional<std::array<double, kGuidedCount>> reaching_velocity(Trace trace,
                                                                  const MetricsOptions& opt = {});
std::optional<std::array<double, kGuidedCount>> path_speed(Trace trace,
                                                           const MetricsOptions& opt = {});

/// Minimum error per joint over the final window, in percent.
std::array<double, kGuidedCount> final_error(Trace trace, const MetricsOptions& opt = {});

/// Percentage of moving samples in which the commanded joint moved away from
/// its target. `joint` restricts the count to samples commanding that joint.
std::optional<double> confusion_index(Trace trace, const MetricsOptions& opt = {},
                                      std::optional<GuidedJoint> joint = std::nullopt);

/// 100 * (|tau_i| - |tau_f|) / |tau_i|; positive means the load effect dropped.
std::optional<double> decrement_ratio(double tau_init, double tau_final,
                                      double threshold = 1e-6);
std::array<std::optional<double>, kJointCount> decrement_ratio(const TorqueVector& tau_init,
                                                               const TorqueVector& tau_final,
                                                               double threshold = 1e-6);

/// Per-segment summary used by reports.
struct SegmentMetrics {
  int segment = 0;
  bool success = false;
  std::optional<double> reach_time;
  std::optional<MotionIndices> motion;
  std::array<double, kGuidedCount> final_error{};
  std::array<std::optional<double>, kGuidedCount> confusion{};
  std::optional<std::array<std::optional<double>, kJointCount>> decrement;
};

SegmentMetrics evaluate_segment(const TrialLog& log, const SegmentInfo& seg,
                                const MetricsOptions& opt = {});

}  // namespace ergoguide
