#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoguide/feedback.hpp"
#include "ergoguide/loading.hpp"

namespace ergoguide {

struct TickRecord {
  std::uint64_t tick = 0;
  double t = 0.0;  // s
  int segment = 0;
  char phase = 0;  // 'A', 'B', 'C' in ergonomic trials, 0 otherwise
  Posture q_c;
  Posture q_d;
  ErrorVector eps;
  std::optional<GuidedJoint> active_joint;
  std::vector<DeviceCommand> commands;
  std::optional<TorqueVector> tau_overload;
};

struct SegmentInfo {
  int index = 0;
  Posture target;
  std::size_t first = 0;  // record range [first, last)
  std::size_t last = 0;
  bool completed = false;
  bool timed_out = false;
};

struct Questionnaire {
  std::optional<int> seq;
  std::optional<std::array<int, 10>> sus;
  std::optional<double> sus_score;
};

struct TrialLog {
  std::string protocol;   // modality_test | ergonomic_test
  std::string joint_set;  // torso | arm | all
  Modality modality = Modality::Spot;
  std::string condition;  // free label, e.g. "condition_2"
  std::string agent;
  std::uint64_t seed = 0;
  int subject = 0;
  std::array<bool, kGuidedCount> guided{true, true, true};
  nlohmann::json extra = nlohmann::json::object();

  std::vector<TickRecord> records;
  std::vector<SegmentInfo> segments;
  std::vector<Questionnaire> questionnaires;
  std::string status = "completed";  // completed | aborted
  double completion_time = 0.0;
};

nlohmann::json record_to_json(const TickRecord& r);
TickRecord record_from_json(const nlohmann::json& j);

/// Line-delimited JSON: header, one tick record per line, segment and
/// questionnaire records, end record.
void write_log(std::ostream& out, const TrialLog& log);
void write_log_file(const std::string& path, const TrialLog& log);
TrialLog read_log(std::istream& in);
TrialLog read_log_file(const std::string& path);

}  // namespace ergoguide
