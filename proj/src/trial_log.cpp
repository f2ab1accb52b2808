#include "ergoguide/trial_log.hpp"

#include <fstream>
#include <sstream>

#include "ergoguide/device.hpp"
#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {

using nlohmann::json;

json angles_json(const Posture& q) { return json(q.angles); }

Posture angles_from(const json& j, double t) {
  const auto v = j.get<std::vector<double>>();
  return Posture::from_span(v, t);
}

}  // namespace

json record_to_json(const TickRecord& r) {
  json j;
  j["type"] = "tick";
  j["tick"] = r.tick;
  j["t"] = r.t;
  j["segment"] = r.segment;
  if (r.phase) j["phase"] = std::string(1, r.phase);
  j["q_c"] = angles_json(r.q_c);
  j["q_d"] = angles_json(r.q_d);
  j["eps"] = r.eps.value;
  j["joint"] = r.active_joint ? json(std::string(guided_name(*r.active_joint))) : json(nullptr);
  j["commands"] = json::array();
  for (const auto& c : r.commands) j["commands"].push_back(command_to_json(c));
  if (r.tau_overload) j["tau_overload"] = *r.tau_overload;
  return j;
}

TickRecord record_from_json(const json& j) {
  TickRecord r;
  r.tick = j.at("tick").get<std::uint64_t>();
  r.t = j.at("t").get<double>();
  r.segment = j.value("segment", 0);
  if (j.contains("phase")) {
    const auto p = j.at("phase").get<std::string>();
    r.phase = p.empty() ? 0 : p.front();
  }
  r.q_c = angles_from(j.at("q_c"), r.t);
  r.q_d = angles_from(j.at("q_d"), r.t);
  const auto eps = j.at("eps").get<std::vector<double>>();
  if (eps.size() != kGuidedCount) throw InputError("tick record needs 3 error values");
  std::copy(eps.begin(), eps.end(), r.eps.value.begin());
  if (!j.at("joint").is_null()) {
    const auto g = guided_from_name(j.at("joint").get<std::string>());
    if (!g) throw InputError("unknown guided joint in tick record");
    r.active_joint = g;
  }
  for (const auto& c : j.at("commands")) r.commands.push_back(command_from_json(c));
  if (j.contains("tau_overload")) {
    const auto tau = j.at("tau_overload").get<std::vector<double>>();
    if (tau.size() != kJointCount) throw InputError("tau_overload needs 5 values");
    TorqueVector tv{};
    std::copy(tau.begin(), tau.end(), tv.begin());
    r.tau_overload = tv;
  }
  return r;
}

void write_log(std::ostream& out, const TrialLog& log) {
  json header{{"type", "header"},
              {"schema_version", 1},
              {"protocol", log.protocol},
              {"joint_set", log.joint_set},
              {"modality", std::string(modality_name(log.modality))},
              {"condition", log.condition},
              {"agent", log.agent},
              {"seed", log.seed},
              {"subject", log.subject},
              {"guided", log.guided},
              {"max_error", log.records.empty() ? kDefaultMaxError
                                                : log.records.front().eps.max_error},
              {"extra", log.extra}};
  out << header.dump() << '\n';
  for (const auto& r : log.records) out << record_to_json(r).dump() << '\n';
  for (const auto& s : log.segments) {
    json js{{"type", "segment"},
            {"index", s.index},
            {"target", angles_json(s.target)},
            {"first", s.first},
            {"last", s.last},
            {"completed", s.completed},
            {"timed_out", s.timed_out}};
    out << js.dump() << '\n';
  }
  for (const auto& q : log.questionnaires) {
    json jq{{"type", "questionnaire"}};
    jq["seq"] = q.seq ? json(*q.seq) : json(nullptr);
    jq["sus"] = q.sus ? json(*q.sus) : json(nullptr);
    jq["sus_score"] = q.sus_score ? json(*q.sus_score) : json(nullptr);
    out << jq.dump() << '\n';
  }
  json end{{"type", "end"}, {"status", log.status}, {"completion_time", log.completion_time}};
  out << end.dump() << '\n';
}

void write_log_file(const std::string& path, const TrialLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write log '" + path + "'");
  write_log(out, log);
}

TrialLog read_log(std::istream& in) {
  TrialLog log;
  GuidedAngles max_error = kDefaultMaxError;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.value("schema_version", 0) != 1) throw InputError("unsupported log schema_version");
        log.protocol = j.at("protocol").get<std::string>();
        log.joint_set = j.value("joint_set", "");
        const auto m = modality_from_name(j.at("modality").get<std::string>());
        if (!m) throw InputError("unknown modality in log header");
        log.modality = *m;
        log.condition = j.value("condition", "");
        log.agent = j.value("agent", "");
        log.seed = j.value("seed", std::uint64_t{0});
        log.subject = j.value("subject", 0);
        log.guided = j.at("guided").get<std::array<bool, kGuidedCount>>();
        max_error = j.at("max_error").get<GuidedAngles>();
        log.extra = j.value("extra", json::object());
      } else if (type == "tick") {
        TickRecord r = record_from_json(j);
        r.eps.max_error = max_error;
        log.records.push_back(std::move(r));
      } else if (type == "segment") {
        SegmentInfo s;
        s.index = j.at("index").get<int>();
        s.target = angles_from(j.at("target"), 0.0);
        s.first = j.at("first").get<std::size_t>();
        s.last = j.at("last").get<std::size_t>();
        s.completed = j.at("completed").get<bool>();
        s.timed_out = j.at("timed_out").get<bool>();
        log.segments.push_back(s);
      } else if (type == "questionnaire") {
        Questionnaire q;
        if (!j.at("seq").is_null()) q.seq = j.at("seq").get<int>();
        if (!j.at("sus").is_null()) q.sus = j.at("sus").get<std::array<int, 10>>();
        if (!j.at("sus_score").is_null()) q.sus_score = j.at("sus_score").get<double>();
        log.questionnaires.push_back(q);
      } else if (type == "end") {
        log.status = j.at("status").get<std::string>();
        log.completion_time = j.at("completion_time").get<double>();
      }
    } catch (const json::exception& e) {
      std::ostringstream msg;
      msg << "log line " << lineno << ": " << e.what();
      throw InputError(msg.str());
    }
  }
  return log;
}

TrialLog read_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open log '" + path + "'");
  return read_log(in);
}

}  // namespace ergoguide
