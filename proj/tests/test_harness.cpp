#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "ergoguide/errors.hpp"
#include "ergoguide/harness.hpp"
#include "ergoguide/loading.hpp"
#include "ergoguide/metrics.hpp"
#include "ergoguide/report.hpp"

using namespace ergoguide;

namespace {

SessionConfig config_for(Modality m, const std::string& joint_set, std::uint64_t seed = 7) {
  SessionConfig c;
  c.modality = m;
  c.joint_set = joint_set;
  c.seed = seed;
  c.agent = "ideal";
  return c;
}

std::string dump(const TrialLog& log) {
  std::ostringstream out;
  write_log(out, log);
  return out.str();
}

std::size_t command_count(const TrialLog& log) {
  std::size_t n = 0;
  for (const auto& r : log.records) n += r.commands.size();
  return n;
}

}  // namespace

TEST_CASE("ideal wearer reaches every target with every modality") {
  for (Modality m : {Modality::Spot, Modality::Ramp, Modality::Pattern}) {
    for (const std::string set : {"torso", "arm"}) {
      CAPTURE(modality_name(m));
      CAPTURE(set);
      const SessionConfig c = config_for(m, set);
      const TrialLog log = run_modality_trial(c, target_sequence(c.protocol, set));
      CHECK(log.status == "completed");
      REQUIRE(log.segments.size() == 3);
      for (const auto& seg : log.segments) {
        CHECK(seg.completed);
        CHECK_FALSE(seg.timed_out);
        const SegmentMetrics sm = evaluate_segment(log, seg);
        CHECK(sm.success);
        for (GuidedJoint g : kGuidedJoints) {
          if (log.guided[index(g)]) CHECK(*sm.confusion[index(g)] == 0.0);
        }
      }
      const TrialIndices idx = trial_indices(log);
      CHECK(*idx.at("success") == 100.0);
      CHECK_FALSE(replay_mismatch(log).has_value());
    }
  }
}

TEST_CASE("wearer who always misreads the cue times out") {
  SessionConfig c = config_for(Modality::Spot, "torso");
  AgentParams a = agent_preset("ideal");
  a.comprehension = {0.0, 0.0, 0.0};
  c.agent_params = a;
  c.protocol.timeout = 8.0;
  const TrialLog log = run_modality_trial(c, target_sequence(c.protocol, "torso"));
  REQUIRE_FALSE(log.segments.empty());
  bool any_timeout = false;
  for (const auto& seg : log.segments) {
    any_timeout = any_timeout || seg.timed_out;
    const SegmentMetrics sm = evaluate_segment(log, seg);
    CHECK_FALSE(sm.success);
    if (sm.confusion[0]) CHECK(*sm.confusion[0] > 50.0);
  }
  CHECK(any_timeout);
}

TEST_CASE("starting inside the dead-band gives a zero reaching time") {
  SessionConfig c = config_for(Modality::Ramp, "torso");
  c.protocol.torso_targets = {0.0, 0.0, 0.0};
  const TrialLog log = run_modality_trial(c, target_sequence(c.protocol, "torso"));
  for (const auto& seg : log.segments) {
    const SegmentMetrics sm = evaluate_segment(log, seg);
    CHECK(sm.success);
    CHECK(*sm.reach_time == doctest::Approx(0.0));
  }
  CHECK(command_count(log) == 0);
}

TEST_CASE("logs are a pure function of the seed") {
  SessionConfig c = config_for(Modality::Pattern, "arm", 11);
  c.agent = "noisy";
  const auto seq = target_sequence(c.protocol, "arm");
  const std::string a = dump(run_modality_trial(c, seq));
  const std::string b = dump(run_modality_trial(c, seq));
  CHECK(a == b);
  c.seed = 12;
  CHECK(dump(run_modality_trial(c, seq)) != a);
}

TEST_CASE("log write and read round trip") {
  SessionConfig c = config_for(Modality::Spot, "arm");
  const TrialLog log = run_modality_trial(c, target_sequence(c.protocol, "arm"));
  std::istringstream in(dump(log));
  const TrialLog back = read_log(in);
  CHECK(dump(back) == dump(log));
  CHECK(back.records.size() == log.records.size());
  CHECK(trial_summary(back) == trial_summary(log));
  CHECK_FALSE(replay_mismatch(back).has_value());

  SUBCASE("tampered commands are detected by replay") {
    TrialLog bad = back;
    auto it = std::find_if(bad.records.begin(), bad.records.end(),
                           [](const TickRecord& r) { return !r.commands.empty(); });
    REQUIRE(it != bad.records.end());
    it->commands.clear();
    CHECK(replay_mismatch(bad) == static_cast<std::size_t>(it - bad.records.begin()));
  }
  SUBCASE("malformed lines name their line number") {
    std::istringstream broken(dump(log) + "{not json\n");
    CHECK_THROWS_AS(read_log(broken), InputError);
  }
}

TEST_CASE("ergonomic trial") {
  SessionConfig c = config_for(Modality::Spot, "all");
  c.protocol.kind = ProtocolKind::ErgonomicTest;

  SUBCASE("condition 2 lowers the load effect") {
    const TrialLog log = run_ergonomic_trial(c, 2);
    CHECK(log.status == "completed");
    CHECK(log.condition == "condition_2");
    REQUIRE(log.segments.size() == 1);
    const TrialIndices idx = trial_indices(log);
    for (const char* j : {"ankle", "knee", "hip", "shoulder"}) {
      CAPTURE(j);
      REQUIRE(idx.at(std::string("decrement.") + j).has_value());
      CHECK(*idx.at(std::string("decrement.") + j) > 0.0);
    }
    CHECK_FALSE(replay_mismatch(log).has_value());
    std::set<char> phases;
    for (const auto& r : log.records) phases.insert(r.phase);
    CHECK(phases == std::set<char>{'A', 'B', 'C'});
  }
  SUBCASE("farther objects start from a heavier posture") {
    const ErgonomicPlan p1 = plan_ergonomic(c, 1);
    const ErgonomicPlan p3 = plan_ergonomic(c, 3);
    CHECK(p3.result.objective_init > p1.result.objective_init);
    CHECK(p1.result.objective_final < p1.result.objective_init);
    CHECK(p3.result.objective_final < p3.result.objective_init);
  }
  SUBCASE("without a load nothing needs to change") {
    c.protocol.load_mass = 0.0;
    const ErgonomicPlan p = plan_ergonomic(c, 2);
    CHECK(p.result.q_d.angles == p.q_init.angles);
    const TrialLog log = run_ergonomic_trial(c, 2);
    CHECK(command_count(log) == 0);
  }
  SUBCASE("unreachable task reports an aborted trial") {
    c.protocol.distances = {0.2, 3.0, 0.8};
    const TrialLog log = run_ergonomic_trial(c, 2);
    CHECK(log.status == "aborted");
    CHECK(log.extra.contains("error"));
  }
}

TEST_CASE("subject ordering") {
  for (int s = 0; s < 20; ++s) {
    const auto a = subject_order(5, s, 3);
    CHECK(a == subject_order(5, s, 3));
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2});
  }
  std::set<std::vector<int>> seen;
  for (int s = 0; s < 60; ++s) seen.insert(subject_order(5, s, 3));
  CHECK(seen.size() == 6);
}

TEST_CASE("agent jitter stays valid and deterministic") {
  const AgentParams base = agent_preset("noisy");
  for (int s = 0; s < 30; ++s) {
    const AgentParams a = jitter_agent(base, 3, s, 0.1);
    CHECK_NOTHROW(a.validate());
    const AgentParams b = jitter_agent(base, 3, s, 0.1);
    CHECK(a.reaction_delay == b.reaction_delay);
    CHECK(a.max_joint_speed == b.max_joint_speed);
  }
  const AgentParams same = jitter_agent(base, 3, 4, 0.0);
  CHECK(same.max_joint_speed == base.max_joint_speed);
  CHECK(same.comprehension == base.comprehension);
}

TEST_CASE("campaign and reports") {
  SessionConfig base = config_for(Modality::Spot, "torso", 3);
  CampaignOptions opt;
  opt.joint_sets = {"torso"};

  SUBCASE("zero subjects is rejected") {
    opt.subjects = 0;
    CHECK_THROWS_AS(run_campaign(base, opt), ConfigError);
  }
  SUBCASE("one subject leaves the spread empty") {
    opt.subjects = 1;
    const auto logs = run_campaign(base, opt);
    REQUIRE(logs.size() == 3);
    const auto reports = build_reports(logs);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].first == "table_modality_torso.csv");
    const Table& t = reports[0].second;
    REQUIRE(t.header.size() == 1 + 3 * 3 + 2);
    CHECK(t.header[1] == "spot_mean");
    const auto& success_row = t.rows.front();
    CHECK(success_row[0] == "success");
    CHECK(success_row[1] == "100");
    CHECK(success_row[2].empty());
    CHECK(success_row[3] == "1");
    CHECK(success_row[10].empty());
    CHECK(success_row[11].empty());
  }
  SUBCASE("two subjects give an F statistic and identical reruns") {
    opt.subjects = 2;
    base.agent = "noisy";
    const auto logs = run_campaign(base, opt);
    REQUIRE(logs.size() == 6);
    const auto again = run_campaign(base, opt);
    for (std::size_t i = 0; i < logs.size(); ++i) CHECK(dump(logs[i]) == dump(again[i]));
    const Table t = build_reports(logs)[0].second;
    const auto row = std::find_if(t.rows.begin(), t.rows.end(),
                                  [](const auto& r) { return r[0] == "reach_time"; });
    REQUIRE(row != t.rows.end());
    CHECK_FALSE((*row)[10].empty());
    CHECK_FALSE((*row)[11].empty());
    const std::string csv = t.to_csv();
    CHECK(csv.rfind("index,spot_mean", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(t.rows.size() + 1));
  }
}

TEST_CASE("session configuration") {
  SessionConfig c;
  c.seed = 99;
  c.modality = Modality::Pattern;
  c.joint_set = "arm";
  c.protocol.timeout = 30.0;
  const SessionConfig back = session_config_from_json(session_config_to_json(c));
  CHECK(session_config_to_json(back) == session_config_to_json(c));

  SUBCASE("tick rate must divide the sensor rate") {
    nlohmann::json j = session_config_to_json(c);
    j["tick_hz"] = 7;
    CHECK_THROWS_AS(session_config_from_json(j).validate(), ConfigError);
  }
  SUBCASE("unknown agent") {
    c.agent = "telepathic";
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("targets outside the joint limits") {
    c.protocol.torso_targets = {-10.0, 30.0, 120.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("example configuration file") {
    const SessionConfig f = load_session_config(ERGOGUIDE_SOURCE_DIR "/config/session.json");
    CHECK_NOTHROW(f.validate());
  }
}
