#include <doctest.h>

#include <random>

#include "ergoguide/errors.hpp"
#include "ergoguide/harness.hpp"
#include "ergoguide/wearer.hpp"

using namespace ergoguide;

TEST_CASE("agent presets") {
  CHECK(agent_preset("ideal").comprehension[0] == 1.0);
  CHECK(agent_preset("noisy").reaction_delay > 0.0);
  CHECK(agent_preset("sluggish").max_joint_speed < agent_preset("ideal").max_joint_speed);
  CHECK_THROWS_AS(agent_preset("robot"), ConfigError);
  AgentParams p;
  p.comprehension[1] = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = AgentParams{};
  p.max_joint_speed = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("decoding cues") {
  std::mt19937_64 rng(1);
  const auto spot = PlacementRegistry::standard(Modality::Spot);
  const auto chest = encode_spot(spot, GuidedJoint::Torso, Direction::Forward, Level::L2);
  AgentParams ideal;

  SUBCASE("ideal agent moves away from the chest unit") {
    const Decision d = agent_decide(ideal, chest, Modality::Spot, spot, rng);
    CHECK(d.direction[0] == -1);
    CHECK(d.direction[1] == 0);
  }
  SUBCASE("comprehension 0 always inverts") {
    AgentParams p;
    p.comprehension = {0, 0, 0};
    for (int i = 0; i < 20; ++i) CHECK(agent_decide(p, chest, Modality::Spot, spot, rng).direction[0] == +1);
  }
  SUBCASE("cues below the perception threshold are not felt") {
    AgentParams p;
    p.perception_threshold = 0.9;
    CHECK(agent_decide(p, chest, Modality::Spot, spot, rng).empty());
    CHECK(agent_decide(ideal, {}, Modality::Spot, spot, rng).empty());
  }
  SUBCASE("RAMP and PATTERN decode to the encoded direction") {
    const auto ramp = PlacementRegistry::standard(Modality::Ramp);
    const auto pat = PlacementRegistry::standard(Modality::Pattern);
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
      for (GuidedJoint g : kGuidedJoints) {
        const auto r = encode_ramp(ramp, g, dir, Level::L3, 0);
        CHECK(agent_decide(ideal, r, Modality::Ramp, ramp, rng).direction[index(g)] == motion_sign(dir));
        const auto p = encode_pattern(pat, g, dir, Level::L1);
        CHECK(agent_decide(ideal, p, Modality::Pattern, pat, rng).direction[index(g)] == motion_sign(dir));
      }
    }
  }
}

TEST_CASE("agent step kinematics") {
  const HumanModel m = HumanModel::standard();
  AgentParams p;
  p.max_joint_speed = 10.0;
  p.speed_gain = 100.0;
  Posture q;
  q[Joint::Hip] = 20.0;
  const ErrorVector eps = error_magnitude(guided_angles(q), {60, 0, 0});
  SUBCASE("no decision, no motion") {
    CHECK(agent_step(p, Decision{}, q, eps, m, 0.1) == q);
  }
  SUBCASE("capped Euler step") {
    Decision d;
    d.direction[0] = +1;
    CHECK(agent_step(p, d, q, eps, m, 0.1)[Joint::Hip] == doctest::Approx(21.0));
  }
  SUBCASE("clamped at the joint limit") {
    Decision d;
    d.direction[0] = +1;
    q[Joint::Hip] = 89.5;
    CHECK(agent_step(p, d, q, eps, m, 0.1)[Joint::Hip] == 90.0);
  }
}

TEST_CASE("wearer agent timing") {
  const HumanModel m = HumanModel::standard();
  const auto reg = PlacementRegistry::standard(Modality::Spot);
  AgentParams p;
  p.reaction_delay = 0.3;
  WearerAgent agent(p, reg, 5);
  agent.reset(0.0);
  Posture q;
  const ErrorVector eps = error_magnitude(guided_angles(q), {40, 0, 0});
  agent.perceive(0.0, encode_spot(reg, GuidedJoint::Torso, Direction::Backward, Level::L3));
  CHECK(agent.advance(0.1, 0.01, q, eps, m) == q);  // still reacting
  CHECK(agent.advance(0.31, 0.01, q, eps, m)[Joint::Hip] > 0.0);
  CHECK_FALSE(agent.announces_completion(1.0));
  CHECK(agent.announces_completion(2.6));
  // Dwell keeps the motion going between cues, then it stops.
  CHECK(agent.advance(1.5, 0.01, q, eps, m)[Joint::Hip] > 0.0);
  CHECK(agent.advance(2.5, 0.01, q, eps, m) == q);
}

TEST_CASE("ideal agent reaches random targets within the travel-time bound") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    SessionConfig c;
    c.modality = static_cast<Modality>(trial % 3);
    c.seed = static_cast<std::uint64_t>(trial);
    const bool arm = trial % 2 == 1;
    c.joint_set = arm ? "arm" : "torso";
    GuidedTarget t;
    double travel = 0.0;
    if (arm) {
      const double s = std::uniform_real_distribution<double>(-170, 20)(rng);
      const double e = std::uniform_real_distribution<double>(-140, -5)(rng);
      t[1] = s;
      t[2] = e;
      travel = std::abs(s) + std::abs(e);
    } else {
      const double v = std::uniform_real_distribution<double>(-14, 85)(rng);
      t[0] = v;
      travel = std::abs(v);
    }
    const TrialLog log = run_modality_trial(c, {t});
    REQUIRE(log.segments.size() == 1);
    CHECK(log.segments[0].completed);
    double reached = -1.0;
    for (const auto& r : log.records) {
      if (r.eps.all_below(0.05)) {
        reached = r.t;
        break;
      }
    }
    CHECK(reached >= 0.0);
    CHECK(reached <= travel / AgentParams{}.max_joint_speed + 5.0);
  }
}
