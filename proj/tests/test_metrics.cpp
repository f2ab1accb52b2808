#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoguide/errors.hpp"
#include "ergoguide/metrics.hpp"

using namespace ergoguide;

namespace {

// Torso-only trace sampled at 10 Hz toward a fixed target.
std::vector<TickRecord> torso_trace(const std::vector<double>& angles, double target,
                                    double dead_band = 0.05) {
  std::vector<TickRecord> out;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    TickRecord r;
    r.tick = k;
    r.t = static_cast<double>(k) / 10.0;
    r.q_c[Joint::Hip] = angles[k];
    r.q_d[Joint::Hip] = target;
    r.eps = error_magnitude(guided_angles(r.q_c), guided_angles(r.q_d));
    r.active_joint = select_target_joint(r.eps, dead_band);
    out.push_back(r);
  }
  return out;
}

MetricsOptions torso_only(double dead_band = 0.05) {
  MetricsOptions o;
  o.guided = {true, false, false};
  o.dead_band = dead_band;
  return o;
}

}  // namespace

TEST_CASE("success over the final window") {
  SUBCASE("settled log") {
    std::vector<double> q(50, 30.0);
    CHECK(success(torso_trace(q, 30.0), torso_only()));
  }
  SUBCASE("never inside the dead-band") {
    std::vector<double> q(50, 0.0);
    CHECK_FALSE(success(torso_trace(q, 30.0), torso_only()));
  }
  SUBCASE("a single 4 percent dip inside the window counts") {
    std::vector<double> q(50, 30.0 - 0.08 * 90);
    q[45] = 30.0 - 0.04 * 90;
    CHECK(success(torso_trace(q, 30.0), torso_only()));
    q[45] = q[0];
    q[20] = 30.0 - 0.04 * 90;  // outside the final 2 s
    CHECK_FALSE(success(torso_trace(q, 30.0), torso_only()));
  }
  SUBCASE("short logs cannot be evaluated") {
    std::vector<double> q(15, 30.0);
    CHECK_THROWS_AS(success(torso_trace(q, 30.0), torso_only()), EvaluationError);
  }
}

TEST_CASE("reaching time") {
  SUBCASE("constant velocity with the crossing at 12.7 s") {
    std::vector<double> q;
    const double v = 25.55 / 12.7;
    for (int k = 0; k <= 200; ++k) q.push_back(std::min(30.0, v * k / 10.0));
    const auto tr = torso_trace(q, 30.0);
    REQUIRE(!tr[126].eps.all_below(0.05));
    const auto dt = reaching_time(tr, torso_only());
    REQUIRE(dt);
    CHECK(std::abs(*dt - 12.7) < 1e-9);
  }
  SUBCASE("already at the target") {
    std::vector<double> q(30, 30.0);
    CHECK(*reaching_time(torso_trace(q, 30.0), torso_only()) == 0.0);
  }
  SUBCASE("failure is absent") {
    std::vector<double> q(30, 0.0);
    CHECK_FALSE(reaching_time(torso_trace(q, 30.0), torso_only()).has_value());
  }
}

TEST_CASE("angular distance, velocity and speed") {
  SUBCASE("monotone 30 deg in 10 s") {
    std::vector<double> q;
    for (int k = 0; k <= 100; ++k) q.push_back(0.3 * k);
    for (int k = 0; k < 30; ++k) q.push_back(30.0);
    const auto m = motion_indices(torso_trace(q, 30.0, 0.001), torso_only(0.001));
    REQUIRE(m);
    CHECK(std::abs(m->angular_distance[0] - 30.0) < 1e-9);
    CHECK(std::abs(m->velocity[0] - 3.0) < 1e-9);
    CHECK(std::abs(m->speed[0] - 3.0) < 1e-9);
  }
  SUBCASE("overshoot to 40 then back to 30") {
    std::vector<double> q;
    for (int k = 0; k <= 80; ++k) q.push_back(0.5 * k);
    for (int k = 81; k <= 100; ++k) q.push_back(40.0 - 0.5 * (k - 80));
    for (int k = 0; k < 30; ++k) q.push_back(30.0);
    const auto m = motion_indices(torso_trace(q, 30.0, 0.001), torso_only(0.001));
    REQUIRE(m);
    CHECK(std::abs(m->angular_distance[0] - 50.0) < 1e-9);
    CHECK(std::abs(m->velocity[0] - 3.0) < 1e-9);
    CHECK(std::abs(m->speed[0] - 5.0) < 1e-9);
    CHECK_FALSE(m->degenerate);
  }
  SUBCASE("no motion is flagged degenerate") {
    std::vector<double> q(40, 30.0);
    const auto m = motion_indices(torso_trace(q, 30.0), torso_only());
    REQUIRE(m);
    CHECK(m->degenerate);
    CHECK(m->angular_distance[0] == 0.0);
    CHECK(m->velocity[0] == 0.0);
  }
}

TEST_CASE("path is never shorter than the chord") {
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> q{std::uniform_real_distribution<double>(-10, 80)(rng)};
    const double target = std::uniform_real_distribution<double>(-10, 80)(rng);
    for (int k = 1; k < 150; ++k) {
      const double pull = 0.15 * (target - q.back());
      q.push_back(q.back() + pull + std::normal_distribution<double>(0.0, 1.0)(rng));
    }
    for (int k = 0; k < 25; ++k) q.push_back(target);
    const auto m = motion_indices(torso_trace(q, target), torso_only());
    REQUIRE(m);
    const auto s = *arrival_index(torso_trace(q, target), torso_only());
    CHECK(m->angular_distance[0] + 1e-12 >= std::abs(q[s] - q[0]));
    if (!m->degenerate) CHECK(m->speed[0] + 1e-12 >= m->velocity[0]);
    ++checked;
  }
  CHECK(checked == 300);
}

TEST_CASE("success is monotone in the dead-band") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q;
    for (int k = 0; k < 40; ++k) q.push_back(std::uniform_real_distribution<double>(20, 40)(rng));
    const auto tr = torso_trace(q, 30.0);
    if (success(tr, torso_only(0.05))) CHECK(success(tr, torso_only(0.06)));
  }
}

TEST_CASE("final error") {
  std::vector<double> q(40, 30.0 - 0.08 * 90);
  CHECK(final_error(torso_trace(q, 30.0), torso_only())[0] == doctest::Approx(8.0).epsilon(1e-12));
  for (std::size_t k = 25; k < 40; ++k) q[k] = 30.0 - (0.05 + 0.001 * k) * 90;
  q[33] = 30.0 + 0.042 * 90;
  CHECK(final_error(torso_trace(q, 30.0), torso_only())[0] == doctest::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("confusion index") {
  SUBCASE("30 wrong-direction moving ticks out of 100") {
    std::vector<double> q{0.0};
    for (int k = 0; k < 70; ++k) q.push_back(q.back() + 1.0);
    for (int k = 0; k < 30; ++k) q.push_back(q.back() - 0.5);
    for (int k = 0; k < 20; ++k) q.push_back(q.back() + 0.01);  // 0.1 deg/s: not moving
    const auto c = confusion_index(torso_trace(q, 80.0), torso_only());
    REQUIRE(c);
    CHECK(std::abs(*c - 30.0) < 1e-9);
    CHECK(confusion_index(torso_trace(q, 80.0), torso_only(), GuidedJoint::Torso) == c);
    CHECK_FALSE(confusion_index(torso_trace(q, 80.0), torso_only(), GuidedJoint::Elbow));
  }
  SUBCASE("stationary log") {
    std::vector<double> q(30, 0.0);
    CHECK_FALSE(confusion_index(torso_trace(q, 60.0), torso_only()).has_value());
  }
  SUBCASE("always toward the target") {
    std::vector<double> q;
    for (int k = 0; k < 50; ++k) q.push_back(k);
    CHECK(*confusion_index(torso_trace(q, 60.0), torso_only()) == 0.0);
  }
}

TEST_CASE("decrement ratio") {
  CHECK(*decrement_ratio(20.0, 10.0) == 50.0);
  CHECK(std::abs(*decrement_ratio(10.0, 13.678) - (-36.78)) < 1e-9);
  CHECK(*decrement_ratio(-7.0, -7.0) == 0.0);
  CHECK_FALSE(decrement_ratio(1e-9, 5.0).has_value());
  const TorqueVector a{3, -4, 5, 0, 2}, b{1, -2, 6, 1, 2};
  const auto d = decrement_ratio(a, b);
  const auto scaled = decrement_ratio(TorqueVector{0.3, -0.4, 0.5, 0, 0.2},
                                      TorqueVector{0.1, -0.2, 0.6, 0.1, 0.2});
  for (std::size_t k = 0; k < kJointCount; ++k) {
    CHECK(d[k].has_value() == scaled[k].has_value());
    if (d[k]) CHECK(*d[k] == doctest::Approx(*scaled[k]).epsilon(1e-12));
  }
  CHECK_FALSE(d[3].has_value());
}

TEST_CASE("segment evaluation") {
  TrialLog log;
  log.guided = {true, false, false};
  std::vector<double> q;
  for (int k = 0; k <= 40; ++k) q.push_back(std::min(30.0, 1.0 * k));
  for (int k = 0; k < 30; ++k) q.push_back(30.0);
  log.records = torso_trace(q, 30.0);
  for (auto& r : log.records) r.tau_overload = TorqueVector{10, 10, 10, 10, 10};
  log.records.back().tau_overload = TorqueVector{5, 5, 5, 5, 12};
  log.segments.push_back({0, log.records.front().q_d, 0, log.records.size(), true, false});
  const SegmentMetrics m = evaluate_segment(log, log.segments[0]);
  CHECK(m.success);
  CHECK(*m.reach_time == doctest::Approx(2.6));
  CHECK(*m.confusion[0] == 0.0);
  CHECK_FALSE(m.confusion[1].has_value());
  REQUIRE(m.decrement);
  CHECK(*(*m.decrement)[0] == 50.0);
  CHECK(*(*m.decrement)[4] == doctest::Approx(-20.0));
  SegmentInfo bad{0, {}, 5, 500, false, false};
  CHECK_THROWS_AS(evaluate_segment(log, bad), EvaluationError);
}
