#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoguide/body_model.hpp"
#include "ergoguide/errors.hpp"

using namespace ergoguide;

namespace {

Posture random_posture(const HumanModel& m, std::mt19937_64& rng) {
  Posture q;
  for (Joint j : kAllJoints) {
    q[j] = std::uniform_real_distribution<double>(m.limit(j).min_deg, m.limit(j).max_deg)(rng);
  }
  return q;
}

// Independent chain walk: accumulate absolute angles and sum m_i * r_i.
Vec2 brute_force_com(const HumanModel& m, const Posture& q) {
  const double d = M_PI / 180.0;
  const double phi[5] = {
      q[Joint::Ankle] * d,
      (q[Joint::Ankle] - q[Joint::Knee]) * d,
      (q[Joint::Ankle] - q[Joint::Knee] + q[Joint::Hip]) * d,
      (q[Joint::Ankle] - q[Joint::Knee] + q[Joint::Hip] + 180.0 + q[Joint::Shoulder]) * d,
      (q[Joint::Ankle] - q[Joint::Knee] + q[Joint::Hip] + 180.0 + q[Joint::Shoulder] +
       q[Joint::Elbow]) * d};
  double x = m.base_x(), z = m.foot().ankle_height, mx = 0, mz = 0, mt = 0;
  for (int i = 0; i < 5; ++i) {
    const Segment& s = m.segments()[i];
    mx += s.mass * (x + s.com_ratio * s.length * std::sin(phi[i]));
    mz += s.mass * (z + s.com_ratio * s.length * std::cos(phi[i]));
    mt += s.mass;
    x += s.length * std::sin(phi[i]);
    z += s.length * std::cos(phi[i]);
  }
  return {mx / mt, mz / mt};
}

}  // namespace

TEST_CASE("standard model anthropometry") {
  const HumanModel m = HumanModel::standard(70.0, 1.75);
  CHECK(m.total_mass() == doctest::Approx(70.0 * (0.093 + 0.2 + 0.578 + 0.056 + 0.044)));
  CHECK(m.segment(Joint::Hip).length == doctest::Approx(0.504));
  CHECK(m.limit(Joint::Knee).min_deg == 0.0);
  CHECK(m.limit(Joint::Elbow).min_deg == -145.0);
  CHECK_THROWS_AS(HumanModel::standard(-1.0, 1.75), ModelError);
}

TEST_CASE("forward kinematics frozen values") {
  const HumanModel m = HumanModel::standard();
  SUBCASE("upright, arm hanging") {
    const KeyPoints k = forward_kinematics(m, Posture{});
    CHECK(k.hand.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(k.hand.z == doctest::Approx(0.756).epsilon(1e-12));
    CHECK(k.joints[index(Joint::Hip)].z == doctest::Approx(0.9275));
    CHECK(k.object_height == k.hand.z);
  }
  SUBCASE("torso flexed 90 deg carries the arm with it") {
    Posture q;
    q[Joint::Hip] = 90.0;
    const KeyPoints k = forward_kinematics(m, q);
    CHECK(k.joints[index(Joint::Shoulder)].x == doctest::Approx(0.504));
    CHECK(k.joints[index(Joint::Shoulder)].z == doctest::Approx(0.9275));
    CHECK(k.hand.x == doctest::Approx(0.504 - 0.3255 - 0.35));
    CHECK(k.hand.z == doctest::Approx(0.9275));
  }
  SUBCASE("forward arm raise moves the hand forward") {
    Posture q;
    q[Joint::Shoulder] = -90.0;
    const KeyPoints k = forward_kinematics(m, q);
    CHECK(k.hand.x == doctest::Approx(0.6755));
  }
}

TEST_CASE("whole-body CoM matches a brute-force chain sum") {
  const HumanModel m = HumanModel::standard(82.0, 1.81);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Posture q = random_posture(m, rng);
    const Vec2 a = whole_body_com(m, q);
    const Vec2 b = brute_force_com(m, q);
    CHECK(std::abs(a.x - b.x) < 1e-12);
    CHECK(std::abs(a.z - b.z) < 1e-12);
  }
}

TEST_CASE("translation equivariance of kinematics and CoM") {
  const HumanModel m = HumanModel::standard();
  const HumanModel t = m.translated(0.37);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Posture q = random_posture(m, rng);
    CHECK(forward_kinematics(t, q).hand.x == doctest::Approx(forward_kinematics(m, q).hand.x + 0.37));
    CHECK(whole_body_com(t, q).x == doctest::Approx(whole_body_com(m, q).x + 0.37));
    CHECK(whole_body_com(t, q).z == doctest::Approx(whole_body_com(m, q).z));
  }
  CHECK(support_polygon(t).x_min == doctest::Approx(support_polygon(m).x_min + 0.37));
}

TEST_CASE("SESC calibration") {
  const HumanModel m = HumanModel::standard();
  std::mt19937_64 rng(11);
  std::vector<ComSample> train;
  for (int i = 0; i < 40; ++i) {
    const Posture q = random_posture(m, rng);
    train.push_back({q, whole_body_com(m, q)});
  }

  SUBCASE("exact on held-out postures") {
    const SescParams p = sesc_calibrate(train);
    CHECK(p.fit_residual_rms < 1e-12);
    for (int i = 0; i < 10; ++i) {
      const Posture q = random_posture(m, rng);
      const Vec2 a = sesc_com(p, q), b = whole_body_com(m, q);
      CHECK(std::hypot(a.x - b.x, a.z - b.z) < 1e-9);
    }
  }
  SUBCASE("1 mm sensor noise stays under 3 mm RMS") {
    std::normal_distribution<double> noise(0.0, 0.001);
    std::vector<ComSample> noisy = train;
    for (auto& s : noisy) {
      s.com.x += noise(rng);
      s.com.z += noise(rng);
    }
    const SescParams p = sesc_calibrate(noisy);
    double sq = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      const Posture q = random_posture(m, rng);
      const Vec2 a = sesc_com(p, q), b = whole_body_com(m, q);
      sq += (a.x - b.x) * (a.x - b.x) + (a.z - b.z) * (a.z - b.z);
    }
    CHECK(std::sqrt(sq / n) < 0.003);
  }
  SUBCASE("a single repeated posture is rank deficient") {
    std::vector<ComSample> same(20, train.front());
    try {
      sesc_calibrate(same);
      FAIL("expected CalibrationError");
    } catch (const CalibrationError& e) {
      CHECK(!e.deficient_directions().empty());
    }
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(sesc_calibrate(std::span(train).first(3)), CalibrationError);
  }
}

TEST_CASE("support polygon") {
  const HumanModel m = HumanModel::standard();
  const SupportPolygon p = support_polygon(m);
  CHECK(p.x_min == doctest::Approx(-0.05));
  CHECK(p.x_max == doctest::Approx(0.20));
  CHECK(p.contains(0.0));
  CHECK(p.signed_excess(0.25) == doctest::Approx(0.05));
  CHECK(p.signed_excess(-0.10) == doctest::Approx(0.05));
  CHECK(p.signed_excess(0.0) <= 0.0);
  FootGeometry bad;
  bad.heel_offset = 0.3;
  const HumanModel broken(m.segments(), m.limits(), bad);
  CHECK_THROWS_AS(support_polygon(broken), ModelError);
}

TEST_CASE("posture and model validation") {
  const std::vector<double> four{1, 2, 3, 4};
  CHECK_THROWS_AS(Posture::from_span(four), InputError);
  const HumanModel m = HumanModel::standard();
  auto segs = m.segments();
  segs[0].mass = -1.0;
  CHECK_THROWS_AS(HumanModel(segs, m.limits(), m.foot()), ModelError);
  Posture q;
  q[Joint::Knee] = 200.0;
  CHECK_FALSE(m.within_limits(q));
  CHECK(m.clamp(q)[Joint::Knee] == 135.0);
  CHECK(joint_from_name("torso") == Joint::Hip);
}

TEST_CASE("model JSON round trip") {
  const HumanModel m = HumanModel::standard(60.0, 1.6);
  const HumanModel r = model_from_json(model_to_json(m));
  CHECK(model_to_json(r) == model_to_json(m));
  auto j = model_to_json(m);
  j["schema_version"] = 2;
  CHECK_THROWS_AS(model_from_json(j), ConfigError);
  const HumanModel file = load_model(ERGOGUIDE_SOURCE_DIR "/config/default_model.json");
  CHECK(model_to_json(file) == model_to_json(HumanModel::standard()));
}
