#pragma once

// Planar sagittal human model: a five-joint serial chain rooted at the ankle.
//
// Angle conventions (degrees). Absolute segment orientation phi is measured
// from the upward vertical, positive toward +x (anterior):
//
//   joint     segment it drives    orientation
//   ankle     shank                phi_shank = ankle
//   knee      thigh                phi_thigh = phi_shank - knee        (knee >= 0 is flexion)
//   hip       trunk (torso)        phi_trunk = phi_thigh + hip         (torso flexion > 0)
//   shoulder  upper arm            phi_upper = phi_trunk + 180 + shoulder  (forward raise < 0)
//   elbow     forearm + hand       phi_fore  = phi_upper + elbow       (flexion < 0)
//
// With every angle at zero the body stands upright with the arm hanging.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ergoguide {

inline constexpr std::size_t kJointCount = 5;

enum class Joint : std::uint8_t { Ankle = 0, Knee, Hip, Shoulder, Elbow };

inline constexpr std::array<Joint, kJointCount> kAllJoints = {
    Joint::Ankle, Joint::Knee, Joint::Hip, Joint::Shoulder, Joint::Elbow};

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }
std::string_view joint_name(Joint j);
std::optional<Joint> joint_from_name(std::string_view name);

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
  friend bool operator==(Vec2, Vec2) = default;
};

struct Segment {
  std::string name;
  double length = 0.0;     // m
  double mass = 0.0;       // kg
  double com_ratio = 0.5;  // from the proximal (ankle-side) joint
};

struct JointLimit {
  double min_deg = 0.0;
  double max_deg = 0.0;
};

struct FootGeometry {
  double heel_offset = -0.05;  // m, relative to the ankle ground projection
  double toe_offset = 0.20;
  double ankle_height = 0.07;
};

/// Joint angles in degrees, chain order.
struct Posture {
  std::array<double, kJointCount> angles{};
  double timestamp = 0.0;

  double& operator[](Joint j) { return angles[index(j)]; }
  double operator[](Joint j) const { return angles[index(j)]; }

  /// Throws InputError unless `values` has exactly kJointCount entries.
  static Posture from_span(std::span<const double> values, double timestamp = 0.0);

  friend bool operator==(const Posture&, const Posture&) = default;
};

class HumanModel {
 public:
  HumanModel(std::array<Segment, kJointCount> segments,
             std::array<JointLimit, kJointCount> limits, FootGeometry foot,
             double gravity = 9.81, double base_x = 0.0);

  /// Anthropometric defaults scaled to body mass and height.
  static HumanModel standard(double body_mass = 70.0, double height = 1.75);

  const std::array<Segment, kJointCount>& segments() const { return segments_; }
  const Segment& segment(Joint j) const { return segments_[index(j)]; }
  const std::array<JointLimit, kJointCount>& limits() const { return limits_; }
  const JointLimit& limit(Joint j) const { return limits_[index(j)]; }
  const FootGeometry& foot() const { return foot_; }
  double gravity() const { return gravity_; }
  double total_mass() const { return total_mass_; }
  double base_x() const { return base_x_; }
  Vec2 base() const { return {base_x_, foot_.ankle_height}; }

  HumanModel translated(double dx) const;
  bool within_limits(const Posture& q, double tol = 0.0) const;
  Posture clamp(const Posture& q) const;

 private:
  std::array<Segment, kJointCount> segments_;
  std::array<JointLimit, kJointCount> limits_;
  FootGeometry foot_;
  double gravity_;
  double base_x_;
  double total_mass_;
};

HumanModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const HumanModel& model);
HumanModel load_model(const std::string& path);

struct KeyPoints {
  std::array<Vec2, kJointCount> joints{};  // ankle .. elbow
  Vec2 hand{};
  double object_height = 0.0;  // z of the grasp point
};

/// Absolute segment orientations in radians, chain order.
std::array<double, kJointCount> segment_orientations(const Posture& q);

KeyPoints forward_kinematics(const HumanModel& model, const Posture& q);
KeyPoints forward_kinematics(const HumanModel& model, std::span<const double> angles);

/// Per-segment centre-of-mass positions.
std::array<Vec2, kJointCount> segment_coms(const HumanModel& model, const Posture& q);

/// Mass-weighted mean of the segment CoMs.
Vec2 whole_body_com(const HumanModel& model, const Posture& q);

// --- Statically equivalent serial chain -------------------------------------
//
// CoM(q) = base + sum_i (along_i * e_i + across_i * n_i)
// with e_i = (sin phi_i, cos phi_i) and n_i = (cos phi_i, -sin phi_i).

struct SescParams {
  static constexpr std::size_t kParameterCount = 2 * kJointCount + 2;

  std::array<double, kJointCount> along{};
  std::array<double, kJointCount> across{};
  Vec2 base{};
  double fit_residual_rms = 0.0;  // m
};

struct ComSample {
  Posture posture;
  Vec2 com;
};

SescParams sesc_calibrate(std::span<const ComSample> samples);
Vec2 sesc_com(const SescParams& params, const Posture& q);

struct SupportPolygon {
  double x_min = 0.0;
  double x_max = 0.0;

  bool contains(double x) const { return x >= x_min && x <= x_max; }
  /// Positive outside the interval, non-positive inside.
  double signed_excess(double x) const;
};

SupportPolygon support_polygon(const HumanModel& model);

}  // namespace ergoguide
