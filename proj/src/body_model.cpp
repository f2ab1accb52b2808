#include "ergoguide/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "ankle", "knee", "hip", "shoulder", "elbow"};

Vec2 along_unit(double phi) { return {std::sin(phi), std::cos(phi)}; }
Vec2 across_unit(double phi) { return {std::cos(phi), -std::sin(phi)}; }

}  // namespace

std::string_view joint_name(Joint j) { return kJointNames[index(j)]; }

std::optional<Joint> joint_from_name(std::string_view name) {
  for (Joint j : kAllJoints) {
    if (joint_name(j) == name) return j;
  }
  if (name == "torso") return Joint::Hip;
  return std::nullopt;
}

Posture Posture::from_span(std::span<const double> values, double timestamp) {
  if (values.size() != kJointCount) {
    std::ostringstream msg;
    msg << "posture has " << values.size() << " angles, expected " << kJointCount;
    throw InputError(msg.str());
  }
  Posture q;
  std::copy(values.begin(), values.end(), q.angles.begin());
  q.timestamp = timestamp;
  return q;
}

HumanModel::HumanModel(std::array<Segment, kJointCount> segments,
                       std::array<JointLimit, kJointCount> limits, FootGeometry foot,
                       double gravity, double base_x)
    : segments_(std::move(segments)),
      limits_(limits),
      foot_(foot),
      gravity_(gravity),
      base_x_(base_x),
      total_mass_(0.0) {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const Segment& s = segments_[i];
    if (!(s.length > 0.0)) throw ModelError("segment '" + s.name + "' length must be > 0");
    if (!(s.mass >= 0.0)) throw ModelError("segment '" + s.name + "' mass must be >= 0");
    if (!(s.com_ratio >= 0.0 && s.com_ratio <= 1.0)) {
      throw ModelError("segment '" + s.name + "' com_ratio must lie in [0, 1]");
    }
    if (!(limits_[i].min_deg < limits_[i].max_deg)) {
      throw ModelError("joint '" + std::string(kJointNames[i]) + "' needs q_min < q_max");
    }
    total_mass_ += s.mass;
  }
  if (!(gravity_ > 0.0)) throw ModelError("gravity must be > 0");
}

HumanModel HumanModel::standard(double body_mass, double height) {
  if (!(body_mass > 0.0) || !(height > 0.0)) {
    throw ModelError("body mass and height must be positive");
  }
  // Fractions after Winter's anthropometric tables; both legs and both arms
  // lumped into single planar segments, head and neck lumped into the trunk.
  std::array<Segment, kJointCount> segs = {{
      {"shank", 0.246 * height, 0.093 * body_mass, 0.567},
      {"thigh", 0.245 * height, 0.200 * body_mass, 0.567},
      {"trunk", 0.288 * height, 0.578 * body_mass, 0.606},
      {"upper_arm", 0.186 * height, 0.056 * body_mass, 0.436},
      {"forearm_hand", 0.200 * height, 0.044 * body_mass, 0.500},
  }};
  std::array<JointLimit, kJointCount> limits = {{
      {-30.0, 30.0},    // ankle
      {0.0, 135.0},     // knee
      {-15.0, 90.0},    // hip / torso
      {-180.0, 30.0},   // shoulder
      {-145.0, 0.0},    // elbow
  }};
  FootGeometry foot{-0.05, 0.20, 0.039 * height};
  return HumanModel(segs, limits, foot);
}

HumanModel HumanModel::translated(double dx) const {
  return HumanModel(segments_, limits_, foot_, gravity_, base_x_ + dx);
}

bool HumanModel::within_limits(const Posture& q, double tol) const {
  for (std::size_t i = 0; i < kJointCount; ++i) {
    if (q.angles[i] < limits_[i].min_deg - tol || q.angles[i] > limits_[i].max_deg + tol) {
      return false;
    }
  }
  return true;
}

Posture HumanModel::clamp(const Posture& q) const {
  Posture out = q;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    out.angles[i] = std::clamp(q.angles[i], limits_[i].min_deg, limits_[i].max_deg);
  }
  return out;
}

HumanModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1) {
      throw ConfigError("model file: unsupported or missing schema_version (expected 1)");
    }
    const auto& js = j.at("segments");
    if (js.size() != kJointCount) {
      throw ModelError("model file: expected 5 segments in chain order");
    }
    std::array<Segment, kJointCount> segs;
    for (std::size_t i = 0; i < kJointCount; ++i) {
      segs[i].name = js[i].at("name").get<std::string>();
      segs[i].length = js[i].at("length").get<double>();
      segs[i].mass = js[i].at("mass").get<double>();
      segs[i].com_ratio = js[i].at("com_ratio").get<double>();
    }
    std::array<JointLimit, kJointCount> limits;
    const auto& jl = j.at("joint_limits");
    for (Joint jt : kAllJoints) {
      const auto& entry = jl.at(std::string(joint_name(jt)));
      limits[index(jt)] = {entry.at("q_min").get<double>(), entry.at("q_max").get<double>()};
    }
    FootGeometry foot;
    const auto& jf = j.at("foot");
    foot.heel_offset = jf.at("heel_offset").get<double>();
    foot.toe_offset = jf.at("toe_offset").get<double>();
    foot.ankle_height = jf.value("ankle_height", foot.ankle_height);
    return HumanModel(segs, limits, foot, j.value("gravity", 9.81), j.value("base_x", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

nlohmann::json model_to_json(const HumanModel& model) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["gravity"] = model.gravity();
  j["base_x"] = model.base_x();
  for (const Segment& s : model.segments()) {
    j["segments"].push_back(
        {{"name", s.name}, {"length", s.length}, {"mass", s.mass}, {"com_ratio", s.com_ratio}});
  }
  for (Joint jt : kAllJoints) {
    j["joint_limits"][std::string(joint_name(jt))] = {{"q_min", model.limit(jt).min_deg},
                                                       {"q_max", model.limit(jt).max_deg}};
  }
  j["foot"] = {{"heel_offset", model.foot().heel_offset},
               {"toe_offset", model.foot().toe_offset},
               {"ankle_height", model.foot().ankle_height}};
  return j;
}

HumanModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

std::array<double, kJointCount> segment_orientations(const Posture& q) {
  std::array<double, kJointCount> phi{};
  phi[0] = q[Joint::Ankle];
  phi[1] = phi[0] - q[Joint::Knee];
  phi[2] = phi[1] + q[Joint::Hip];
  phi[3] = phi[2] + 180.0 + q[Joint::Shoulder];
  phi[4] = phi[3] + q[Joint::Elbow];
  for (double& p : phi) p *= kDegToRad;
  return phi;
}

KeyPoints forward_kinematics(const HumanModel& model, const Posture& q) {
  const auto phi = segment_orientations(q);
  KeyPoints kp;
  Vec2 p = model.base();
  for (std::size_t i = 0; i < kJointCount; ++i) {
    kp.joints[i] = p;
    p = p + model.segments()[i].length * along_unit(phi[i]);
  }
  kp.hand = p;
  kp.object_height = p.z;
  return kp;
}

KeyPoints forward_kinematics(const HumanModel& model, std::span<const double> angles) {
  return forward_kinematics(model, Posture::from_span(angles));
}

std::array<Vec2, kJointCount> segment_coms(const HumanModel& model, const Posture& q) {
  const auto phi = segment_orientations(q);
  std::array<Vec2, kJointCount> out{};
  Vec2 p = model.base();
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const Segment& s = model.segments()[i];
    const Vec2 u = along_unit(phi[i]);
    out[i] = p + (s.com_ratio * s.length) * u;
    p = p + s.length * u;
  }
  return out;
}

Vec2 whole_body_com(const HumanModel& model, const Posture& q) {
  const auto coms = segment_coms(model, q);
  Vec2 acc;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    acc = acc + model.segments()[i].mass * coms[i];
  }
  const double m = model.total_mass();
  if (m <= 0.0) return model.base();
  return (1.0 / m) * acc;
}

namespace {

std::string parameter_name(std::size_t k) {
  if (k < kJointCount) return "along." + std::string(kJointNames[k]);
  if (k < 2 * kJointCount) return "across." + std::string(kJointNames[k - kJointCount]);
  return k == 2 * kJointCount ? "base.x" : "base.z";
}

// Two rows (x, z) per sample; columns: along[5], across[5], base.x, base.z.
void fill_rows(Eigen::MatrixXd& a, Eigen::Index row, const Posture& q) {
  const auto phi = segment_orientations(q);
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const Vec2 e = along_unit(phi[i]);
    const Vec2 n = across_unit(phi[i]);
    const auto ci = static_cast<Eigen::Index>(i);
    a(row, ci) = e.x;
    a(row + 1, ci) = e.z;
    a(row, ci + kJointCount) = n.x;
    a(row + 1, ci + kJointCount) = n.z;
  }
  a(row, 2 * kJointCount) = 1.0;
  a(row + 1, 2 * kJointCount) = 0.0;
  a(row, 2 * kJointCount + 1) = 0.0;
  a(row + 1, 2 * kJointCount + 1) = 1.0;
}

}  // namespace

SescParams sesc_calibrate(std::span<const ComSample> samples) {
  constexpr auto p = static_cast<Eigen::Index>(SescParams::kParameterCount);
  const auto rows = static_cast<Eigen::Index>(2 * samples.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(rows, 1), p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(std::max<Eigen::Index>(rows, 1));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto r = static_cast<Eigen::Index>(2 * s);
    fill_rows(a, r, samples[s].posture);
    b(r) = samples[s].com.x;
    b(r + 1) = samples[s].com.z;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  if (rank < p) {
    std::vector<std::string> directions;
    const Eigen::MatrixXd& v = svd.matrixV();
    for (Eigen::Index c = rank; c < p; ++c) {
      std::ostringstream dir;
      bool first = true;
      for (Eigen::Index k = 0; k < p; ++k) {
        const double w = v(k, c);
        if (std::abs(w) < 0.1) continue;
        if (!first) dir << ' ';
        dir << (w >= 0 ? '+' : '-') << std::abs(w) << '*' << parameter_name(static_cast<std::size_t>(k));
        first = false;
      }
      directions.push_back(dir.str());
    }
    std::ostringstream msg;
    msg << "SESC calibration is rank deficient (rank " << rank << " of " << p << ", "
        << samples.size() << " samples); unidentified directions:";
    for (const auto& d : directions) msg << " [" << d << "]";
    throw CalibrationError(msg.str(), std::move(directions));
  }

  svd.setThreshold(tol / std::max(1.0, sv(0)));
  const Eigen::VectorXd theta = svd.solve(b);
  SescParams out;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    out.along[i] = theta(static_cast<Eigen::Index>(i));
    out.across[i] = theta(static_cast<Eigen::Index>(i + kJointCount));
  }
  out.base = {theta(2 * kJointCount), theta(2 * kJointCount + 1)};
  const Eigen::VectorXd resid = a * theta - b;
  out.fit_residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(samples.size()));
  return out;
}

Vec2 sesc_com(const SescParams& params, const Posture& q) {
  const auto phi = segment_orientations(q);
  Vec2 c = params.base;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    c = c + params.along[i] * along_unit(phi[i]) + params.across[i] * across_unit(phi[i]);
  }
  return c;
}

double SupportPolygon::signed_excess(double x) const {
  return std::max(x_min - x, x - x_max);
}

SupportPolygon support_polygon(const HumanModel& model) {
  const FootGeometry& f = model.foot();
  if (!(f.heel_offset < f.toe_offset)) {
    throw ModelError("foot geometry needs heel_offset < toe_offset");
  }
  return {model.base_x() + f.heel_offset, model.base_x() + f.toe_offset};
}

}  // namespace ergoguide
