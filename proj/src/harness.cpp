#include "ergoguide/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "ergoguide/device.hpp"
#include "ergoguide/errors.hpp"
#include "ergoguide/loading.hpp"

namespace ergoguide {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

double wrap180(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0) r += 360.0;
  return r - 180.0;
}

void check_target(const HumanModel& model, Joint j, double deg) {
  const JointLimit& lim = model.limit(j);
  if (!(deg >= lim.min_deg && deg <= lim.max_deg)) {
    throw ConfigError("target " + std::to_string(deg) + " deg outside the " +
                     std::string(joint_name(j)) + " limits");
  }
}

TrialLog make_log(const SessionConfig& config, std::string protocol) {
  TrialLog log;
  log.protocol = std::move(protocol);
  log.joint_set = config.joint_set;
  log.modality = config.modality;
  log.agent = config.agent;
  log.seed = config.seed;
  log.subject = config.subject;
  log.extra["tick_ms"] = config.tick_ms();
  log.extra["sensor_hz"] = config.sensor_hz;
  log.extra["pulse_ms"] = config.feedback().pulse_ms;
  return log;
}

}  // namespace

std::string_view protocol_name(ProtocolKind k) {
  return k == ProtocolKind::ModalityTest ? "modality_test" : "ergonomic_test";
}

std::optional<ProtocolKind> protocol_from_name(std::string_view name) {
  if (name == "modality_test") return ProtocolKind::ModalityTest;
  if (name == "ergonomic_test") return ProtocolKind::ErgonomicTest;
  return std::nullopt;
}

void ProtocolSpec::validate(const HumanModel& model) const {
  for (double t : torso_targets) check_target(model, Joint::Hip, t);
  for (double t : shoulder_targets) check_target(model, Joint::Shoulder, t);
  for (double t : elbow_targets) check_target(model, Joint::Elbow, t);
  for (double d : distances) {
    if (!(d > 0.0)) throw ConfigError("condition distances must be > 0");
  }
  if (!(load_mass >= 0.0)) throw ConfigError("load mass must be >= 0");
  if (!(object_height > 0.0)) throw ConfigError("object height must be > 0");
  if (!(timeout > 0.0)) throw ConfigError("timeout must be > 0");
}

TargetSequence target_sequence(const ProtocolSpec& spec, std::string_view joint_set) {
  TargetSequence seq;
  for (std::size_t i = 0; i < 3; ++i) {
    GuidedTarget t;
    if (joint_set == "torso") {
      t[index(GuidedJoint::Torso)] = spec.torso_targets[i];
    } else if (joint_set == "arm") {
      t[index(GuidedJoint::Shoulder)] = spec.shoulder_targets[i];
      t[index(GuidedJoint::Elbow)] = spec.elbow_targets[i];
    } else {
      throw ConfigError("joint set must be 'torso' or 'arm'");
    }
    seq.push_back(t);
  }
  return seq;
}

std::array<bool, kGuidedCount> guided_mask(std::string_view joint_set) {
  if (joint_set == "torso") return {true, false, false};
  if (joint_set == "arm") return {false, true, true};
  return {true, true, true};
}

// ---- Configuration ------------------------------------------------------------

void SessionConfig::validate() const {
  if (tick_hz <= 0 || sensor_hz <= 0) throw ConfigError("rates must be > 0");
  if (sensor_hz % tick_hz != 0) throw ConfigError("tick rate must divide the sensor rate");
  if (1000 % tick_hz != 0) throw ConfigError("tick period must be a whole number of ms");
  if (joint_set != "torso" && joint_set != "arm" && joint_set != "all") {
    throw ConfigError("joint_set must be torso, arm or all");
  }
  if (agent != "live" && !agent_params) agent_preset(agent);
  if (agent_params) agent_params->validate();
  if (!(plate_cop_sigma >= 0.0) || !(plate_grf_sigma >= 0.0)) {
    throw ConfigError("plate noise must be >= 0");
  }
  if (!(phase_a >= 0.0) || !(phase_c >= 0.0)) throw ConfigError("phase durations must be >= 0");
  if (condition < 1 || condition > 3) throw ConfigError("condition must be 1, 2 or 3");
  protocol.validate(model());
}

HumanModel SessionConfig::model() const {
  return model_path.empty() ? HumanModel::standard() : load_model(model_path);
}

AgentParams SessionConfig::resolved_agent() const {
  if (agent_params) return *agent_params;
  if (agent == "live") throw ConfigError("a live session has no simulated agent");
  return agent_preset(agent);
}

FeedbackConfig SessionConfig::feedback() const {
  FeedbackConfig fc;
  fc.modality = modality;
  fc.tick_ms = static_cast<std::uint32_t>(1000 / tick_hz);
  return fc;
}

SessionConfig session_config_from_json(const json& j) {
  try {
    if (j.value("schema_version", 0) != 1) throw ConfigError("config schema_version must be 1");
    SessionConfig c;
    c.model_path = j.value("model", "");
    const auto m = modality_from_name(j.value("modality", "spot"));
    if (!m) throw ConfigError("unknown modality");
    c.modality = *m;
    c.agent = j.value("agent", "ideal");
    if (j.contains("agent_params")) {
      const json& a = j.at("agent_params");
      AgentParams p = c.agent == "live" ? AgentParams{} : agent_preset(c.agent);
      if (a.contains("comprehension")) p.comprehension = a.at("comprehension").get<std::array<double, 3>>();
      p.reaction_delay = a.value("reaction_delay", p.reaction_delay);
      p.max_joint_speed = a.value("max_joint_speed", p.max_joint_speed);
      p.speed_gain = a.value("speed_gain", p.speed_gain);
      p.perception_threshold = a.value("perception_threshold", p.perception_threshold);
      p.dwell = a.value("dwell", p.dwell);
      p.completion_hold = a.value("completion_hold", p.completion_hold);
      c.agent_params = p;
    }
    c.seed = j.value("seed", std::uint64_t{1});
    c.output_dir = j.value("output_dir", "out");
    c.tick_hz = j.value("tick_hz", 10);
    c.sensor_hz = j.value("sensor_hz", 1000);
    c.joint_set = j.value("joint_set", "torso");
    c.subject = j.value("subject", 0);
    c.plate_cop_sigma = j.value("plate_cop_sigma", 0.0);
    c.plate_grf_sigma = j.value("plate_grf_sigma", 0.0);
    c.phase_a = j.value("phase_a", c.phase_a);
    c.phase_c = j.value("phase_c", c.phase_c);
    c.condition = j.value("condition", c.condition);
    if (j.contains("protocol")) {
      const json& p = j.at("protocol");
      const auto kind = protocol_from_name(p.value("kind", "modality_test"));
      if (!kind) throw ConfigError("unknown protocol kind");
      c.protocol.kind = *kind;
      if (p.contains("torso_targets")) c.protocol.torso_targets = p.at("torso_targets").get<std::array<double, 3>>();
      if (p.contains("shoulder_targets")) c.protocol.shoulder_targets = p.at("shoulder_targets").get<std::array<double, 3>>();
      if (p.contains("elbow_targets")) c.protocol.elbow_targets = p.at("elbow_targets").get<std::array<double, 3>>();
      if (p.contains("distances")) c.protocol.distances = p.at("distances").get<std::array<double, 3>>();
      c.protocol.load_mass = p.value("load_mass", c.protocol.load_mass);
      c.protocol.object_height = p.value("object_height", c.protocol.object_height);
      c.protocol.timeout = p.value("timeout", c.protocol.timeout);
    }
    c.protocol.seed = c.seed;
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("session config: ") + e.what());
  }
}

json session_config_to_json(const SessionConfig& c) {
  json j{{"schema_version", 1},
         {"model", c.model_path},
         {"modality", std::string(modality_name(c.modality))},
         {"agent", c.agent},
         {"seed", c.seed},
         {"output_dir", c.output_dir},
         {"tick_hz", c.tick_hz},
         {"sensor_hz", c.sensor_hz},
         {"joint_set", c.joint_set},
         {"subject", c.subject},
         {"plate_cop_sigma", c.plate_cop_sigma},
         {"plate_grf_sigma", c.plate_grf_sigma},
         {"phase_a", c.phase_a},
         {"phase_c", c.phase_c},
         {"condition", c.condition}};
  j["protocol"] = {{"kind", std::string(protocol_name(c.protocol.kind))},
                   {"torso_targets", c.protocol.torso_targets},
                   {"shoulder_targets", c.protocol.shoulder_targets},
                   {"elbow_targets", c.protocol.elbow_targets},
                   {"distances", c.protocol.distances},
                   {"load_mass", c.protocol.load_mass},
                   {"object_height", c.protocol.object_height},
                   {"timeout", c.protocol.timeout}};
  if (c.agent_params) {
    const AgentParams& p = *c.agent_params;
    j["agent_params"] = {{"comprehension", p.comprehension},
                         {"reaction_delay", p.reaction_delay},
                         {"max_joint_speed", p.max_joint_speed},
                         {"speed_gain", p.speed_gain},
                         {"perception_threshold", p.perception_threshold},
                         {"dwell", p.dwell},
                         {"completion_hold", p.completion_hold}};
  }
  return j;
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return session_config_from_json(j);
}

// ---- Closed loop --------------------------------------------------------------

namespace {

struct LoopContext {
  const SessionConfig& config;
  const HumanModel& model;
  FeedbackConfig fb;
  PlacementRegistry reg;
  DeviceEmulator emulator;
  WearerAgent agent;
  std::uint64_t tick = 0;

  LoopContext(const SessionConfig& c, const HumanModel& m, const AgentParams& params)
      : config(c),
        model(m),
        fb(c.feedback()),
        reg(PlacementRegistry::standard(c.modality)),
        emulator(reg, c.tick_ms()),
        agent(params, reg, c.seed) {}

  double time() const { return static_cast<double>(tick) * config.tick_ms() / 1000.0; }
};

/// Guidance until the wearer announces completion inside the dead-band or the
/// timeout. `follow` runs after each sensor substep to move unguided joints.
template <typename Follow, typename Torque>
bool guide(LoopContext& ctx, TrialLog& log, Posture& q, const Posture& q_d, int segment,
           char phase, Follow&& follow, Torque&& torque) {
  const double t_start = ctx.time();
  const double dt = 1.0 / ctx.config.sensor_hz;
  const int substeps = ctx.config.substeps();
  FeedbackState state{};
  ctx.agent.reset(t_start);
  while (true) {
    const double t = ctx.time();
    auto [out, next] = feedback_step(ctx.fb, ctx.reg, state, guided_angles(q), guided_angles(q_d),
                                     ctx.tick);
    state = next;
    const auto frames = encode_frames(out.commands);
    const auto delivered = ctx.emulator.receive(frames);
    ctx.agent.perceive(t, delivered);

    TickRecord r;
    r.tick = ctx.tick;
    r.t = t;
    r.segment = segment;
    r.phase = phase;
    r.q_c = q;
    r.q_c.timestamp = t;
    r.q_d = q_d;
    r.q_d.timestamp = t;
    r.eps = out.errors;
    r.active_joint = out.joint;
    r.commands = delivered;
    r.tau_overload = torque(q);
    log.records.push_back(std::move(r));
    ++ctx.tick;

    if (!out.joint && ctx.agent.announces_completion(t)) return true;
    if (t - t_start >= ctx.config.protocol.timeout - 1e-9) return false;

    for (int s = 0; s < substeps; ++s) {
      const ErrorVector eps =
          error_magnitude(guided_angles(q), guided_angles(q_d), ctx.fb.max_error);
      q = ctx.agent.advance(t + s * dt, dt, q, eps, ctx.model);
      follow(q);
    }
  }
}

}  // namespace

TrialLog run_modality_trial(const SessionConfig& config, const TargetSequence& targets) {
  config.validate();
  const HumanModel model = config.model();
  LoopContext ctx(config, model, config.resolved_agent());
  TrialLog log = make_log(config, "modality_test");
  log.condition = std::string(modality_name(config.modality));
  log.guided = guided_mask(config.joint_set);

  Posture q{};
  bool all_completed = true;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Posture q_d = q;
    for (GuidedJoint g : kGuidedJoints) {
      if (const auto& v = targets[i][index(g)]) {
        check_target(model, model_joint(g), *v);
        q_d[model_joint(g)] = *v;
      }
    }
    SegmentInfo seg;
    seg.index = static_cast<int>(i);
    seg.target = q_d;
    seg.first = log.records.size();
    seg.completed = guide(ctx, log, q, q_d, static_cast<int>(i), 0, [](Posture&) {},
                          [](const Posture&) { return std::optional<TorqueVector>{}; });
    seg.timed_out = !seg.completed;
    seg.last = log.records.size();
    all_completed = all_completed && seg.completed;
    log.segments.push_back(seg);
  }
  log.status = all_completed ? "completed" : "timeout";
  log.completion_time = log.records.empty() ? 0.0 : log.records.back().t;
  return log;
}

// ---- Ergonomic test -------------------------------------------------------------

Posture reaching_posture(const HumanModel& model, double distance, double height,
                         const LoadSpec& load) {
  if (!(distance > 0.0)) throw InputError("reach distance must be > 0");
  const Vec2 hand{model.base_x() + model.foot().heel_offset + distance, height};
  const SupportPolygon poly = support_polygon(model);
  const double margin = 0.01 * (poly.x_max - poly.x_min);

  const double trunk = model.segment(Joint::Hip).length;
  const double a1 = model.segment(Joint::Shoulder).length;
  const double a2 = model.segment(Joint::Elbow).length;

  std::vector<double> ankles{0.0};
  for (double a = 5.0; a <= 30.0; a += 5.0) {
    ankles.push_back(-a);
    ankles.push_back(a);
  }
  const std::array<double, 5> elbows{-15.0, -10.0, -20.0, -30.0, -45.0};

  for (double knee = 0.0; knee <= model.limit(Joint::Knee).max_deg; knee += 10.0) {
    for (double ankle : ankles) {
      for (double elbow : elbows) {
        Posture q{};
        q[Joint::Ankle] = ankle;
        q[Joint::Knee] = knee;
        q[Joint::Elbow] = elbow;
        if (!model.within_limits(q)) continue;
        const KeyPoints legs = forward_kinematics(model, q);
        const Vec2 hip = legs.joints[index(Joint::Hip)];
        const double phi_thigh = (ankle - knee);

        // Upper arm and forearm act as one rigid link at a fixed elbow angle.
        const double e = elbow * kDeg;
        const double arm = std::hypot(a1 + a2 * std::cos(e), a2 * std::sin(e));
        const double delta = std::atan2(a2 * std::sin(e), a1 + a2 * std::cos(e));

        const Vec2 d = hand - hip;
        const double dist = std::hypot(d.x, d.z);
        if (dist > trunk + arm || dist < std::abs(trunk - arm)) continue;
        const double psi = std::atan2(d.x, d.z);
        const double alpha =
            std::acos(std::clamp((trunk * trunk + dist * dist - arm * arm) / (2 * trunk * dist),
                                 -1.0, 1.0));
        for (double sgn : {1.0, -1.0}) {
          const double phi_t = psi + sgn * alpha;
          const Vec2 shoulder = hip + trunk * Vec2{std::sin(phi_t), std::cos(phi_t)};
          const double phi_arm = std::atan2(hand.x - shoulder.x, hand.z - shoulder.z);
          q[Joint::Hip] = wrap180(phi_t / kDeg - phi_thigh);
          q[Joint::Shoulder] = wrap180((phi_arm - delta - phi_t) / kDeg - 180.0);
          if (!model.within_limits(q)) continue;
          const double cop = loaded_cop_x(model, q, load);
          if (cop < poly.x_min + margin || cop > poly.x_max - margin) continue;
          return q;
        }
      }
    }
  }
  throw InfeasibleError("no stable reaching posture for the requested distance", 0.0);
}

ErgonomicPlan plan_ergonomic(const SessionConfig& config, int condition) {
  if (condition < 1 || condition > 3) throw InputError("condition must be 1, 2 or 3");
  const HumanModel model = config.model();
  ErgonomicPlan plan;
  plan.condition = condition;
  plan.distance = config.protocol.distances[static_cast<std::size_t>(condition - 1)];
  plan.load.mass = config.protocol.load_mass;
  plan.q_init = reaching_posture(model, plan.distance, config.protocol.object_height, plan.load);

  OptimizationSpec spec;
  spec.task.z_ref = forward_kinematics(model, plan.q_init).object_height;
  spec.solver.seed = config.seed;
  plan.result = optimize_posture(model, plan.q_init, plan.load, spec);
  return plan;
}

TrialLog run_ergonomic_trial(const SessionConfig& config, int condition) {
  config.validate();
  const HumanModel model = config.model();
  TrialLog log = make_log(config, "ergonomic_test");
  log.condition = "condition_" + std::to_string(condition);
  log.joint_set = "all";
  log.guided = {true, true, true};

  ErgonomicPlan plan;
  try {
    plan = plan_ergonomic(config, condition);
  } catch (const InfeasibleError& e) {
    log.status = "aborted";
    log.extra["error"] = e.what();
    log.extra["best_penalty"] = e.best_penalty();
    return log;
  }
  log.extra["distance"] = plan.distance;
  log.extra["load_mass"] = plan.load.mass;
  log.extra["objective_init"] = plan.result.objective_init;
  log.extra["objective_final"] = plan.result.objective_final;

  // SESC identified from random postures, as a calibration session would.
  std::mt19937_64 rng(mix(config.seed, 0x5e5c));
  std::vector<ComSample> samples;
  for (int i = 0; i < 40; ++i) {
    Posture q{};
    for (Joint j : kAllJoints) {
      const JointLimit& lim = model.limit(j);
      q[j] = std::uniform_real_distribution<double>(lim.min_deg, lim.max_deg)(rng);
    }
    samples.push_back({q, whole_body_com(model, q)});
  }
  const SescParams sesc = sesc_calibrate(samples);
  const PlateNoise noise{config.plate_cop_sigma, config.plate_grf_sigma};
  std::mt19937_64 plate_rng(mix(config.seed, 0x9a7e));
  auto torque = [&](const Posture& q) -> std::optional<TorqueVector> {
    const PlateReading plate =
        noise.cop_sigma > 0.0 || noise.grf_sigma > 0.0
            ? simulate_plate(model, q, plan.load, noise, plate_rng)
            : simulate_plate(model, q, plan.load);
    return estimate_overloading(plate, sesc, model, q).torques;
  };

  LoopContext ctx(config, model, config.resolved_agent());
  const Posture& q_d = plan.result.q_d;
  Posture q = plan.q_init;
  SegmentInfo seg;
  seg.target = q_d;

  auto hold = [&](double seconds, char phase) {
    const auto n = static_cast<std::uint64_t>(std::llround(seconds * config.tick_hz));
    for (std::uint64_t k = 0; k < n; ++k) {
      TickRecord r;
      r.tick = ctx.tick;
      r.t = ctx.time();
      r.segment = 0;
      r.phase = phase;
      r.q_c = q;
      r.q_c.timestamp = r.t;
      r.q_d = q_d;
      r.q_d.timestamp = r.t;
      r.eps = error_magnitude(guided_angles(q), guided_angles(q_d), ctx.fb.max_error);
      r.tau_overload = torque(q);
      log.records.push_back(std::move(r));
      ++ctx.tick;
    }
  };

  // The legs are not cued; they follow the guided joints in proportion to
  // the fraction of the guided error already removed.
  const GuidedAngles g_init = guided_angles(plan.q_init);
  const GuidedAngles g_goal = guided_angles(q_d);
  double total = 0.0;
  for (std::size_t k = 0; k < kGuidedCount; ++k) total += std::abs(g_init[k] - g_goal[k]);
  auto follow = [&](Posture& p) {
    double progress = 1.0;
    if (total > 0.0) {
      const GuidedAngles g = guided_angles(p);
      double left = 0.0;
      for (std::size_t k = 0; k < kGuidedCount; ++k) left += std::abs(g[k] - g_goal[k]);
      progress = std::clamp(1.0 - left / total, 0.0, 1.0);
    }
    for (Joint j : {Joint::Ankle, Joint::Knee}) {
      p[j] = plan.q_init[j] + progress * (q_d[j] - plan.q_init[j]);
    }
  };

  hold(config.phase_a, 'A');
  seg.completed = guide(ctx, log, q, q_d, 0, 'B', follow, torque);
  seg.timed_out = !seg.completed;
  hold(config.phase_c, 'C');
  seg.last = log.records.size();
  log.segments.push_back(seg);
  log.status = seg.completed ? "completed" : "timeout";
  log.completion_time = log.records.empty() ? 0.0 : log.records.back().t;
  return log;
}

// ---- Campaign ---------------------------------------------------------------

std::vector<int> subject_order(std::uint64_t seed, int subject, int n) {
  if (n < 0) throw InputError("order size must be >= 0");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(mix(seed, 0x07de, static_cast<std::uint64_t>(subject)));
  for (int i = n - 1; i > 0; --i) {
    const auto k = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
  }
  return order;
}

AgentParams jitter_agent(const AgentParams& base, std::uint64_t seed, int subject,
                         double jitter) {
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must lie in [0, 1)");
  std::mt19937_64 rng(mix(seed, 0xa6e7, static_cast<std::uint64_t>(subject)));
  auto scale = [&](double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
  };
  AgentParams p = base;
  for (double& c : p.comprehension) c = std::min(1.0, c * scale(1.0 - jitter, 1.0));
  p.reaction_delay *= scale(1.0 - jitter, 1.0 + jitter);
  p.max_joint_speed *= scale(1.0 - jitter, 1.0 + jitter);
  p.speed_gain *= scale(1.0 - jitter, 1.0 + jitter);
  p.validate();
  return p;
}

std::vector<TrialLog> run_campaign(const SessionConfig& base, const CampaignOptions& options) {
  if (options.subjects < 1) throw ConfigError("a campaign needs at least one subject");
  base.validate();
  const AgentParams agent = base.resolved_agent();

  struct Job {
    SessionConfig config;
    TargetSequence targets;
    int condition = 0;
  };
  std::vector<Job> jobs;
  for (int s = 0; s < options.subjects; ++s) {
    SessionConfig c = base;
    c.subject = s;
    c.agent_params = jitter_agent(agent, base.seed, s, options.jitter);
    if (base.protocol.kind == ProtocolKind::ModalityTest) {
      if (options.modalities.empty()) throw ConfigError("campaign needs at least one modality");
      const auto m_order = subject_order(base.seed, s, static_cast<int>(options.modalities.size()));
      for (std::size_t js = 0; js < options.joint_sets.size(); ++js) {
        const TargetSequence seq = target_sequence(base.protocol, options.joint_sets[js]);
        const auto t_order = subject_order(mix(base.seed, 0x7a6, js), s, 3);
        TargetSequence shuffled;
        for (int k : t_order) shuffled.push_back(seq[static_cast<std::size_t>(k)]);
        for (int mi : m_order) {
          Job job{c, shuffled, 0};
          job.config.modality = options.modalities[static_cast<std::size_t>(mi)];
          job.config.joint_set = options.joint_sets[js];
          job.config.seed = mix(base.seed, static_cast<std::uint64_t>(s), jobs.size());
          jobs.push_back(std::move(job));
        }
      }
    } else {
      for (int k : subject_order(base.seed, s, 3)) {
        Job job{c, {}, k + 1};
        job.config.seed = mix(base.seed, static_cast<std::uint64_t>(s), jobs.size());
        jobs.push_back(std::move(job));
      }
    }
  }

  std::vector<TrialLog> logs(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    try {
      logs[static_cast<std::size_t>(i)] =
          job.condition > 0 ? run_ergonomic_trial(job.config, job.condition)
                            : run_modality_trial(job.config, job.targets);
      logs[static_cast<std::size_t>(i)].subject = job.config.subject;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("campaign trial failed: " + e);
  }
  return logs;
}

// ---- Replay ---------------------------------------------------------------------

std::optional<std::size_t> replay_mismatch(const TrialLog& log) {
  FeedbackConfig fb;
  fb.modality = log.modality;
  fb.tick_ms = log.extra.value("tick_ms", 100u);
  fb.pulse_ms = log.extra.value("pulse_ms", kPulseMs);
  if (!log.records.empty()) fb.max_error = log.records.front().eps.max_error;
  const PlacementRegistry reg = PlacementRegistry::standard(log.modality);

  FeedbackState state{};
  int prev_segment = -1;
  char prev_phase = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const TickRecord& r = log.records[i];
    if (i == 0 || r.segment != prev_segment || r.phase != prev_phase) state = FeedbackState{};
    prev_segment = r.segment;
    prev_phase = r.phase;
    std::vector<DeviceCommand> expected;
    if (r.phase != 'A' && r.phase != 'C') {
      auto [out, next] =
          feedback_step(fb, reg, state, guided_angles(r.q_c), guided_angles(r.q_d), r.tick);
      state = next;
      expected = std::move(out.commands);
    }
    if (expected != r.commands) return i;
  }
  return std::nullopt;
}

}  // namespace ergoguide
