#include "ergoguide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {

constexpr double kTimeEps = 1e-9;

bool in_band(const TickRecord& r, const MetricsOptions& opt) {
  for (std::size_t j = 0; j < kGuidedCount; ++j) {
    if (opt.guided[j] && !(r.eps.value[j] < opt.dead_band)) return false;
  }
  return true;
}

std::size_t window_begin(Trace trace, const MetricsOptions& opt) {
  if (trace.empty()) throw EvaluationError("empty trace");
  const double t_end = trace.back().t;
  if (t_end - trace.front().t < opt.window - kTimeEps) {
    throw EvaluationError("trace is shorter than the evaluation window");
  }
  std::size_t i = trace.size();
  while (i > 0 && trace[i - 1].t >= t_end - opt.window - kTimeEps) --i;
  return i;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

Trace segment_trace(const TrialLog& log, const SegmentInfo& seg) {
  if (seg.first > seg.last || seg.last > log.records.size()) {
    throw EvaluationError("segment range outside the log");
  }
  return Trace(log.records).subspan(seg.first, seg.last - seg.first);
}

bool success(Trace trace, const MetricsOptions& opt) {
  const std::size_t w = window_begin(trace, opt);
  for (std::size_t i = w; i < trace.size(); ++i) {
    if (in_band(trace[i], opt)) return true;
  }
  return false;
}

std::optional<std::size_t> arrival_index(Trace trace, const MetricsOptions& opt) {
  const std::size_t w = window_begin(trace, opt);
  std::optional<std::size_t> last_in;
  for (std::size_t i = trace.size(); i-- > w;) {
    if (in_band(trace[i], opt)) {
      last_in = i;
      break;
    }
  }
  if (!last_in) return std::nullopt;
  std::size_t s = *last_in;
  while (s > 0 && in_band(trace[s - 1], opt)) --s;
  return s;
}

std::optional<double> reaching_time(Trace trace, const MetricsOptions& opt) {
  const auto s = arrival_index(trace, opt);
  if (!s) return std::nullopt;
  return trace[*s].t - trace.front().t;
}

std::optional<MotionIndices> motion_indices(Trace trace, const MetricsOptions& opt) {
  const auto s = arrival_index(trace, opt);
  if (!s) return std::nullopt;
  MotionIndices m;
  const double dt = trace[*s].t - trace.front().t;
  for (GuidedJoint g : kGuidedJoints) {
    const Joint j = model_joint(g);
    double path = 0.0;
    for (std::size_t i = 1; i <= *s; ++i) path += std::abs(trace[i].q_c[j] - trace[i - 1].q_c[j]);
    const double chord = std::abs(trace[*s].q_c[j] - trace.front().q_c[j]);
    m.angular_distance[index(g)] = path;
    if (dt > 0.0) {
      m.velocity[index(g)] = chord / dt;
      m.speed[index(g)] = path / dt;
    }
  }
  const bool still = std::all_of(m.angular_distance.begin(), m.angular_distance.end(),
                                 [](double d) { return d == 0.0; });
  m.degenerate = !(dt > 0.0) || still;
  return m;
}

std::optional<std::array<double, kGuidedCount>> angular_distance(Trace trace,
                                                                 const MetricsOptions& opt) {
  const auto m = motion_indices(trace, opt);
  if (!m) return std::nullopt;
  return m->angular_distance;
}

std::optional<std::array<double, kGuidedCount>> reaching_velocity(Trace trace,
                                                                  const MetricsOptions& opt) {
  const auto m = motion_indices(trace, opt);
  if (!m) return std::nullopt;
  return m->velocity;
}

std::optional<std::array<double, kGuidedCount>> path_speed(Trace trace,
                                                           const MetricsOptions& opt) {
  const auto m = motion_indices(trace, opt);
  if (!m) return std::nullopt;
  return m->speed;
}

std::array<double, kGuidedCount> final_error(Trace trace, const MetricsOptions& opt) {
  const std::size_t w = window_begin(trace, opt);
  std::array<double, kGuidedCount> out;
  out.fill(std::numeric_limits<double>::infinity());
  for (std::size_t i = w; i < trace.size(); ++i) {
    for (std::size_t j = 0; j < kGuidedCount; ++j) {
      out[j] = std::min(out[j], 100.0 * trace[i].eps.value[j]);
    }
  }
  return out;
}

std::optional<double> confusion_index(Trace trace, const MetricsOptions& opt,
                                      std::optional<GuidedJoint> joint) {
  if (trace.empty()) throw EvaluationError("empty trace");
  std::size_t moving = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const TickRecord& prev = trace[i - 1];
    if (!prev.active_joint) continue;
    if (joint && *prev.active_joint != *joint) continue;
    const double dt = trace[i].t - prev.t;
    if (!(dt > 0.0)) continue;
    const Joint j = model_joint(*prev.active_joint);
    const double v = (trace[i].q_c[j] - prev.q_c[j]) / dt;
    if (std::abs(v) < opt.moving_threshold) continue;
    ++moving;
    const int wanted = sign(prev.q_d[j] - prev.q_c[j]);
    if (sign(v) == -wanted) ++wrong;
  }
  if (moving == 0) return std::nullopt;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(moving);
}

std::optional<double> decrement_ratio(double tau_init, double tau_final, double threshold) {
  const double a = std::abs(tau_init);
  if (!(a > threshold)) return std::nullopt;
  return 100.0 * (a - std::abs(tau_final)) / a;
}

std::array<std::optional<double>, kJointCount> decrement_ratio(const TorqueVector& tau_init,
                                                               const TorqueVector& tau_final,
                                                               double threshold) {
  std::array<std::optional<double>, kJointCount> out;
  for (std::size_t k = 0; k < kJointCount; ++k) {
    out[k] = decrement_ratio(tau_init[k], tau_final[k], threshold);
  }
  return out;
}

SegmentMetrics evaluate_segment(const TrialLog& log, const SegmentInfo& seg,
                                const MetricsOptions& opt_in) {
  MetricsOptions opt = opt_in;
  opt.guided = log.guided;
  const Trace tr = segment_trace(log, seg);
  SegmentMetrics m;
  m.segment = seg.index;
  if (tr.empty()) return m;
  const bool long_enough = tr.back().t - tr.front().t >= opt.window - kTimeEps;
  if (long_enough) {
    m.success = success(tr, opt);
    m.final_error = final_error(tr, opt);
    if (m.success) {
      m.reach_time = reaching_time(tr, opt);
      m.motion = motion_indices(tr, opt);
    }
  }
  for (GuidedJoint g : kGuidedJoints) {
    if (log.guided[index(g)]) m.confusion[index(g)] = confusion_index(tr, opt, g);
  }
  if (tr.front().tau_overload && tr.back().tau_overload) {
    m.decrement = decrement_ratio(*tr.front().tau_overload, *tr.back().tau_overload,
                                  opt.torque_threshold);
  }
  return m;
}

}  // namespace ergoguide
