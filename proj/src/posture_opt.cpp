#include "ergoguide/posture_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "ergoguide/errors.hpp"

namespace ergoguide {

void OptimizationSpec::validate() const {
  bool any_positive = false;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("joint weights must be >= 0");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw InputError("at least one joint weight must be > 0");
  if (!(task.z_th > 0.0)) throw InputError("task height tolerance z_th must be > 0");
  if (solver.restarts < 1) throw InputError("solver needs at least one restart");
  if (solver.max_iters < 1) throw InputError("solver max_iters must be >= 1");
  if (solver.penalty_stages < 1) throw InputError("solver needs at least one penalty stage");
  if (!(solver.penalty_coefficient > 0.0)) throw InputError("penalty coefficient must be > 0");
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
    throw InputError("no active decision variable");
  }
}

double ConstraintReport::max_slack() const {
  double m = std::max(stability, task);
  for (double b : bounds) m = std::max(m, b);
  return m;
}

double objective(const TorqueVector& tau, const JointWeights& weights) {
  double f = 0.0;
  for (std::size_t k = 0; k < kJointCount; ++k) f += weights[k] * tau[k] * tau[k];
  return 0.5 * f;
}

double objective(const HumanModel& model, const Posture& q, const LoadSpec& load,
                 const JointWeights& weights) {
  return objective(overloading_torques_oracle(model, q, load), weights);
}

double loaded_cop_x(const HumanModel& model, const Posture& q, const LoadSpec& load) {
  return simulate_plate(model, q, load).cop_x;
}

ConstraintReport evaluate_constraints(const HumanModel& model, const Posture& q,
                                      const LoadSpec& load, const OptimizationSpec& spec) {
  if (!spec.task.z_ref) throw InputError("task constraint has no reference height");
  ConstraintReport r;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    const JointLimit& lim = model.limits()[i];
    r.bounds[i] = std::max(lim.min_deg - q.angles[i], q.angles[i] - lim.max_deg);
  }
  r.stability = support_polygon(model).signed_excess(loaded_cop_x(model, q, load));
  r.task = std::abs(forward_kinematics(model, q).object_height - *spec.task.z_ref) -
           spec.task.z_th;
  r.feasible = r.max_slack() <= kFeasibilityTolerance;
  return r;
}

namespace {

// Shift applied inside the penalty so converged points land strictly inside.
constexpr double kPenaltyMargin = 1e-7;

class PenaltyProblem {
 public:
  PenaltyProblem(const HumanModel& model, const Posture& q_init, const LoadSpec& load,
                 const OptimizationSpec& spec)
      : model_(model), base_(q_init), load_(load), spec_(spec), support_(support_polygon(model)) {
    for (std::size_t i = 0; i < kJointCount; ++i) {
      if (spec.active[i]) vars_.push_back(i);
    }
  }

  std::size_t dim() const { return vars_.size(); }
  const std::vector<std::size_t>& vars() const { return vars_; }

  Posture posture(const std::vector<double>& x) const {
    Posture q = base_;
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const JointLimit& lim = model_.limits()[vars_[k]];
      q.angles[vars_[k]] = std::clamp(x[k], lim.min_deg, lim.max_deg);
    }
    return q;
  }

  double value(const std::vector<double>& x, double rho) const {
    const Posture q = posture(x);
    const KeyPoints kp = forward_kinematics(model_, q);
    const double f = objective(model_, q, load_, spec_.weights);
    const double stab = support_.signed_excess(loaded_cop_x(model_, q, load_));
    const double task = std::abs(kp.object_height - *spec_.task.z_ref) - spec_.task.z_th;
    const double vs = std::max(0.0, stab + kPenaltyMargin);
    const double vt = std::max(0.0, task + kPenaltyMargin);
    return f + rho * (vs * vs + vt * vt);
  }

 private:
  const HumanModel& model_;
  Posture base_;
  LoadSpec load_;
  const OptimizationSpec& spec_;
  SupportPolygon support_;
  std::vector<std::size_t> vars_;
};

struct Simplex {
  std::vector<std::vector<double>> points;
  std::vector<double> values;
};

// One Nelder-Mead descent; returns iterations used.
int nelder_mead(const PenaltyProblem& prob, double rho, std::vector<double>& x, double& fx,
                double step, int max_iters) {
  const std::size_t n = prob.dim();
  Simplex s;
  s.points.push_back(x);
  s.values.push_back(prob.value(x, rho));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p = x;
    p[i] += step;
    s.points.push_back(p);
    s.values.push_back(prob.value(p, rho));
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int it = 0;
  for (; it < max_iters; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread = s.values[worst] - s.values[best];
    double extent = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        extent = std::max(extent, std::abs(s.points[i][k] - s.points[best][k]));
      }
    }
    if (spread <= 1e-14 * (1.0 + std::abs(s.values[best])) && extent <= 1e-9) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += s.points[i][k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t k = 0; k < n; ++k) trial[k] = centroid[k] + (centroid[k] - s.points[worst][k]);
    const double fr = prob.value(trial, rho);
    if (fr < s.values[best]) {
      for (std::size_t k = 0; k < n; ++k) {
        trial2[k] = centroid[k] + 2.0 * (centroid[k] - s.points[worst][k]);
      }
      const double fe = prob.value(trial2, rho);
      if (fe < fr) {
        s.points[worst] = trial2;
        s.values[worst] = fe;
      } else {
        s.points[worst] = trial;
        s.values[worst] = fr;
      }
      continue;
    }
    if (fr < s.values[second]) {
      s.points[worst] = trial;
      s.values[worst] = fr;
      continue;
    }
    const bool outside = fr < s.values[worst];
    for (std::size_t k = 0; k < n; ++k) {
      trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                          : centroid[k] + 0.5 * (s.points[worst][k] - centroid[k]);
    }
    const double fc = prob.value(trial2, rho);
    if (fc < std::min(fr, s.values[worst])) {
      s.points[worst] = trial2;
      s.values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) {
        s.points[i][k] = s.points[best][k] + 0.5 * (s.points[i][k] - s.points[best][k]);
      }
      s.values[i] = prob.value(s.points[i], rho);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (s.values[i] < s.values[best]) best = i;
  }
  x = s.points[best];
  fx = s.values[best];
  return it;
}

struct RestartOutcome {
  Posture q;
  double objective = std::numeric_limits<double>::infinity();
  double penalty = std::numeric_limits<double>::infinity();
  bool feasible = false;
  int iterations = 0;
};

RestartOutcome run_restart(const PenaltyProblem& prob, const HumanModel& model,
                           const LoadSpec& load, const OptimizationSpec& spec,
                           std::vector<double> x) {
  RestartOutcome out;
  double rho = spec.solver.penalty_coefficient;
  double fx = prob.value(x, rho);
  for (int stage = 0; stage < spec.solver.penalty_stages; ++stage, rho *= 100.0) {
    fx = prob.value(x, rho);
    double step = 10.0;
    for (int round = 0; round < 6; ++round) {
      const double before = fx;
      out.iterations += nelder_mead(prob, rho, x, fx, step, spec.solver.max_iters);
      if (round > 0 && before - fx <= 1e-12 * (1.0 + std::abs(fx))) break;
      step = std::max(0.05, step * 0.3);
    }
  }
  // Snap the clamped point back into the iterate.
  out.q = prob.posture(x);
  out.penalty = fx;
  const ConstraintReport rep = evaluate_constraints(model, out.q, load, spec);
  out.feasible = rep.feasible;
  out.objective = objective(model, out.q, load, spec.weights);
  return out;
}

OptimizationSpec resolved(const HumanModel& model, const Posture& q_init,
                          const OptimizationSpec& spec) {
  spec.validate();
  OptimizationSpec s = spec;
  if (!s.task.z_ref) s.task.z_ref = forward_kinematics(model, q_init).object_height;
  return s;
}

std::vector<std::vector<double>> start_points(const HumanModel& model, const Posture& q_init,
                                              const PenaltyProblem& prob,
                                              const SolverOptions& opts) {
  std::vector<std::vector<double>> starts;
  std::vector<double> x0;
  const Posture clamped = model.clamp(q_init);
  for (std::size_t v : prob.vars()) x0.push_back(clamped.angles[v]);
  starts.push_back(x0);
  std::mt19937_64 rng(opts.seed);
  for (int r = 1; r < opts.restarts; ++r) {
    std::vector<double> x;
    for (std::size_t v : prob.vars()) {
      const JointLimit& lim = model.limits()[v];
      x.push_back(std::uniform_real_distribution<double>(lim.min_deg, lim.max_deg)(rng));
    }
    starts.push_back(std::move(x));
  }
  return starts;
}

OptimizationResult merge(const HumanModel& model, const Posture& q_init, const LoadSpec& load,
                         const OptimizationSpec& spec,
                         const std::vector<RestartOutcome>& outcomes) {
  OptimizationResult res;
  res.objective_init = objective(model, q_init, load, spec.weights);
  const ConstraintReport init_report = evaluate_constraints(model, q_init, load, spec);

  int best = -1;
  double best_penalty = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    res.iterations += outcomes[r].iterations;
    best_penalty = std::min(best_penalty, outcomes[r].penalty);
    if (!outcomes[r].feasible) continue;
    if (best < 0 || outcomes[r].objective < outcomes[static_cast<std::size_t>(best)].objective) {
      best = static_cast<int>(r);
    }
  }

  if (init_report.feasible &&
      (best < 0 || res.objective_init <= outcomes[static_cast<std::size_t>(best)].objective)) {
    res.q_d = q_init;
    res.objective_final = res.objective_init;
    res.report = init_report;
    res.best_restart = -1;
    return res;
  }
  if (best < 0) {
    throw InfeasibleError("no feasible posture found after all restarts", best_penalty);
  }
  const RestartOutcome& win = outcomes[static_cast<std::size_t>(best)];
  res.q_d = win.q;
  res.q_d.timestamp = q_init.timestamp;
  res.objective_final = win.objective;
  res.report = evaluate_constraints(model, res.q_d, load, spec);
  res.best_restart = best;
  return res;
}

OptimizationResult optimize_impl(const HumanModel& model, const Posture& q_init,
                                 const LoadSpec& load, const OptimizationSpec& spec_in,
                                 bool parallel) {
  const OptimizationSpec spec = resolved(model, q_init, spec_in);
  if (load.mass < 0.0) throw InputError("load mass must be >= 0");

  const double f0 = objective(model, q_init, load, spec.weights);
  const ConstraintReport r0 = evaluate_constraints(model, q_init, load, spec);
  if (f0 == 0.0 && r0.feasible) {
    return OptimizationResult{q_init, 0.0, 0.0, r0, 0, -1};
  }

  const PenaltyProblem prob(model, q_init, load, spec);
  const auto starts = start_points(model, q_init, prob, spec.solver);
  std::vector<RestartOutcome> outcomes(starts.size());
  const auto count = static_cast<long>(starts.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long r = 0; r < count; ++r) {
      outcomes[static_cast<std::size_t>(r)] =
          run_restart(prob, model, load, spec, starts[static_cast<std::size_t>(r)]);
    }
  } else {
    for (long r = 0; r < count; ++r) {
      outcomes[static_cast<std::size_t>(r)] =
          run_restart(prob, model, load, spec, starts[static_cast<std::size_t>(r)]);
    }
  }
  return merge(model, q_init, load, spec, outcomes);
}

}  // namespace

OptimizationResult optimize_posture(const HumanModel& model, const Posture& q_init,
                                    const LoadSpec& load, const OptimizationSpec& spec) {
  return optimize_impl(model, q_init, load, spec, true);
}

OptimizationResult optimize_posture_serial(const HumanModel& model, const Posture& q_init,
                                           const LoadSpec& load, const OptimizationSpec& spec) {
  return optimize_impl(model, q_init, load, spec, false);
}

}  // namespace ergoguide
