#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "ergoguide/body_model.hpp"
#include "ergoguide/loading.hpp"

namespace ergoguide {

using JointWeights = std::array<double, kJointCount>;

/// Keeps the held object near its starting height: |z_obj(q) - z_ref| <= z_th.
struct TaskConstraint {
  std::optional<double> z_ref;  // m; taken from q_init when unset
  double z_th = 0.10;           // m
};

struct SolverOptions {
  int restarts = 12;
  int max_iters = 3000;            // per Nelder-Mead run
  double penalty_coefficient = 1e4;  // first stage; grows x100 per stage
  int penalty_stages = 4;
  std::uint64_t seed = 1;
};

struct OptimizationSpec {
  JointWeights weights{1.0, 1.0, 1.0, 1.0, 1.0};
  TaskConstraint task;
  SolverOptions solver;
  /// Decision variables; inactive joints stay at their q_init value.
  std::array<bool, kJointCount> active{true, true, true, true, true};

  void validate() const;
};

inline constexpr double kFeasibilityTolerance = 1e-6;

struct ConstraintReport {
  std::array<double, kJointCount> bounds{};  // deg, max(q_min - q, q - q_max)
  double stability = 0.0;                    // m, loaded CoP outside the support interval
  double task = 0.0;                         // m
  bool feasible = false;

  double max_slack() const;
};

/// (1/2) * sum_k w_k * tau_k^2 over the overloading torques.
double objective(const HumanModel& model, const Posture& q, const LoadSpec& load,
                 const JointWeights& weights);
double objective(const TorqueVector& tau, const JointWeights& weights);

/// Abscissa of the CoP with the load attached, from the static mass balance.
double loaded_cop_x(const HumanModel& model, const Posture& q, const LoadSpec& load);

/// `z_ref` must be resolved (set) in spec.task.
ConstraintReport evaluate_constraints(const HumanModel& model, const Posture& q,
                                      const LoadSpec& load, const OptimizationSpec& spec);

struct OptimizationResult {
  Posture q_d;
  double objective_init = 0.0;
  double objective_final = 0.0;
  ConstraintReport report;
  int iterations = 0;
  int best_restart = -1;  // -1 when q_init was returned
};

/// Multi-start Nelder-Mead on the quadratic-penalty objective. Restarts run in
/// parallel; the winner is chosen by (objective, restart index).
OptimizationResult optimize_posture(const HumanModel& model, const Posture& q_init,
                                    const LoadSpec& load, const OptimizationSpec& spec);

/// Serial reference of optimize_posture; bitwise identical result.
OptimizationResult optimize_posture_serial(const HumanModel& model, const Posture& q_init,
                                           const LoadSpec& load, const OptimizationSpec& spec);

}  // namespace ergoguide
