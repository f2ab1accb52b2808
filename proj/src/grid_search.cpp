#include "ergoguide/grid_search.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {

struct Axis {
  std::size_t joint;
  double start;
  std::uint64_t count;
};

std::vector<Axis> make_axes(const HumanModel& model, const OptimizationSpec& spec,
                            double resolution_deg) {
  if (!(resolution_deg > 0.0)) throw InputError("grid resolution must be > 0");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < kJointCount; ++i) {
    if (!spec.active[i]) continue;
    const JointLimit& lim = model.limits()[i];
    const auto steps =
        static_cast<std::uint64_t>(std::floor((lim.max_deg - lim.min_deg) / resolution_deg + 1e-9));
    axes.push_back({i, lim.min_deg, steps + 1});
  }
  return axes;
}

std::uint64_t total_points(const std::vector<Axis>& axes) {
  std::uint64_t n = 1;
  for (const Axis& a : axes) {
    if (n > kMaxGridPoints) break;
    n *= a.count;
  }
  return n;
}

Posture decode(const std::vector<Axis>& axes, const Posture& reference, double res,
               std::uint64_t linear) {
  Posture q = reference;
  for (std::size_t k = axes.size(); k-- > 0;) {
    const Axis& a = axes[k];
    const std::uint64_t digit = linear % a.count;
    linear /= a.count;
    q.angles[a.joint] = a.start + static_cast<double>(digit) * res;
  }
  return q;
}

struct Best {
  double objective = std::numeric_limits<double>::infinity();
  std::uint64_t linear = std::numeric_limits<std::uint64_t>::max();

  void offer(double f, std::uint64_t idx) {
    if (f < objective || (f == objective && idx < linear)) {
      objective = f;
      linear = idx;
    }
  }
};

struct Prepared {
  OptimizationSpec spec;
  std::vector<Axis> axes;
  std::uint64_t n = 0;
};

Prepared prepare(const HumanModel& model, const Posture& reference, const OptimizationSpec& spec,
                 double resolution_deg) {
  spec.validate();
  Prepared p{spec, make_axes(model, spec, resolution_deg), 0};
  if (!p.spec.task.z_ref) p.spec.task.z_ref = forward_kinematics(model, reference).object_height;
  p.n = total_points(p.axes);
  if (p.n >= kMaxGridPoints) {
    throw InputError("grid has >= 1e7 points; use a coarser resolution");
  }
  return p;
}

std::optional<GridResult> finish(const Prepared& p, const Posture& reference, double res,
                                 const Best& best, std::uint64_t feasible) {
  if (feasible == 0) return std::nullopt;
  GridResult r;
  r.posture = decode(p.axes, reference, res, best.linear);
  r.objective = best.objective;
  r.evaluated = p.n;
  r.feasible_count = feasible;
  return r;
}

}  // namespace

std::uint64_t grid_size(const HumanModel& model, const OptimizationSpec& spec,
                        double resolution_deg) {
  return total_points(make_axes(model, spec, resolution_deg));
}

std::optional<GridResult> grid_oracle_serial(const HumanModel& model, const Posture& reference,
                                             const LoadSpec& load, const OptimizationSpec& spec,
                                             double resolution_deg) {
  const Prepared p = prepare(model, reference, spec, resolution_deg);
  Best best;
  std::uint64_t feasible = 0;
  for (std::uint64_t i = 0; i < p.n; ++i) {
    const Posture q = decode(p.axes, reference, resolution_deg, i);
    if (!evaluate_constraints(model, q, load, p.spec).feasible) continue;
    ++feasible;
    best.offer(objective(model, q, load, p.spec.weights), i);
  }
  return finish(p, reference, resolution_deg, best, feasible);
}

std::optional<GridResult> grid_oracle(const HumanModel& model, const Posture& reference,
                                      const LoadSpec& load, const OptimizationSpec& spec,
                                      double resolution_deg) {
  const Prepared p = prepare(model, reference, spec, resolution_deg);
  Best best;
  std::uint64_t feasible = 0;
  const auto n = static_cast<long long>(p.n);

#pragma omp parallel
  {
    Best local;
    std::uint64_t local_feasible = 0;
#pragma omp for schedule(static) nowait
    for (long long i = 0; i < n; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      const Posture q = decode(p.axes, reference, resolution_deg, idx);
      if (!evaluate_constraints(model, q, load, p.spec).feasible) continue;
      ++local_feasible;
      local.offer(objective(model, q, load, p.spec.weights), idx);
    }
#pragma omp critical(ergoguide_grid_merge)
    {
      feasible += local_feasible;
      best.offer(local.objective, local.linear);
    }
  }
  return finish(p, reference, resolution_deg, best, feasible);
}

}  // namespace ergoguide
