#pragma once

#include <cstdint>
#include <optional>

#include "ergoguide/posture_opt.hpp"

namespace ergoguide {

struct GridResult {
  Posture posture;
  double objective = 0.0;
  std::uint64_t evaluated = 0;
  std::uint64_t feasible_count = 0;
};

inline constexpr std::uint64_t kMaxGridPoints = 10'000'000;

/// Number of grid points for the active joints of `spec` at `resolution_deg`.
std::uint64_t grid_size(const HumanModel& model, const OptimizationSpec& spec,
                        double resolution_deg);

/// Exhaustive scan of the joint-limit box on a grid anchored at q_min.
/// Inactive joints are held at `reference`. Returns nullopt when no grid
/// point is feasible. Ties resolve to the lowest linear grid index.
std::optional<GridResult> grid_oracle(const HumanModel& model, const Posture& reference,
                                      const LoadSpec& load, const OptimizationSpec& spec,
                                      double resolution_deg);

/// Single-threaded reference of grid_oracle.
std::optional<GridResult> grid_oracle_serial(const HumanModel& model, const Posture& reference,
                                             const LoadSpec& load, const OptimizationSpec& spec,
                                             double resolution_deg);

}  // namespace ergoguide
