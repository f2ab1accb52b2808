#include <benchmark/benchmark.h>

#include "ergoguide/grid_search.hpp"
#include "ergoguide/harness.hpp"
#include "ergoguide/posture_opt.hpp"

using namespace ergoguide;

namespace {

struct Problem {
  HumanModel model = HumanModel::standard();
  LoadSpec load{4.0};
  Posture reference;
  OptimizationSpec spec;

  Problem() {
    reference = reaching_posture(model, 0.5, 0.5, load);
    spec.active = {false, false, true, true, true};
  }
};

const Problem& problem() {
  static const Problem p;
  return p;
}

void BM_GridSerial(benchmark::State& st) {
  const Problem& p = problem();
  const double res = static_cast<double>(st.range(0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(grid_oracle_serial(p.model, p.reference, p.load, p.spec, res));
  }
  st.counters["points"] = static_cast<double>(grid_size(p.model, p.spec, res));
}

void BM_GridParallel(benchmark::State& st) {
  const Problem& p = problem();
  const double res = static_cast<double>(st.range(0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(grid_oracle(p.model, p.reference, p.load, p.spec, res));
  }
  st.counters["points"] = static_cast<double>(grid_size(p.model, p.spec, res));
}

void BM_OptimizerSerial(benchmark::State& st) {
  const Problem& p = problem();
  OptimizationSpec s;
  s.solver.restarts = static_cast<int>(st.range(0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(optimize_posture_serial(p.model, p.reference, p.load, s));
  }
}

void BM_OptimizerParallel(benchmark::State& st) {
  const Problem& p = problem();
  OptimizationSpec s;
  s.solver.restarts = static_cast<int>(st.range(0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(optimize_posture(p.model, p.reference, p.load, s));
  }
}

void BM_ModalityTrial(benchmark::State& st) {
  SessionConfig c;
  c.agent = "noisy";
  c.joint_set = "arm";
  c.modality = Modality::Pattern;
  const TargetSequence seq = target_sequence(c.protocol, "arm");
  for (auto _ : st) benchmark::DoNotOptimize(run_modality_trial(c, seq));
}

}  // namespace

BENCHMARK(BM_GridSerial)->Arg(5)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridParallel)->Arg(5)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OptimizerSerial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OptimizerParallel)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModalityTrial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
