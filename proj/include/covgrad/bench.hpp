#pragma once

#include <string>

#include "covgrad/gradcheck.hpp"

namespace covgrad {

struct TimingStats {
  std::string method;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;  // sample std; 0 for a single repetition
  int repetitions = 0;
};

struct BenchReport {
  TimingStats analytical;         // forward pass + backward sweep
  TimingStats finite_difference;  // one-sided differences, N*d_u + 1 forward passes
  int horizon = 0, state_dim = 0, control_dim = 0;
  double speedup() const { return finite_difference.mean_seconds / analytical.mean_seconds; }
};

TimingStats time_analytical_gradient(const BeliefState& initial, const ControlSequence& controls,
                                     const SystemModel& model, const LossSpec& spec,
                                     int repetitions);
TimingStats time_fd_gradient(const BeliefState& initial, const ControlSequence& controls,
                             const SystemModel& model, const LossSpec& spec, int repetitions);

BenchReport run_bench(const BeliefState& initial, const ControlSequence& controls,
                      const SystemModel& model, const LossSpec& spec, int repetitions);

void write_bench_csv(const std::string& path, const BenchReport& report);

}  // namespace covgrad
