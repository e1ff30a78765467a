#include "covgrad/bench.hpp"

#include <chrono>
#include <cmath>
#include <vector>

#include "covgrad/backprop.hpp"
#include "covgrad/csv_io.hpp"

#include <fstream>
#include <iomanip>

namespace covgrad {
namespace {

template <typename Fn>
TimingStats Time(const std::string& method, int repetitions, Fn&& fn) {
  if (repetitions < 1) throw ContractError("repetitions must be >= 1");
  std::vector<double> samples;
  volatile double sink = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    sink = sink + fn();
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  TimingStats s;
  s.method = method;
  s.repetitions = repetitions;
  for (double v : samples) s.mean_seconds += v;
  s.mean_seconds /= repetitions;
  if (repetitions > 1) {
    double acc = 0.0;
    for (double v : samples) acc += (v - s.mean_seconds) * (v - s.mean_seconds);
    s.std_seconds = std::sqrt(acc / (repetitions - 1));
  }
  return s;
}

}  // namespace

TimingStats time_analytical_gradient(const BeliefState& initial, const ControlSequence& controls,
                                     const SystemModel& model, const LossSpec& spec,
                                     int repetitions) {
  return Time("analytical", repetitions, [&] {
    return gradient_of_loss(initial, controls, model, spec).grads.dL_du(0, 0);
  });
}

TimingStats time_fd_gradient(const BeliefState& initial, const ControlSequence& controls,
                             const SystemModel& model, const LossSpec& spec, int repetitions) {
  FdOptions fd;
  fd.central = false;
  return Time("finite_difference", repetitions, [&] {
    return fd_gradient_controls(initial, controls, model, spec, fd)(0, 0);
  });
}

BenchReport run_bench(const BeliefState& initial, const ControlSequence& controls,
                      const SystemModel& model, const LossSpec& spec, int repetitions) {
  BenchReport r;
  r.horizon = static_cast<int>(controls.size());
  r.state_dim = model.state_dim();
  r.control_dim = model.control_dim();
  r.analytical = time_analytical_gradient(initial, controls, model, spec, repetitions);
  r.finite_difference = time_fd_gradient(initial, controls, model, spec, repetitions);
  return r;
}

void write_bench_csv(const std::string& path, const BenchReport& report) {
  // method is textual, so this bypasses the numeric CsvTable writer.
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path + "'", 0);
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  out << "method,mean_seconds,std_seconds,N,d,d_u\n";
  for (const TimingStats* s : {&report.analytical, &report.finite_difference}) {
    out << s->method << ',' << s->mean_seconds << ',' << s->std_seconds << ',' << report.horizon
        << ',' << report.state_dim << ',' << report.control_dim << '\n';
  }
}

}  // namespace covgrad
