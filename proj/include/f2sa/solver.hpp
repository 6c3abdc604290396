#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "f2sa/schedule.hpp"
#include "f2sa/trace.hpp"
#include "f2sa/types.hpp"

namespace f2sa {

/// Iterates of a first-order bilevel solver.
struct SolverState {
  Vector x;
  Vector y;  // tracks y*_lambda(x)
  Vector z;  // tracks y*(x)
  ScheduleState schedule;
  long k = 0;
};

/// How the hypergradient norm in the trace is obtained.
enum class GradFMode { Auto, Exact, FiniteDifference, Off };

std::string_view to_string(GradFMode m);
GradFMode grad_f_mode_from_string(std::string_view s);

struct RunOptions {
  long K = 0;
  std::uint64_t seed = 0;
  long cadence = 0;  // checkpoint spacing; 0 selects ceil(K / 200)
  std::uint32_t batch = 1;
  bool share_x_token = false;  // F2SA: evaluate h_gxy and h_gxz on one sample
  std::optional<Vector> x0, y0, z0;  // zeros when unset
  GradFMode grad_F = GradFMode::Auto;
  /// Observer called after every completed outer iteration.
  std::function<void(const SolverState&)> on_iteration;
};

enum class RunStatus { Ok, NumericFailure };

struct RunResult {
  SolverState final_state;
  Trace trace;
  long R = -1;  // uniform evaluation index in {0, ..., K-1}; -1 when K = 0
  RunStatus status = RunStatus::Ok;
  std::string message;
  std::vector<std::string> warnings;  // step-size conditions violated at k = 0
};

long effective_cadence(long K, long cadence);

/// Uniform index in {0, ..., K-1}, drawn from a stream separate from the
/// sample tokens so it never perturbs the iterates.
long draw_evaluation_index(std::uint64_t seed, long K);

/// Throws NumericFailure when v is non-finite or its norm exceeds 1e12.
void guard_iterate(const Vector& v, const char* name, long k, long t = -1);

}  // namespace f2sa
