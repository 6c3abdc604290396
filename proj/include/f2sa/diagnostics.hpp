#pragma once

#include "f2sa/oracle.hpp"
#include "f2sa/solver.hpp"
#include "f2sa/trace.hpp"

namespace f2sa {

/// Builds the checkpoint row for `state`. `model` is the weight vector whose
/// dataset losses are reported (the lower-level iterate for the penalty
/// methods). eta is recorded only when `with_eta` is set.
TraceRecord checkpoint_record(const BilevelProblem& problem, const SolverState& state, const Vector& model,
                              bool with_eta, GradFMode mode);

/// Potential (F(x) - F*) + l_g1 lambda ||y - y*_lambda(x)||^2 + (lambda l_g1 / 2) ||z - y*(x)||^2.
/// Requires closed-form analytics.
double potential_value(const BilevelProblem& problem, const Vector& x, const Vector& y, const Vector& z,
                       double lambda);

/// Squared hypergradient norm by the requested route, or nullopt when the
/// problem cannot supply it. Sets `source` to "exact", "fd" or "none".
std::optional<double> hypergradient_norm_sq(const BilevelProblem& problem, const Vector& x, GradFMode mode,
                                            const Vector* warm_start, std::string& source);

}  // namespace f2sa
