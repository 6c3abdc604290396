#pragma once

#include <string>
#include <vector>

#include "f2sa/trace.hpp"

namespace f2sa {

/// Seed mean and standard error of one field at one checkpoint. `count` seeds
/// contributed a value.
struct FieldStat {
  double mean = 0.0;
  double std_error = 0.0;
  long count = 0;
};

/// Two-pass mean and standard error; std_error is 0 for fewer than two values.
FieldStat field_stat(const std::vector<double>& values);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  long points = 0;
};

/// Least squares of log(value) against log(k). Needs at least 10 points with
/// k > 0 and value > 0; otherwise DataError.
RateFit fit_power_law(const std::vector<double>& k, const std::vector<double>& value);

/// Seed-averages `field` over the traces at each checkpoint with
/// k_min <= k <= k_max, then fits a power law. A nonpositive or missing value
/// raises DataError naming the trace and row.
RateFit fit_rate(const std::vector<Trace>& traces, long k_min, long k_max, const std::string& field);

/// Wide CSV: a k column, then for each algorithm (in order of first
/// appearance) and field a <alg>_<field>_mean and <alg>_<field>_stderr column.
/// All traces must share one checkpoint grid. Empty cells mark missing values.
std::string plot_data_csv(const std::vector<Trace>& traces, const std::vector<std::string>& fields);
void emit_plot_data(const std::vector<Trace>& traces, const std::vector<std::string>& fields,
                    const std::string& out_path);

}  // namespace f2sa
