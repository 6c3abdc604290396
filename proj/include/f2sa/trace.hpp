#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace f2sa {

/// Diagnostics recorded at one checkpoint. Quantities that a problem cannot
/// provide are left empty and written as blank CSV cells.
struct TraceRecord {
  long k = 0;
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<double> eta;
  std::optional<double> grad_F_norm_sq;
  std::string grad_F_source = "none";  // exact | fd | none
  std::optional<double> proxy_norm;
  std::optional<double> dist_y;  // ||y - y*_lambda(x)||
  std::optional<double> dist_z;  // ||z - y*(x)||
  std::optional<double> train_loss;
  std::optional<double> val_loss;
  std::optional<double> potential;

  /// Numeric field by column name; throws DataError for unknown names.
  std::optional<double> field(std::string_view name) const;
};

struct Trace {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> rows;
};

/// Column names in file order.
const std::vector<std::string>& trace_columns();

void write_trace_csv(const Trace& trace, const std::string& path);
std::string trace_to_csv(const Trace& trace);
Trace read_trace_csv(const std::string& path);
Trace parse_trace_csv(const std::string& text, const std::string& origin = "<memory>");

}  // namespace f2sa
