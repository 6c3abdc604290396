#include "f2sa/analysis.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "f2sa/error.hpp"

namespace f2sa {

namespace {

std::string trace_label(const Trace& t) { return t.algorithm + " seed " + std::to_string(t.seed); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

FieldStat field_stat(const std::vector<double>& values) {
  FieldStat st;
  st.count = static_cast<long>(values.size());
  if (values.empty()) return st;
  for (double v : values) st.mean += v;
  st.mean /= static_cast<double>(st.count);
  if (st.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.std_error = std::sqrt(ss / static_cast<double>(st.count - 1) / static_cast<double>(st.count));
  }
  return st;
}

RateFit fit_power_law(const std::vector<double>& k, const std::vector<double>& value) {
  if (k.size() != value.size()) throw DataError("fit needs equally many k and value entries");
  if (k.size() < 10) {
    throw DataError("fit needs at least 10 checkpoints, got " + std::to_string(k.size()));
  }
  const double n = static_cast<double>(k.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i] > 0.0)) throw DataError("fit needs k > 0 (row " + std::to_string(i) + ")");
    if (!(value[i] > 0.0) || !std::isfinite(value[i])) {
      throw DataError("nonpositive value " + format_double(value[i]) + " at k=" + format_double(k[i]));
    }
    const double lx = std::log(k[i]), ly = std::log(value[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw DataError("fit needs at least two distinct k values");
  RateFit f;
  f.points = static_cast<long>(k.size());
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double mean_y = sy / n;
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double lx = std::log(k[i]), ly = std::log(value[i]);
    const double r = ly - (f.intercept + f.slope * lx);
    ss_res += r * r;
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

RateFit fit_rate(const std::vector<Trace>& traces, long k_min, long k_max, const std::string& field) {
  if (traces.empty()) throw DataError("fit_rate needs at least one trace");
  if (k_min > k_max) throw DataError("k_min exceeds k_max");
  std::vector<double> ks, means;
  const Trace& first = traces.front();
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    const long k = first.rows[i].k;
    if (k < k_min || k > k_max) continue;
    double sum = 0.0;
    for (const auto& t : traces) {
      if (i >= t.rows.size() || t.rows[i].k != k) {
        throw DataError(trace_label(t) + " does not share the checkpoint grid (row " + std::to_string(i) + ")");
      }
      const std::optional<double> v = t.rows[i].field(field);
      if (!v) throw DataError(trace_label(t) + ": missing " + field + " at row " + std::to_string(i) + " (k=" +
                              std::to_string(k) + ")");
      if (!(*v > 0.0)) {
        throw DataError(trace_label(t) + ": nonpositive " + field + " = " + format_double(*v) + " at row " +
                        std::to_string(i) + " (k=" + std::to_string(k) + ")");
      }
      sum += *v;
    }
    ks.push_back(static_cast<double>(k));
    means.push_back(sum / static_cast<double>(traces.size()));
  }
  if (ks.size() < 10) {
    throw DataError("fit_rate needs at least 10 checkpoints in [" + std::to_string(k_min) + ", " +
                    std::to_string(k_max) + "], found " + std::to_string(ks.size()));
  }
  return fit_power_law(ks, means);
}

std::string plot_data_csv(const std::vector<Trace>& traces, const std::vector<std::string>& fields) {
  if (traces.empty()) throw DataError("plot data needs at least one trace");
  if (fields.empty()) throw DataError("plot data needs at least one field");
  const Trace& ref = traces.front();
  for (const auto& t : traces) {
    bool same = t.rows.size() == ref.rows.size();
    for (std::size_t i = 0; same && i < t.rows.size(); ++i) same = t.rows[i].k == ref.rows[i].k;
    if (!same) throw DataError(trace_label(t) + " has a different checkpoint grid than " + trace_label(ref));
  }
  for (const auto& f : fields) {
    if (f == "k") throw DataError("'k' is the index column, not a plot field");
    TraceRecord{}.field(f);  // rejects unknown names
  }

  std::vector<std::string> algorithms;
  for (const auto& t : traces) {
    bool seen = false;
    for (const auto& a : algorithms) seen = seen || a == t.algorithm;
    if (!seen) algorithms.push_back(t.algorithm);
  }

  std::ostringstream os;
  os << "k";
  for (const auto& a : algorithms) {
    for (const auto& f : fields) os << ',' << a << '_' << f << "_mean," << a << '_' << f << "_stderr";
  }
  os << '\n';
  for (std::size_t i = 0; i < ref.rows.size(); ++i) {
    os << ref.rows[i].k;
    for (const auto& a : algorithms) {
      for (const auto& f : fields) {
        std::vector<double> values;
        for (const auto& t : traces) {
          if (t.algorithm != a) continue;
          if (auto v = t.rows[i].field(f)) values.push_back(*v);
        }
        if (values.empty()) {
          os << ",,";
          continue;
        }
        const FieldStat st = field_stat(values);
        os << ',' << format_double(st.mean) << ',' << format_double(st.std_error);
      }
    }
    os << '\n';
  }
  return os.str();
}

void emit_plot_data(const std::vector<Trace>& traces, const std::vector<std::string>& fields,
                    const std::string& out_path) {
  const std::string text = plot_data_csv(traces, fields);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  out << text;
}

}  // namespace f2sa
