#include "f2sa/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "f2sa/error.hpp"

namespace f2sa {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_cell(const std::string& s, const std::string& where) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

}  // namespace

std::optional<double> TraceRecord::field(std::string_view name) const {
  if (name == "k") return static_cast<double>(k);
  if (name == "lambda") return lambda;
  if (name == "alpha") return alpha;
  if (name == "gamma") return gamma;
  if (name == "eta") return eta;
  if (name == "grad_F_norm_sq") return grad_F_norm_sq;
  if (name == "proxy_norm") return proxy_norm;
  if (name == "dist_y") return dist_y;
  if (name == "dist_z") return dist_z;
  if (name == "train_loss") return train_loss;
  if (name == "val_loss") return val_loss;
  if (name == "potential") return potential;
  throw DataError("unknown trace field '" + std::string(name) + "'");
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "algorithm", "seed",   "k",      "lambda",     "alpha",    "gamma",    "eta",      "grad_F_norm_sq",
      "grad_F_source", "proxy_norm", "dist_y", "dist_z", "train_loss", "val_loss", "potential"};
  return cols;
}

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream os;
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : trace.rows) {
    os << trace.algorithm << ',' << trace.seed << ',' << r.k << ',' << format_double(r.lambda) << ','
       << format_double(r.alpha) << ',' << format_double(r.gamma) << ',' << cell(r.eta) << ','
       << cell(r.grad_F_norm_sq) << ',' << r.grad_F_source << ',' << cell(r.proxy_norm) << ',' << cell(r.dist_y)
       << ',' << cell(r.dist_z) << ',' << cell(r.train_loss) << ',' << cell(r.val_loss) << ','
       << cell(r.potential) << '\n';
  }
  return os.str();
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << trace_to_csv(trace);
  if (!out) throw DataError("failed writing '" + path + "'");
}

Trace parse_trace_csv(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw DataError(origin + ": empty trace file");
  const auto header = split_csv_line(line);
  if (header != trace_columns()) throw DataError(origin + ": unexpected trace header");
  Trace trace;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    const std::string where = origin + " row " + std::to_string(row);
    if (cells.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " cells");
    if (trace.rows.empty()) {
      trace.algorithm = cells[0];
      trace.seed = static_cast<std::uint64_t>(parse_cell(cells[1], where).value_or(0.0));
    } else if (cells[0] != trace.algorithm) {
      throw DataError(where + ": algorithm changes within one trace");
    }
    TraceRecord r;
    r.k = static_cast<long>(parse_cell(cells[2], where).value_or(0.0));
    r.lambda = parse_cell(cells[3], where).value_or(NAN);
    r.alpha = parse_cell(cells[4], where).value_or(NAN);
    r.gamma = parse_cell(cells[5], where).value_or(NAN);
    r.eta = parse_cell(cells[6], where);
    r.grad_F_norm_sq = parse_cell(cells[7], where);
    r.grad_F_source = cells[8];
    r.proxy_norm = parse_cell(cells[9], where);
    r.dist_y = parse_cell(cells[10], where);
    r.dist_z = parse_cell(cells[11], where);
    r.train_loss = parse_cell(cells[12], where);
    r.val_loss = parse_cell(cells[13], where);
    r.potential = parse_cell(cells[14], where);
    if (!trace.rows.empty() && r.k <= trace.rows.back().k) throw DataError(where + ": k is not increasing");
    trace.rows.push_back(r);
  }
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str(), path);
}

}  // namespace f2sa
