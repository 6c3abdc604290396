#include "f2sa/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "f2sa/dataset.hpp"
#include "f2sa/error.hpp"
#include "f2sa/kernels.hpp"
#include "f2sa/quadratic.hpp"

namespace f2sa {

using json = nlohmann::ordered_json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::F2SA: return "F2SA";
    case Method::F3SA: return "F3SA";
    case Method::SOBO: return "SOBO";
    case Method::NoBO: return "NoBO";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  if (s == "F2SA") return Method::F2SA;
  if (s == "F3SA") return Method::F3SA;
  if (s == "SOBO") return Method::SOBO;
  if (s == "NoBO") return Method::NoBO;
  throw InvalidArgument("unknown algorithm '" + std::string(s) + "' (expected F2SA, F3SA, SOBO or NoBO)");
}

namespace {

/// Typed, path-aware view of one JSON object. Every key read is remembered so
/// that finish() can reject the leftovers.
class Fields {
 public:
  Fields(const json& j, std::string path, const std::string& origin)
      : j_(j), path_(std::move(path)), origin_(origin) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ConfigError(origin_ + ": " + (path.empty() ? "/" : path) + ": " + what);
  }

  std::string at(const char* key) const { return path_ + "/" + key; }

  const json* find(const char* key) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const char* key) {
    const json* v = find(key);
    if (!v) fail(at(key), "missing required key");
    return *v;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

  long long integer(const json& v, const std::string& path) const {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(path, "expected an integer");
  }

  std::uint64_t unsigned_integer(const json& v, const std::string& path) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const long long i = integer(v, path);
    if (i < 0) fail(path, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(i);
  }

  template <class Fn>
  void opt(const char* key, Fn&& fn) {
    if (const json* v = find(key)) fn(*v, at(key));
  }

  void num(const char* key, double& out) {
    opt(key, [&](const json& v, const std::string& p) { out = number(v, p); });
  }
  void num(const char* key, std::optional<double>& out) {
    opt(key, [&](const json& v, const std::string& p) { out = number(v, p); });
  }
  void positive(const char* key, double& out) {
    opt(key, [&](const json& v, const std::string& p) {
      out = number(v, p);
      if (!(out > 0.0)) fail(p, "must be positive");
    });
  }
  void nonnegative(const char* key, double& out) {
    opt(key, [&](const json& v, const std::string& p) {
      out = number(v, p);
      if (out < 0.0) fail(p, "must be nonnegative");
    });
  }
  template <class I>
  void integral(const char* key, I& out, long long lo, long long hi = std::numeric_limits<int>::max()) {
    opt(key, [&](const json& v, const std::string& p) {
      const long long i = integer(v, p);
      if (i < lo || i > hi) fail(p, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      out = static_cast<I>(i);
    });
  }
  void u64(const char* key, std::uint64_t& out) {
    opt(key, [&](const json& v, const std::string& p) { out = unsigned_integer(v, p); });
  }
  void boolean(const char* key, bool& out) {
    opt(key, [&](const json& v, const std::string& p) {
      if (!v.is_boolean()) fail(p, "expected true or false");
      out = v.get<bool>();
    });
  }
  void string(const char* key, std::string& out) {
    opt(key, [&](const json& v, const std::string& p) {
      if (!v.is_string()) fail(p, "expected a string");
      out = v.get<std::string>();
    });
  }
  /// String mapped through `convert`; conversion errors are reported at the key.
  template <class T, class Fn>
  void keyword(const char* key, T& out, Fn&& convert) {
    opt(key, [&](const json& v, const std::string& p) {
      if (!v.is_string()) fail(p, "expected a string");
      try {
        out = convert(v.get<std::string>());
      } catch (const InvalidArgument& e) {
        fail(p, e.what());
      }
    });
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == it.key();
      if (!known) fail(path_ + "/" + it.key(), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& origin_;
  std::vector<std::string> seen_;
};

std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col) + " (byte " + std::to_string(byte) + ")";
}

DataFiles read_data_files(const json& j, const std::string& path, const std::string& origin) {
  Fields f(j, path, origin);
  DataFiles d;
  f.keyword("format", d.format, [](const std::string& s) {
    dataset_format_from_string(s);
    return s;
  });
  d.train = [&] {
    const json& t = f.require("train");
    if (!t.is_string()) f.fail(f.at("train"), "expected a string");
    return t.get<std::string>();
  }();
  f.string("train_labels", d.train_labels);
  d.validation = [&] {
    const json& t = f.require("validation");
    if (!t.is_string()) f.fail(f.at("validation"), "expected a string");
    return t.get<std::string>();
  }();
  f.string("validation_labels", d.validation_labels);
  f.integral("num_classes", d.num_classes, 2, 1 << 20);
  f.integral("n", d.n, 0, std::numeric_limits<long>::max());
  f.integral("m", d.m, 0, std::numeric_limits<long>::max());
  if (d.format == "idx" && (d.train_labels.empty() || d.validation_labels.empty())) {
    f.fail(f.at("train_labels"), "idx data needs train_labels and validation_labels");
  }
  f.finish();
  return d;
}

ProblemConfig read_problem(const json& j, const std::string& origin) {
  Fields f(j, "/problem", origin);
  ProblemConfig p;
  f.keyword("name", p.name, [](const std::string& s) {
    if (s != "scalar_quadratic" && s != "quadratic" && s != "hypercleaning") {
      throw InvalidArgument("unknown problem '" + s + "' (expected scalar_quadratic, quadratic or hypercleaning)");
    }
    return s;
  });
  f.keyword("regime", p.regime, [](const std::string& s) { return noise_regime_from_string(s); });
  if (p.name == "scalar_quadratic") {
    f.nonnegative("sigma", p.sigma);
    f.num("y_target", p.y_target);
    f.positive("box", p.box);
  } else if (p.name == "quadratic") {
    f.nonnegative("sigma", p.sigma);
    f.integral("dx", p.dx, 1, 16);
    f.integral("dy", p.dy, 1, 1 << 16);
    f.u64("seed", p.seed);
    f.opt("conditioning", [&](const json& v, const std::string& path) {
      p.conditioning = f.number(v, path);
      if (p.conditioning < 1.0) f.fail(path, "must be at least 1");
    });
  } else {
    HypercleaningSetup& s = p.synthetic;
    f.integral("n", s.n, 1, std::numeric_limits<long>::max());
    f.integral("m", s.m, 1, std::numeric_limits<long>::max());
    f.integral("d", s.d, 1);
    f.integral("classes", s.classes, 2);
    f.positive("spread", s.spread);
    f.nonnegative("center_width", s.center_width);
    f.opt("corruption", [&](const json& v, const std::string& path) {
      s.corruption = f.number(v, path);
      if (s.corruption < 0.0 || s.corruption >= 1.0) f.fail(path, "must be in [0, 1)");
    });
    f.u64("data_seed", s.data_seed);
    f.positive("c", p.c);
    f.keyword("backend", p.backend, [](const std::string& b) {
      kernels::backend_from_string(b);
      return b;
    });
    if (const json* v = f.find("data")) p.data = read_data_files(*v, f.at("data"), origin);
  }
  f.finish();
  return p;
}

ScheduleOverrides read_schedule(const json& j, const std::string& origin) {
  Fields f(j, "/schedule", origin);
  ScheduleOverrides s;
  f.num("a", s.a);
  f.num("c", s.c);
  f.num("k0", s.k0);
  f.num("lambda0", s.lambda0);
  f.num("xi", s.xi);
  f.opt("T", [&](const json& v, const std::string& path) {
    const long long t = f.integer(v, path);
    if (t < 1 || t > 1'000'000) f.fail(path, "must be in [1, 1000000]");
    s.T = static_cast<int>(t);
  });
  f.num("c_alpha", s.c_alpha);
  f.num("c_gamma", s.c_gamma);
  f.num("c_eta", s.c_eta);
  f.num("c_xi", s.c_xi);
  f.boolean("force_unit_eta", s.force_unit_eta);
  f.finish();
  return s;
}

BaselineConfig read_baseline(const json& j, const std::string& origin) {
  Fields f(j, "/baseline", origin);
  BaselineConfig b;
  f.nonnegative("step_size", b.step_size);
  f.integral("inner_steps", b.inner_steps, 0);
  f.nonnegative("inner_step_size", b.inner_step_size);
  f.finish();
  return b;
}

json write_problem(const ProblemConfig& p) {
  json j;
  j["name"] = p.name;
  j["regime"] = std::string(to_string(p.regime));
  if (p.name == "scalar_quadratic") {
    j["sigma"] = p.sigma;
    j["y_target"] = p.y_target;
    j["box"] = p.box;
  } else if (p.name == "quadratic") {
    j["sigma"] = p.sigma;
    j["dx"] = p.dx;
    j["dy"] = p.dy;
    j["seed"] = p.seed;
    j["conditioning"] = p.conditioning;
  } else {
    const HypercleaningSetup& s = p.synthetic;
    j["n"] = s.n;
    j["m"] = s.m;
    j["d"] = s.d;
    j["classes"] = s.classes;
    j["spread"] = s.spread;
    j["center_width"] = s.center_width;
    j["corruption"] = s.corruption;
    j["data_seed"] = s.data_seed;
    j["c"] = p.c;
    j["backend"] = p.backend;
    if (p.data) {
      const DataFiles& d = *p.data;
      json dj;
      dj["format"] = d.format;
      dj["train"] = d.train;
      if (!d.train_labels.empty()) dj["train_labels"] = d.train_labels;
      dj["validation"] = d.validation;
      if (!d.validation_labels.empty()) dj["validation_labels"] = d.validation_labels;
      dj["num_classes"] = d.num_classes;
      dj["n"] = d.n;
      dj["m"] = d.m;
      j["data"] = dj;
    }
  }
  return j;
}

json write_schedule(const ScheduleOverrides& s) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("a", s.a);
  put("c", s.c);
  put("k0", s.k0);
  put("lambda0", s.lambda0);
  put("xi", s.xi);
  if (s.T) j["T"] = *s.T;
  put("c_alpha", s.c_alpha);
  put("c_gamma", s.c_gamma);
  put("c_eta", s.c_eta);
  put("c_xi", s.c_xi);
  if (s.force_unit_eta) j["force_unit_eta"] = true;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(origin + ": " + position_of(text, byte) + ": " + what);
  }
  Fields f(root, "", origin);
  ExperimentConfig c;
  c.problem = read_problem(f.require("problem"), origin);
  f.keyword("algorithm", c.algorithm, [](const std::string& s) { return method_from_string(s); });
  if (const json* v = f.find("schedule")) c.schedule = read_schedule(*v, origin);
  if (const json* v = f.find("baseline")) c.baseline = read_baseline(*v, origin);
  f.integral("K", c.K, 0, std::numeric_limits<long>::max());
  f.opt("seeds", [&](const json& v, const std::string& path) {
    if (!v.is_array()) f.fail(path, "expected an array of seeds");
    c.seeds.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      c.seeds.push_back(f.unsigned_integer(v[i], path + "/" + std::to_string(i)));
    }
  });
  f.integral("cadence", c.cadence, 0, std::numeric_limits<long>::max());
  f.integral("batch", c.batch, 1, std::numeric_limits<std::uint32_t>::max());
  f.boolean("share_x_token", c.share_x_token);
  f.keyword("grad_F", c.grad_F, [](const std::string& s) { return grad_f_mode_from_string(s); });
  f.opt("x0", [&](const json& v, const std::string& path) {
    if (!v.is_array()) f.fail(path, "expected an array of numbers");
    std::vector<double> x;
    for (std::size_t i = 0; i < v.size(); ++i) x.push_back(f.number(v[i], path + "/" + std::to_string(i)));
    c.x0 = std::move(x);
  });
  f.string("output_dir", c.output_dir);
  f.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["problem"] = write_problem(c.problem);
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["schedule"] = write_schedule(c.schedule);
  j["baseline"] = {{"step_size", c.baseline.step_size},
                   {"inner_steps", c.baseline.inner_steps},
                   {"inner_step_size", c.baseline.inner_step_size}};
  j["K"] = c.K;
  j["seeds"] = c.seeds;
  j["cadence"] = c.cadence;
  j["batch"] = c.batch;
  j["share_x_token"] = c.share_x_token;
  j["grad_F"] = std::string(to_string(c.grad_F));
  if (c.x0) j["x0"] = *c.x0;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("F2SA_DATA_DIR");
  if (!root || !*root) return path;
  return (fs::path(root) / path).string();
}

std::unique_ptr<BilevelProblem> make_problem(const ProblemConfig& p) {
  if (p.name == "scalar_quadratic") {
    return std::make_unique<QuadraticBilevel>(make_scalar_quadratic(p.y_target, p.regime, p.sigma, p.box));
  }
  if (p.name == "quadratic") {
    return std::make_unique<QuadraticBilevel>(make_quadratic(p.dx, p.dy, p.seed, p.conditioning, p.regime, p.sigma));
  }
  if (p.name != "hypercleaning") throw ConfigError("unknown problem '" + p.name + "'");

  HypercleaningProblem::Options opts;
  opts.c = p.c;
  opts.regime = p.regime;
  opts.backend = kernels::backend_from_string(p.backend);
  if (!p.data) {
    HypercleaningInstance inst = make_hypercleaning_instance(p.synthetic);
    return std::make_unique<HypercleaningProblem>(inst.train, inst.validation, opts);
  }
  const DataFiles& d = *p.data;
  const DatasetFormat fmt = dataset_format_from_string(d.format);
  Dataset train = load_dataset(resolve_data_path(d.train), fmt, d.num_classes, resolve_data_path(d.train_labels));
  Dataset val = load_dataset(resolve_data_path(d.validation), fmt, d.num_classes,
                             resolve_data_path(d.validation_labels));
  if (d.n > 0) train = take_prefix(train, d.n);
  if (d.m > 0) val = take_prefix(val, d.m);
  Corruption corr = corrupt_labels(train.labels, p.synthetic.corruption, train.num_classes,
                                   hash_combine(p.synthetic.data_seed, 3));
  train.labels = std::move(corr.labels);
  return std::make_unique<HypercleaningProblem>(train, val, opts);
}

}  // namespace f2sa
