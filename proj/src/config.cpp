#include "condmv/config.hpp"
#include "condmv/schedule.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace condmv {

using json = nlohmann::json;

std::string to_string(Comparison c) {
  return c == Comparison::particle_vs_oracle ? "particle-vs-oracle" : "n-vs-n";
}

bool operator==(const SimConfig& a, const SimConfig& b) {
  return a.model == b.model && a.model_options.saturation == b.model_options.saturation &&
         a.model_options.entropic_reg == b.model_options.entropic_reg &&
         a.model_options.degree == b.model_options.degree && a.model_options.coupling == b.model_options.coupling &&
         a.n == b.n && a.h == b.h && a.epsilon == b.epsilon && a.dt == b.dt && a.T == b.T && a.seed == b.seed &&
         a.kernel == b.kernel && a.strategy == b.strategy && a.record_times == b.record_times;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.sim == b.sim && a.schedule == b.schedule; }

bool operator==(const ExperimentPlan& a, const ExperimentPlan& b) {
  auto hist = [](const HistogramSpec& h) { return std::tie(h.block, h.component, h.bins, h.lo, h.hi); };
  return a.base == b.base && a.schedule == b.schedule && a.auto_h == b.auto_h && a.auto_epsilon == b.auto_epsilon &&
         a.n_values == b.n_values && a.h_values == b.h_values && a.epsilon_values == b.epsilon_values &&
         a.dt_values == b.dt_values && a.seed_values == b.seed_values && a.comparisons == b.comparisons &&
         a.oracle_copies == b.oracle_copies && a.oracle_seed == b.oracle_seed && hist(a.histogram) == hist(b.histogram) &&
         a.max_runs == b.max_runs && a.write_snapshots == b.write_snapshots;
}

std::int64_t ExperimentPlan::cell_count() const {
  auto len = [](std::size_t s) { return static_cast<std::int64_t>(std::max<std::size_t>(s, 1)); };
  return len(n_values.size()) * len(h_values.size()) * len(epsilon_values.size()) * len(dt_values.size()) *
         len(seed_values.size());
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Tracks which keys of an object were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    return true;
  }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(path(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }
  const json& array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(path(key), "expected an array");
    return v;
  }
  void require_key(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(path(key), "missing required field");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("parse error: ") + e.what());
  }
}

void check(bool cond, const std::string& key, const std::string& what) {
  if (!cond) throw ConfigError(key, what);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

ScheduleSpec read_schedule(Reader& r) {
  ScheduleSpec s;
  if (!r.has("schedule")) return s;
  Reader sr(r.raw("schedule"), r.path("schedule"));
  if (sr.has("r")) s.r = sr.number("r");
  if (sr.has("C")) s.C = sr.number("C");
  sr.finish();
  check(s.r > 0.0 && s.r < 1.0, sr.path("r"), "must lie in (0, 1)");
  check(positive(s.C), sr.path("C"), "must be positive");
  return s;
}

struct SimRead {
  SimConfig sim;
  ScheduleSpec schedule;
  bool has_n = false;
  bool has_h = false;
  bool has_epsilon = false;
};

SimRead read_sim(const json& j, const std::string& path, bool n_required) {
  Reader r(j, path);
  SimRead out;
  SimConfig& c = out.sim;
  r.require_key("model");
  c.model = r.string("model");
  const auto& names = preset_names();
  check(std::find(names.begin(), names.end(), c.model) != names.end(), r.path("model"),
        "unknown model '" + c.model + "'");
  if (n_required) r.require_key("n");
  if ((out.has_n = r.has("n"))) {
    const auto n = r.integer("n");
    check(n >= 1, r.path("n"), "must be at least 1");
    c.n = static_cast<Index>(n);
  }
  r.require_key("T");
  c.T = r.number("T");
  check(positive(c.T), r.path("T"), "must be positive");
  if (r.has("dt")) c.dt = r.number("dt");
  check(positive(c.dt), r.path("dt"), "must be positive");
  check(c.dt <= c.T, r.path("dt"), "must not exceed T");
  if ((out.has_h = r.has("h"))) {
    c.h = r.number("h");
    check(positive(c.h), r.path("h"), "must be positive");
  }
  if ((out.has_epsilon = r.has("epsilon"))) {
    c.epsilon = r.number("epsilon");
    check(positive(c.epsilon), r.path("epsilon"), "must be positive");
  }
  if (r.has("seed")) c.seed = r.unsigned_integer("seed");
  if (r.has("kernel")) c.kernel = r.string("kernel");
  try {
    (void)make_kernel(c.kernel, 1);
  } catch (const Error&) {
    throw ConfigError(r.path("kernel"), "unknown kernel '" + c.kernel + "'");
  }
  if (r.has("strategy")) {
    const auto s = r.string("strategy");
    try {
      c.strategy = parse_strategy(s);
    } catch (const Error&) {
      throw ConfigError(r.path("strategy"), "unknown strategy '" + s + "'");
    }
  }
  if (r.has("record_times")) {
    const json& a = r.array("record_times");
    for (std::size_t i = 0; i < a.size(); ++i) {
      check(a[i].is_number(), at(r.path("record_times"), i), "expected a number");
      const double t = a[i].get<double>();
      check(t >= 0.0 && t <= c.T, at(r.path("record_times"), i), "must lie in [0, T]");
      c.record_times.push_back(t);
    }
  }
  if (r.has("model_options")) {
    Reader o(r.raw("model_options"), r.path("model_options"));
    auto& mo = c.model_options;
    if (o.has("saturation")) mo.saturation = o.number("saturation");
    if (o.has("entropic_reg")) mo.entropic_reg = o.number("entropic_reg");
    if (o.has("degree")) mo.degree = static_cast<int>(o.integer("degree"));
    if (o.has("coupling")) mo.coupling = o.number("coupling");
    o.finish();
    check(positive(mo.saturation), o.path("saturation"), "must be positive");
    check(positive(mo.entropic_reg), o.path("entropic_reg"), "must be positive");
    check(mo.degree >= 2, o.path("degree"), "must be at least 2");
    check(std::isfinite(mo.coupling), o.path("coupling"), "must be finite");
  }
  out.schedule = read_schedule(r);
  r.finish();
  return out;
}

/// Fills whichever of h, epsilon were left out from the schedule at c.n.
void apply_schedule(SimConfig& c, const ScheduleSpec& s, bool fill_h, bool fill_epsilon) {
  if (!fill_h && !fill_epsilon) return;
  const int d = preset(c.model, c.model_options).d;
  const auto p = schedule(static_cast<double>(std::max<Index>(c.n, 2)), d, s.r, s.C);
  if (fill_h) c.h = p.h;
  if (fill_epsilon) c.epsilon = p.epsilon;
}

json sim_json(const SimConfig& c, const ScheduleSpec& s, bool with_n, bool with_h, bool with_epsilon) {
  json j;
  j["model"] = c.model;
  if (with_n) j["n"] = static_cast<std::int64_t>(c.n);
  j["T"] = c.T;
  j["dt"] = c.dt;
  if (with_h) j["h"] = c.h;
  if (with_epsilon) j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  j["kernel"] = c.kernel;
  j["strategy"] = to_string(c.strategy);
  j["record_times"] = c.record_times;
  j["model_options"] = {{"saturation", c.model_options.saturation},
                        {"entropic_reg", c.model_options.entropic_reg},
                        {"degree", c.model_options.degree},
                        {"coupling", c.model_options.coupling}};
  j["schedule"] = {{"r", s.r}, {"C", s.C}};
  return j;
}

template <typename T, typename Check>
std::vector<T> read_axis(Reader& axes, const std::string& key, Check&& valid, const char* what) {
  std::vector<T> out;
  if (!axes.has(key)) return out;
  const json& a = axes.array(key);
  check(!a.empty(), axes.path(key), "axis must not be empty");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = at(axes.path(key), i);
    if constexpr (std::is_floating_point_v<T>) {
      check(a[i].is_number(), p, "expected a number");
    } else if constexpr (std::is_unsigned_v<T>) {
      check(a[i].is_number_unsigned(), p, "expected a nonnegative integer");
    } else {
      check(a[i].is_number_integer(), p, "expected an integer");
    }
    const T v = a[i].get<T>();
    check(valid(v), p, what);
    out.push_back(v);
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  if (j.is_object() && j.contains("base")) throw ConfigError("base", "an experiment plan is not a single run");
  auto read = read_sim(j, "", true);
  RunConfig out{read.sim, read.schedule};
  apply_schedule(out.sim, out.schedule, !read.has_h, !read.has_epsilon);
  out.sim.validate();
  return out;
}

ExperimentPlan parse_plan(const std::string& text) {
  const json j = parse_json(text);
  Reader r(j, "");
  r.require_key("base");
  ExperimentPlan plan;

  if (r.has("axes")) {
    Reader axes(r.raw("axes"), "axes");
    plan.n_values = read_axis<Index>(axes, "n", [](Index v) { return v >= 1; }, "must be at least 1");
    plan.h_values = read_axis<double>(axes, "h", positive, "must be positive");
    plan.epsilon_values = read_axis<double>(axes, "epsilon", positive, "must be positive");
    plan.dt_values = read_axis<double>(axes, "dt", positive, "must be positive");
    plan.seed_values = read_axis<std::uint64_t>(axes, "seed", [](std::uint64_t) { return true; }, "");
    axes.finish();
  }

  auto base = read_sim(r.raw("base"), "base", plan.n_values.empty());
  plan.base = base.sim;
  plan.schedule = base.schedule;
  plan.auto_h = !base.has_h && plan.h_values.empty();
  plan.auto_epsilon = !base.has_epsilon && plan.epsilon_values.empty();
  if (!base.has_n) plan.base.n = plan.n_values.front();
  apply_schedule(plan.base, plan.schedule, !base.has_h, !base.has_epsilon);
  for (std::size_t i = 0; i < plan.dt_values.size(); ++i)
    check(plan.dt_values[i] <= plan.base.T, at("axes.dt", i), "must not exceed T");

  if (r.has("comparisons")) {
    const json& a = r.array("comparisons");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = at("comparisons", i);
      check(a[i].is_string(), p, "expected a string");
      const auto s = a[i].get<std::string>();
      if (s == "particle-vs-oracle") {
        plan.comparisons.push_back(Comparison::particle_vs_oracle);
      } else if (s == "n-vs-n") {
        plan.comparisons.push_back(Comparison::n_vs_n);
      } else {
        throw ConfigError(p, "unknown comparison '" + s + "'");
      }
    }
  }
  if (r.has("oracle")) {
    Reader o(r.raw("oracle"), "oracle");
    if (o.has("copies")) plan.oracle_copies = static_cast<Index>(o.integer("copies"));
    if (o.has("seed")) plan.oracle_seed = o.unsigned_integer("seed");
    o.finish();
    check(plan.oracle_copies >= 1, "oracle.copies", "must be at least 1");
  }
  if (r.has("histogram")) {
    Reader hr(r.raw("histogram"), "histogram");
    auto& h = plan.histogram;
    if (hr.has("block")) h.block = static_cast<int>(hr.integer("block"));
    if (hr.has("component")) h.component = static_cast<int>(hr.integer("component"));
    if (hr.has("bins")) h.bins = static_cast<int>(hr.integer("bins"));
    if (hr.has("lo")) h.lo = hr.number("lo");
    if (hr.has("hi")) h.hi = hr.number("hi");
    hr.finish();
    const auto model = preset(plan.base.model, plan.base.model_options);
    check(h.block >= 0 && h.block < model.m, "histogram.block", "out of range for the model");
    check(h.component >= 0 && h.component < model.d, "histogram.component", "out of range for the model");
    check(h.bins >= 1, "histogram.bins", "must be at least 1");
    check(std::isfinite(h.lo) && std::isfinite(h.hi) && h.lo < h.hi, "histogram.hi", "must exceed lo");
  }
  if (r.has("max_runs")) plan.max_runs = r.integer("max_runs");
  check(plan.max_runs >= 1, "max_runs", "must be at least 1");
  if (r.has("write_snapshots")) plan.write_snapshots = r.boolean("write_snapshots");
  r.finish();
  check(plan.cell_count() <= plan.max_runs, "axes",
        "sweep has " + std::to_string(plan.cell_count()) + " cells, above max_runs " + std::to_string(plan.max_runs));
  if (plan.comparisons.size() > 1) {
    auto sorted = plan.comparisons;
    std::sort(sorted.begin(), sorted.end());
    check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "comparisons", "duplicate entry");
  }
  return plan;
}

LoadedConfig parse_config(const std::string& text) {
  const json j = parse_json(text);
  if (j.is_object() && j.contains("base")) return parse_plan(text);
  return parse_run_config(text);
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string emit(const RunConfig& config) {
  return sim_json(config.sim, config.schedule, true, true, true).dump(2) + "\n";
}

std::string emit(const ExperimentPlan& plan) {
  json j;
  j["base"] = sim_json(plan.base, plan.schedule, true, !plan.auto_h, !plan.auto_epsilon);
  json axes = json::object();
  if (!plan.n_values.empty()) axes["n"] = plan.n_values;
  if (!plan.h_values.empty()) axes["h"] = plan.h_values;
  if (!plan.epsilon_values.empty()) axes["epsilon"] = plan.epsilon_values;
  if (!plan.dt_values.empty()) axes["dt"] = plan.dt_values;
  if (!plan.seed_values.empty()) axes["seed"] = plan.seed_values;
  j["axes"] = axes;
  json comps = json::array();
  for (auto c : plan.comparisons) comps.push_back(to_string(c));
  j["comparisons"] = comps;
  j["oracle"] = {{"copies", static_cast<std::int64_t>(plan.oracle_copies)}, {"seed", plan.oracle_seed}};
  const auto& h = plan.histogram;
  j["histogram"] = {{"block", h.block}, {"component", h.component}, {"bins", h.bins}, {"lo", h.lo}, {"hi", h.hi}};
  j["max_runs"] = plan.max_runs;
  j["write_snapshots"] = plan.write_snapshots;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t config_digest(const RunConfig& config) { return fnv1a64(emit(config)); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string data = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw Error(ErrorCode::io, "SHA-1 digest failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

}  // namespace condmv
