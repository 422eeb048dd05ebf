#include "vvstab/io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vvstab/sim.h"

namespace vvstab {

namespace {

using Json = nlohmann::ordered_json;

std::string JoinErrors(const std::vector<std::string>& errors) {
  std::string out = "scenario errors:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

// Reads one JSON object, recording type and unknown-key problems against a
// dotted field path instead of throwing.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path, std::vector<std::string>* errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) Error(path_, "must be an object");
  }

  ~ObjectReader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!known_.count(key)) Error(Field(key), "unknown key");
    }
  }

  bool Has(const std::string& key) {
    known_.insert(key);
    return obj_.is_object() && obj_.contains(key);
  }

  double Number(const std::string& key, double fallback, bool required = false) {
    if (!Has(key)) {
      if (required) Error(Field(key), "is required");
      return fallback;
    }
    const Json& v = obj_.at(key);
    if (!v.is_number()) {
      Error(Field(key), "must be a number");
      return fallback;
    }
    return v.get<double>();
  }

  std::string String(const std::string& key, const std::string& fallback,
                     bool required = false) {
    if (!Has(key)) {
      if (required) Error(Field(key), "is required");
      return fallback;
    }
    const Json& v = obj_.at(key);
    if (!v.is_string()) {
      Error(Field(key), "must be a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  bool Bool(const std::string& key, bool fallback) {
    if (!Has(key)) return fallback;
    const Json& v = obj_.at(key);
    if (!v.is_boolean()) {
      Error(Field(key), "must be true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  std::optional<double> OptionalNumber(const std::string& key) {
    if (!Has(key)) return std::nullopt;
    const Json& v = obj_.at(key);
    if (!v.is_number()) {
      Error(Field(key), "must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  // Null when missing or of the wrong type.
  const Json* Array(const std::string& key, bool required = false) {
    if (!Has(key)) {
      if (required) Error(Field(key), "is required");
      return nullptr;
    }
    const Json& v = obj_.at(key);
    if (!v.is_array()) {
      Error(Field(key), "must be an array");
      return nullptr;
    }
    return &v;
  }

  const Json* Object(const std::string& key, bool required = false) {
    if (!Has(key)) {
      if (required) Error(Field(key), "is required");
      return nullptr;
    }
    return &obj_.at(key);
  }

  std::string Field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Error(const std::string& field, const std::string& msg) {
    errors_->push_back(field + ": " + msg);
  }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> known_;
};

std::vector<Breakpoint> ReadBreakpoints(const Json* arr, const std::string& path,
                                        std::vector<std::string>* errors) {
  std::vector<Breakpoint> out;
  if (arr == nullptr) return out;
  for (size_t k = 0; k < arr->size(); ++k) {
    const Json& pair = (*arr)[k];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number()) {
      errors->push_back(path + "[" + std::to_string(k) +
                        "]: must be [voltage, output]");
      continue;
    }
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

std::optional<AdaptiveMode> ParseMode(const std::string& s) {
  if (s == "bias") return AdaptiveMode::kBias;
  if (s == "injection-p") return AdaptiveMode::kInjectionP;
  if (s == "injection-q") return AdaptiveMode::kInjectionQ;
  if (s == "injection-pq") return AdaptiveMode::kInjectionPQ;
  return std::nullopt;
}

std::optional<DeviceRole> ParseRole(const std::string& s) {
  if (s == "stable") return DeviceRole::kStable;
  if (s == "compromised") return DeviceRole::kCompromised;
  if (s == "adaptive-bias") return DeviceRole::kAdaptiveBias;
  if (s == "adaptive-injection") return DeviceRole::kAdaptiveInjection;
  return std::nullopt;
}

Json BreakpointsJson(const std::vector<Breakpoint>& bps) {
  Json arr = Json::array();
  for (const auto& b : bps) arr.push_back(Json::array({b.v, b.output}));
  return arr;
}

std::string Fmt(double value) {
  if (std::isnan(value)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

void ParseFeeder(ObjectReader& root, ScenarioConfig& cfg,
                 std::map<std::string, int>& ids,
                 std::vector<std::string>* errors) {
  const Json* feeder = root.Object("feeder", true);
  if (feeder == nullptr) return;
  ObjectReader fr(*feeder, "feeder", errors);
  cfg.feeder.v0 = fr.Number("v0", 1.0, true);
  cfg.feeder.substation = fr.String("substation", "0", true);
  ids[cfg.feeder.substation] = 0;
  if (const Json* nodes = fr.Array("nodes", true)) {
    for (size_t i = 0; i < nodes->size(); ++i) {
      const std::string path = "feeder.nodes[" + std::to_string(i) + "]";
      ObjectReader nr((*nodes)[i], path, errors);
      const std::string name = nr.String("name", "", true);
      if (ids.count(name)) {
        errors->push_back(path + ".name: duplicate node name '" + name + "'");
        continue;
      }
      ids[name] = static_cast<int>(cfg.feeder.node_names.size()) + 1;
      cfg.feeder.node_names.push_back(name);
      cfg.load_p.push_back(nr.Number("p_load", 0.0));
      cfg.load_q.push_back(nr.Number("q_load", 0.0));
    }
  }
  auto node_id = [&](const std::string& name, const std::string& field) {
    auto it = ids.find(name);
    if (it == ids.end()) {
      errors->push_back(field + ": unknown node '" + name + "'");
      return -1;
    }
    return it->second;
  };
  if (const Json* lines = fr.Array("lines", true)) {
    for (size_t i = 0; i < lines->size(); ++i) {
      const std::string path = "feeder.lines[" + std::to_string(i) + "]";
      ObjectReader lr((*lines)[i], path, errors);
      Line line;
      line.from = node_id(lr.String("from", "", true), path + ".from");
      line.to = node_id(lr.String("to", "", true), path + ".to");
      line.r = lr.Number("r", 0.0, true);
      line.x = lr.Number("x", 0.0, true);
      cfg.feeder.lines.push_back(line);
    }
  }
  if (const Json* steps = fr.Array("load_steps")) {
    for (size_t i = 0; i < steps->size(); ++i) {
      const std::string path = "feeder.load_steps[" + std::to_string(i) + "]";
      ObjectReader sr((*steps)[i], path, errors);
      LoadStep ls;
      ls.time = sr.Number("time", 0.0, true);
      ls.node = node_id(sr.String("node", "", true), path + ".node");
      ls.p = sr.Number("p_load", 0.0, true);
      ls.q = sr.Number("q_load", 0.0, true);
      cfg.load_steps.push_back(ls);
    }
  }
}

void ParseDevices(ObjectReader& root, ScenarioConfig& cfg,
                  const std::map<std::string, int>& ids,
                  std::vector<std::string>* errors) {
  const Json* devices = root.Array("devices");
  if (devices == nullptr) return;
  for (size_t i = 0; i < devices->size(); ++i) {
    ObjectReader dr((*devices)[i], "devices[" + std::to_string(i) + "]", errors);
    DeviceConfig dev;
    dev.name = dr.String("name", "", true);
    const std::string path = "devices[" + std::to_string(i) + "] '" + dev.name + "'";
    const std::string node = dr.String("node", "", true);
    auto it = ids.find(node);
    if (it == ids.end() || it->second == 0) {
      errors->push_back(path + ".node: unknown load node '" + node + "'");
    } else {
      dev.node = it->second;
    }
    dev.rating.s_bar = dr.Number("s_bar", 1.0, true);
    dev.rating.lambda = dr.Number("lambda", 1.0, true);
    dev.rating.q_lim = dr.Number("q_lim", 1.0, true);
    dev.t_p = dr.Number("t_p", 1.0, true);
    dev.t_q = dr.Number("t_q", 1.0, true);
    if (!(dev.t_p > 0.0)) errors->push_back(path + ".t_p: must be > 0");
    if (!(dev.t_q > 0.0)) errors->push_back(path + ".t_q: must be > 0");
    const std::string role = dr.String("role", "stable");
    if (auto r = ParseRole(role)) {
      dev.role = *r;
    } else {
      errors->push_back(path + ".role: unknown role '" + role + "'");
    }
    for (const char* key : {"volt_var", "volt_watt"}) {
      auto bps = ReadBreakpoints(dr.Array(key, true), path + "." + key, errors);
      auto problem = PiecewiseCurve::Check(bps);
      if (problem) {
        errors->push_back(path + "." + key + ": " + *problem);
        continue;
      }
      (std::string(key) == "volt_var" ? dev.curves.volt_var
                                      : dev.curves.volt_watt) =
          PiecewiseCurve(std::move(bps));
    }
    if (const Json* init = dr.Object("initial")) {
      ObjectReader ir(*init, path + ".initial", errors);
      dev.p0 = ir.Number("p", 0.0);
      dev.q0 = ir.Number("q", 0.0);
    }
    cfg.devices.push_back(std::move(dev));
  }
}

void ParseAdaptive(ObjectReader& root, ScenarioConfig& cfg,
                   std::vector<std::string>* errors) {
  const Json* section = root.Object("adaptive");
  if (section == nullptr) return;
  ObjectReader ar(*section, "adaptive", errors);
  AdaptiveParams& p = cfg.adaptive.defaults;
  p.tau = ar.Number("tau", p.tau);
  p.gamma_p = ar.Number("gamma_p", p.gamma_p);
  p.gamma_q = ar.Number("gamma_q", p.gamma_q);
  p.gamma_v = ar.Number("gamma_v", p.gamma_v);
  p.epsilon = ar.Number("epsilon", p.epsilon);
  p.v_crit = ar.Number("v_crit", p.v_crit);
  p.hysteresis = ar.Number("hysteresis", p.hysteresis);
  p.w_cap = ar.Number("w_cap", p.w_cap);
  const std::string mode = ar.String("injection_mode", "injection-q");
  if (auto m = ParseMode(mode)) {
    cfg.adaptive.injection_mode = *m;
  } else {
    errors->push_back("adaptive.injection_mode: unknown mode '" + mode + "'");
  }
  if (const Json* overrides = ar.Array("overrides")) {
    for (size_t i = 0; i < overrides->size(); ++i) {
      const std::string path = "adaptive.overrides[" + std::to_string(i) + "]";
      ObjectReader orr((*overrides)[i], path, errors);
      AdaptiveOverride o;
      o.device = orr.String("device", "", true);
      if (orr.Has("mode")) {
        const std::string m = orr.String("mode", "");
        o.mode = ParseMode(m);
        if (!o.mode) errors->push_back(path + ".mode: unknown mode '" + m + "'");
      }
      o.tau = orr.OptionalNumber("tau");
      o.gamma_p = orr.OptionalNumber("gamma_p");
      o.gamma_q = orr.OptionalNumber("gamma_q");
      o.gamma_v = orr.OptionalNumber("gamma_v");
      o.epsilon = orr.OptionalNumber("epsilon");
      o.v_crit = orr.OptionalNumber("v_crit");
      o.hysteresis = orr.OptionalNumber("hysteresis");
      o.w_cap = orr.OptionalNumber("w_cap");
      cfg.adaptive.overrides.push_back(o);
    }
  }
}

void ParseRest(ObjectReader& root, ScenarioConfig& cfg,
               std::vector<std::string>* errors) {
  if (const Json* obs = root.Object("observer")) {
    ObjectReader orr(*obs, "observer", errors);
    cfg.observer.f_high = orr.Number("f_high", cfg.observer.f_high);
    cfg.observer.f_low = orr.Number("f_low", cfg.observer.f_low);
    cfg.observer.gain = orr.Number("gain", cfg.observer.gain);
  }
  if (const Json* events = root.Array("events")) {
    for (size_t i = 0; i < events->size(); ++i) {
      const std::string path = "events[" + std::to_string(i) + "]";
      ObjectReader er((*events)[i], path, errors);
      CurveEvent ev;
      ev.time = er.Number("time", 0.0, true);
      if (const Json* devs = er.Array("devices", true)) {
        for (const Json& d : *devs) {
          if (d.is_string()) {
            ev.devices.push_back(d.get<std::string>());
          } else {
            errors->push_back(path + ".devices: entries must be device names");
          }
        }
      }
      ev.volt_var = ReadBreakpoints(er.Array("volt_var", true), path + ".volt_var", errors);
      ev.volt_watt = ReadBreakpoints(er.Array("volt_watt", true), path + ".volt_watt", errors);
      cfg.events.push_back(std::move(ev));
    }
  }
  const Json* sim = root.Object("simulation", true);
  if (sim == nullptr) return;
  ObjectReader sr(*sim, "simulation", errors);
  SimulationParams& sp = cfg.simulation;
  sp.dt = sr.Number("dt", sp.dt, true);
  sp.horizon = sr.Number("horizon", sp.horizon, true);
  const std::string init = sr.String("initial_state", "equilibrium");
  if (init == "equilibrium") {
    sp.initial_state = InitialState::kEquilibrium;
  } else if (init == "given") {
    sp.initial_state = InitialState::kGiven;
  } else {
    errors->push_back("simulation.initial_state: must be 'equilibrium' or 'given'");
  }
  sp.adaptive_enabled = sr.Bool("adaptive_enabled", true);
  const double seed = sr.Number("seed", 0.0);
  if (seed < 0.0 || seed != std::floor(seed) || seed > 9.007199254740992e15) {
    errors->push_back("simulation.seed: must be a non-negative integer");
  } else {
    sp.seed = static_cast<std::uint64_t>(seed);
  }
  sp.load_noise = sr.Number("load_noise", 0.0);
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(JoinErrors(errors)), errors_(std::move(errors)) {}

ScenarioConfig ParseScenarioText(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    size_t line = 1;
    size_t col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ScenarioError({"line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": malformed JSON"});
  }

  std::vector<std::string> errors;
  ScenarioConfig cfg;
  {
    ObjectReader root(doc, "", &errors);
    if (!doc.is_object()) throw ScenarioError(errors);
    const double version = root.Number("version", 0.0, true);
    if (root.Has("version") && version != kScenarioVersion) {
      errors.push_back("version: unsupported version " + Fmt(version) +
                       " (expected " + std::to_string(kScenarioVersion) + ")");
    }
    cfg.version = kScenarioVersion;
    cfg.name = root.String("name", "");
    std::map<std::string, int> ids;
    ParseFeeder(root, cfg, ids, &errors);
    ParseDevices(root, cfg, ids, &errors);
    ParseAdaptive(root, cfg, &errors);
    ParseRest(root, cfg, &errors);
  }
  if (errors.empty()) errors = ValidateScenario(cfg);
  if (!errors.empty()) throw ScenarioError(errors);
  return cfg;
}

ScenarioConfig ParseScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({path.string() + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseScenarioText(buf.str());
  } catch (const ScenarioError& e) {
    std::vector<std::string> errors;
    for (const auto& msg : e.errors()) errors.push_back(path.string() + ": " + msg);
    throw ScenarioError(errors);
  }
}

std::string SerializeScenario(const ScenarioConfig& cfg) {
  auto name_of = [&](int id) {
    return id == 0 ? cfg.feeder.substation : cfg.feeder.node_names[id - 1];
  };
  Json doc;
  doc["version"] = cfg.version;
  doc["name"] = cfg.name;

  Json feeder;
  feeder["v0"] = cfg.feeder.v0;
  feeder["substation"] = cfg.feeder.substation;
  Json nodes = Json::array();
  for (int i = 0; i < cfg.num_nodes(); ++i) {
    nodes.push_back({{"name", cfg.feeder.node_names[i]},
                     {"p_load", cfg.load_p[i]},
                     {"q_load", cfg.load_q[i]}});
  }
  feeder["nodes"] = nodes;
  Json lines = Json::array();
  for (const Line& l : cfg.feeder.lines) {
    lines.push_back({{"from", name_of(l.from)}, {"to", name_of(l.to)},
                     {"r", l.r}, {"x", l.x}});
  }
  feeder["lines"] = lines;
  if (!cfg.load_steps.empty()) {
    Json steps = Json::array();
    for (const LoadStep& s : cfg.load_steps) {
      steps.push_back({{"time", s.time}, {"node", name_of(s.node)},
                       {"p_load", s.p}, {"q_load", s.q}});
    }
    feeder["load_steps"] = steps;
  }
  doc["feeder"] = feeder;

  Json devices = Json::array();
  for (const DeviceConfig& d : cfg.devices) {
    Json dj;
    dj["name"] = d.name;
    dj["node"] = name_of(d.node);
    dj["role"] = RoleName(d.role);
    dj["s_bar"] = d.rating.s_bar;
    dj["lambda"] = d.rating.lambda;
    dj["q_lim"] = d.rating.q_lim;
    dj["t_p"] = d.t_p;
    dj["t_q"] = d.t_q;
    dj["volt_var"] = BreakpointsJson(d.curves.volt_var.breakpoints());
    dj["volt_watt"] = BreakpointsJson(d.curves.volt_watt.breakpoints());
    if (d.p0 != 0.0 || d.q0 != 0.0) dj["initial"] = {{"p", d.p0}, {"q", d.q0}};
    devices.push_back(dj);
  }
  doc["devices"] = devices;

  const AdaptiveParams& p = cfg.adaptive.defaults;
  Json adaptive{{"tau", p.tau},         {"gamma_p", p.gamma_p},
                {"gamma_q", p.gamma_q}, {"gamma_v", p.gamma_v},
                {"epsilon", p.epsilon}, {"v_crit", p.v_crit},
                {"hysteresis", p.hysteresis}, {"w_cap", p.w_cap},
                {"injection_mode", ModeName(cfg.adaptive.injection_mode)}};
  if (!cfg.adaptive.overrides.empty()) {
    Json overrides = Json::array();
    for (const AdaptiveOverride& o : cfg.adaptive.overrides) {
      Json oj;
      oj["device"] = o.device;
      if (o.mode) oj["mode"] = ModeName(*o.mode);
      const std::pair<const char*, const std::optional<double>*> fields[] = {
          {"tau", &o.tau},         {"gamma_p", &o.gamma_p},
          {"gamma_q", &o.gamma_q}, {"gamma_v", &o.gamma_v},
          {"epsilon", &o.epsilon}, {"v_crit", &o.v_crit},
          {"hysteresis", &o.hysteresis}, {"w_cap", &o.w_cap}};
      for (const auto& [key, value] : fields) {
        if (*value) oj[key] = **value;
      }
      overrides.push_back(oj);
    }
    adaptive["overrides"] = overrides;
  }
  doc["adaptive"] = adaptive;

  doc["observer"] = {{"f_high", cfg.observer.f_high},
                     {"f_low", cfg.observer.f_low},
                     {"gain", cfg.observer.gain}};

  Json events = Json::array();
  for (const CurveEvent& e : cfg.events) {
    events.push_back({{"time", e.time},
                      {"devices", e.devices},
                      {"volt_var", BreakpointsJson(e.volt_var)},
                      {"volt_watt", BreakpointsJson(e.volt_watt)}});
  }
  doc["events"] = events;

  const SimulationParams& sp = cfg.simulation;
  doc["simulation"] = {
      {"dt", sp.dt},
      {"horizon", sp.horizon},
      {"initial_state",
       sp.initial_state == InitialState::kEquilibrium ? "equilibrium" : "given"},
      {"adaptive_enabled", sp.adaptive_enabled},
      {"seed", sp.seed},
      {"load_noise", sp.load_noise}};
  return doc.dump(2) + "\n";
}

std::string HashText(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string TraceCsv(const SimulationTrace& trace) {
  std::ostringstream out;
  out << "t";
  for (const char* prefix : {"v", "p", "q", "xi", "up", "uq", "w", "y"}) {
    for (const auto& name : trace.node_names) out << ',' << prefix << '_' << name;
  }
  out << '\n';
  for (const TraceRow& row : trace.rows) {
    out << Fmt(row.t);
    for (const auto* col : {&row.v, &row.p, &row.q, &row.xi, &row.up, &row.uq,
                            &row.w, &row.y}) {
      for (double value : *col) out << ',' << Fmt(value);
    }
    out << '\n';
  }
  return out.str();
}

std::string FormatStabilityReport(const StabilityReport& r) {
  std::ostringstream out;
  out << "sigma: " << Fmt(r.sigma) << "\n"
      << "lambda_min: " << Fmt(r.lambda_min) << "\n"
      << "lambda_max: " << Fmt(r.lambda_max) << "\n"
      << "margin: " << Fmt(r.margin) << "\n"
      << "satisfied: " << (r.satisfied ? "true" : "false") << "\n";
  return out.str();
}

std::string FormatSummary(const SimulationTrace& trace,
                          const TraceSummary& summary) {
  std::ostringstream out;
  out << "scenario_hash: " << trace.scenario_hash << "\n"
      << "rows: " << trace.rows.size() << "\n"
      << "diverged: " << (trace.diverged ? "true" : "false") << "\n";
  if (trace.diverged) out << "divergence: " << trace.divergence_note << "\n";
  out << "attack_time: " << Fmt(summary.attack_time) << "\n"
      << "settling_threshold_fraction: " << Fmt(summary.threshold_fraction) << "\n"
      << "settling_hold_s: " << Fmt(summary.hold) << "\n";
  out << "events:\n";
  for (const EventRecord& e : trace.events) {
    out << "  - t=" << Fmt(e.time) << (e.rejected ? " [rejected] " : " ")
        << e.description << "\n";
  }
  out << "warnings:\n";
  for (const auto& w : trace.warnings) out << "  - " << w << "\n";
  out << "nodes:\n";
  std::optional<double> worst_settle = summary.attack_time;
  for (const NodeSummary& ns : summary.nodes) {
    out << "  " << ns.node << ": peak_y=" << Fmt(ns.peak_y)
        << " peak_time=" << Fmt(ns.peak_time) << " settling_time=";
    if (ns.settling_time) {
      out << Fmt(*ns.settling_time);
      if (worst_settle) worst_settle = std::max(*worst_settle, *ns.settling_time);
    } else {
      out << "not settled";
      worst_settle.reset();
    }
    out << "\n";
  }
  out << "feeder_settling_time: "
      << (worst_settle ? Fmt(*worst_settle) : std::string("not settled")) << "\n";
  if (!summary.t.empty()) {
    out << "final_energy_percentiles: p25=" << Fmt(summary.p25.back())
        << " p50=" << Fmt(summary.p50.back())
        << " p75=" << Fmt(summary.p75.back()) << "\n";
  }
  return out.str();
}

void WriteTrace(const SimulationTrace& trace, const TraceSummary& summary,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  }
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
  };
  write(dir / "trace.csv", TraceCsv(trace));
  std::ostringstream pct;
  pct << "t,y_p25,y_p50,y_p75\n";
  for (size_t k = 0; k < summary.t.size(); ++k) {
    pct << Fmt(summary.t[k]) << ',' << Fmt(summary.p25[k]) << ','
        << Fmt(summary.p50[k]) << ',' << Fmt(summary.p75[k]) << '\n';
  }
  write(dir / "energy_percentiles.csv", pct.str());
  write(dir / "summary.txt", FormatSummary(trace, summary));
  write(dir / "scenario.json", trace.parameter_echo);
}

}  // namespace vvstab
