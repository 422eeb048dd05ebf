#include "vvstab/scenario.h"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace vvstab {

namespace {

std::string DeviceLabel(const ScenarioConfig& config, int index) {
  std::ostringstream out;
  out << "devices[" << index << "] '" << config.devices[index].name << "'";
  return out.str();
}

std::optional<std::string> CheckRange(const std::vector<Breakpoint>& bps,
                                      double lo, double hi) {
  if (auto problem = PiecewiseCurve::Check(bps)) return problem;
  for (const Breakpoint& b : bps) {
    if (b.output < lo || b.output > hi) {
      std::ostringstream msg;
      msg << "curve output " << b.output << " outside [" << lo << ", " << hi
          << "]";
      return msg.str();
    }
  }
  return std::nullopt;
}

}  // namespace

const char* RoleName(DeviceRole role) {
  switch (role) {
    case DeviceRole::kStable: return "stable";
    case DeviceRole::kCompromised: return "compromised";
    case DeviceRole::kAdaptiveBias: return "adaptive-bias";
    case DeviceRole::kAdaptiveInjection: return "adaptive-injection";
  }
  return "?";
}

const char* ModeName(AdaptiveMode mode) {
  switch (mode) {
    case AdaptiveMode::kBias: return "bias";
    case AdaptiveMode::kInjectionP: return "injection-p";
    case AdaptiveMode::kInjectionQ: return "injection-q";
    case AdaptiveMode::kInjectionPQ: return "injection-pq";
  }
  return "?";
}

int ScenarioConfig::FindDevice(const std::string& name) const {
  for (size_t i = 0; i < devices.size(); ++i) {
    if (devices[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<ResolvedController> ResolveControllers(
    const ScenarioConfig& config) {
  std::map<std::string, const AdaptiveOverride*> by_name;
  for (const auto& o : config.adaptive.overrides) by_name[o.device] = &o;
  std::vector<ResolvedController> out;
  for (size_t i = 0; i < config.devices.size(); ++i) {
    const DeviceConfig& dev = config.devices[i];
    if (!dev.is_adaptive()) continue;
    ResolvedController rc;
    rc.device = static_cast<int>(i);
    rc.params = config.adaptive.defaults;
    rc.mode = dev.role == DeviceRole::kAdaptiveBias
                  ? AdaptiveMode::kBias
                  : config.adaptive.injection_mode;
    if (auto it = by_name.find(dev.name); it != by_name.end()) {
      const AdaptiveOverride& o = *it->second;
      if (o.mode) rc.mode = *o.mode;
      if (o.tau) rc.params.tau = *o.tau;
      if (o.gamma_p) rc.params.gamma_p = *o.gamma_p;
      if (o.gamma_q) rc.params.gamma_q = *o.gamma_q;
      if (o.gamma_v) rc.params.gamma_v = *o.gamma_v;
      if (o.epsilon) rc.params.epsilon = *o.epsilon;
      if (o.v_crit) rc.params.v_crit = *o.v_crit;
      if (o.hysteresis) rc.params.hysteresis = *o.hysteresis;
      if (o.w_cap) rc.params.w_cap = *o.w_cap;
    }
    rc.params.u_cap = dev.rating.s_bar;
    out.push_back(rc);
  }
  return out;
}

std::vector<std::string> ValidateScenario(const ScenarioConfig& config) {
  std::vector<std::string> errors;
  const int n = config.num_nodes();
  const SimulationParams& sim = config.simulation;

  RadialityReport radial = ValidateRadial(config.feeder);
  if (!radial.ok()) errors.push_back("feeder: " + radial.Describe());
  if (static_cast<int>(config.load_p.size()) != n ||
      static_cast<int>(config.load_q.size()) != n) {
    errors.push_back("feeder: every node needs p_load and q_load");
  }

  if (!(sim.dt > 0.0)) errors.push_back("simulation.dt must be > 0");
  if (!(sim.horizon >= 0.0)) errors.push_back("simulation.horizon must be >= 0");
  if (sim.dt > 0.0 && sim.horizon >= 0.0) {
    const double steps = sim.horizon / sim.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
      errors.push_back("simulation.horizon must be a multiple of dt");
    }
  }
  if (!(sim.load_noise >= 0.0)) {
    errors.push_back("simulation.load_noise must be >= 0");
  }

  const double k = 2.0 / sim.dt;
  for (double f : {config.observer.f_high, config.observer.f_low}) {
    if (!(f > 0.0) || !(2.0 * std::numbers::pi * f < k)) {
      errors.push_back("observer: cutoff must be positive and below 1/(pi dt)");
    }
  }
  if (!(config.observer.gain > 0.0)) errors.push_back("observer.gain must be > 0");

  std::set<std::string> names;
  for (size_t i = 0; i < config.devices.size(); ++i) {
    const DeviceConfig& dev = config.devices[i];
    const std::string label = DeviceLabel(config, static_cast<int>(i));
    if (dev.name.empty()) errors.push_back(label + ": name must not be empty");
    if (!names.insert(dev.name).second) {
      errors.push_back(label + ": duplicate device name");
    }
    if (dev.node < 1 || dev.node > n) {
      errors.push_back(label + ": node out of range");
    }
    if (auto problem = dev.rating.Check()) errors.push_back(label + ": " + *problem);
    if (!(dev.t_p > 0.0)) errors.push_back(label + ": t_p must be > 0");
    if (!(dev.t_q > 0.0)) errors.push_back(label + ": t_q must be > 0");
    if (dev.t_p > 0.0 && dev.t_q > 0.0 &&
        !(sim.dt < 2.0 * std::min(dev.t_p, dev.t_q))) {
      errors.push_back(label + ": dt must be below 2 min(t_p, t_q)");
    }
    if (auto problem = CheckRange(dev.curves.volt_var.breakpoints(), -1.0, 1.0)) {
      errors.push_back(label + ": volt_var " + *problem);
    }
    if (auto problem = CheckRange(dev.curves.volt_watt.breakpoints(), 0.0, 1.0)) {
      errors.push_back(label + ": volt_watt " + *problem);
    }
  }

  if (config.adaptive.injection_mode == AdaptiveMode::kBias) {
    errors.push_back("adaptive.injection_mode must be an injection mode");
  }
  for (const auto& o : config.adaptive.overrides) {
    int idx = config.FindDevice(o.device);
    if (idx < 0) {
      errors.push_back("adaptive.overrides: unknown device '" + o.device + "'");
    } else if (!config.devices[idx].is_adaptive()) {
      errors.push_back("adaptive.overrides: device '" + o.device +
                       "' is not adaptive");
    } else if (o.mode) {
      const bool bias_role =
          config.devices[idx].role == DeviceRole::kAdaptiveBias;
      if (bias_role != (*o.mode == AdaptiveMode::kBias)) {
        errors.push_back("adaptive.overrides: mode of '" + o.device +
                         "' does not match its role");
      }
    }
  }
  std::set<int> adaptive_nodes;
  for (const ResolvedController& rc : ResolveControllers(config)) {
    const AdaptiveParams& p = rc.params;
    const std::string label = DeviceLabel(config, rc.device);
    if (!(p.tau > 0.0)) errors.push_back(label + ": tau must be > 0");
    if (p.tau > 0.0 && sim.dt * p.tau > 1.0) {
      errors.push_back(label + ": dt * tau must be <= 1");
    }
    if (p.gamma_p < 0.0 || p.gamma_q < 0.0 || p.gamma_v < 0.0) {
      errors.push_back(label + ": adaptation gains must be >= 0");
    }
    if (p.epsilon < 0.0) errors.push_back(label + ": epsilon must be >= 0");
    if (p.hysteresis < 0.0) errors.push_back(label + ": hysteresis must be >= 0");
    if (p.w_cap < 0.0) errors.push_back(label + ": w_cap must be >= 0");
    if (!adaptive_nodes.insert(config.devices[rc.device].node).second) {
      errors.push_back(label + ": at most one adaptive device per node");
    }
  }

  double last = -1.0;
  for (size_t i = 0; i < config.events.size(); ++i) {
    const CurveEvent& ev = config.events[i];
    const std::string label = "events[" + std::to_string(i) + "]";
    if (!(ev.time >= 0.0)) errors.push_back(label + ": time must be >= 0");
    if (ev.time < last) errors.push_back(label + ": events must be time-ordered");
    last = ev.time;
    for (const auto& name : ev.devices) {
      if (config.FindDevice(name) < 0) {
        errors.push_back(label + ": unknown device '" + name + "'");
      }
    }
  }
  last = -1.0;
  for (size_t i = 0; i < config.load_steps.size(); ++i) {
    const LoadStep& ls = config.load_steps[i];
    const std::string label = "load_steps[" + std::to_string(i) + "]";
    if (ls.node < 1 || ls.node > n) errors.push_back(label + ": node out of range");
    if (ls.time < last) errors.push_back(label + ": steps must be time-ordered");
    last = ls.time;
  }
  return errors;
}

std::optional<std::string> CheckEventCurves(const CurveEvent& event) {
  if (auto problem = CheckRange(event.volt_var, -1.0, 1.0)) {
    return "volt_var " + *problem;
  }
  if (auto problem = CheckRange(event.volt_watt, 0.0, 1.0)) {
    return "volt_watt " + *problem;
  }
  return std::nullopt;
}

std::vector<CurvePair> CurvesAfterEvents(const ScenarioConfig& config) {
  std::vector<CurvePair> curves;
  for (const auto& dev : config.devices) curves.push_back(dev.curves);
  for (const CurveEvent& ev : config.events) {
    if (CheckEventCurves(ev)) continue;
    CurvePair replacement{PiecewiseCurve(ev.volt_var),
                          PiecewiseCurve(ev.volt_watt)};
    for (const auto& name : ev.devices) {
      int idx = config.FindDevice(name);
      if (idx >= 0) curves[idx] = replacement;
    }
  }
  return curves;
}

}  // namespace vvstab
