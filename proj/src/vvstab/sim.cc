#include "vvstab/sim.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "vvstab/adaptive.h"
#include "vvstab/errors.h"
#include "vvstab/io.h"
#include "vvstab/observer.h"

namespace vvstab {

namespace {

constexpr double kVoltageFloor = 0.0;
constexpr double kVoltageCeiling = 2.0;

struct DeviceRuntime {
  double p = 0.0;
  double q = 0.0;
  int controller = -1;  // index into controllers, or -1
};

std::string DescribeReport(const StabilityReport& r) {
  std::ostringstream out;
  out << "sigma=" << r.sigma << " margin=" << r.margin
      << (r.satisfied ? " (stable certificate)" : " (certificate violated)");
  return out.str();
}

// Node net injection [p; q] from device states, direct injections and loads.
Eigen::VectorXd NetInjection(const ScenarioConfig& config,
                             const std::vector<DeviceRuntime>& devices,
                             const std::vector<AdaptiveControllerState>& ctrl,
                             const std::vector<ResolvedController>& resolved,
                             const std::vector<double>& load_p,
                             const std::vector<double>& load_q) {
  const int n = config.num_nodes();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * n);
  for (size_t i = 0; i < devices.size(); ++i) {
    const int node = config.devices[i].node - 1;
    s(node) += devices[i].p;
    s(n + node) += devices[i].q;
    const int c = devices[i].controller;
    if (c >= 0 && resolved[c].mode != AdaptiveMode::kBias) {
      s(node) += ctrl[c].u_p;
      s(n + node) += ctrl[c].u_q;
    }
  }
  for (int i = 0; i < n; ++i) {
    s(i) -= load_p[i];
    s(n + i) -= load_q[i];
  }
  return s;
}

double CurveInput(const DeviceRuntime& dev,
                  const std::vector<AdaptiveControllerState>& ctrl,
                  const std::vector<ResolvedController>& resolved, double v) {
  if (dev.controller >= 0 && resolved[dev.controller].mode == AdaptiveMode::kBias) {
    return BiasedVoltage(v, ctrl[dev.controller].w);
  }
  return v;
}

void SolveInitialEquilibrium(const ScenarioConfig& config,
                             const ImpedanceMatrices& mats,
                             const std::vector<CurvePair>& curves,
                             std::vector<DeviceRuntime>& devices) {
  const double sigma = CurveSetReport(config, mats, curves).sigma;
  const double beta = 1.0 / (1.0 + sigma);
  const std::vector<AdaptiveControllerState> no_ctrl;
  const std::vector<ResolvedController> no_resolved;
  std::vector<DeviceRuntime> plain = devices;
  for (auto& d : plain) d.controller = -1;
  constexpr int kMaxIter = 200000;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd s = NetInjection(config, plain, no_ctrl, no_resolved,
                                     config.load_p, config.load_q);
    Eigen::VectorXd v = SolveVoltages(mats, s, config.feeder.v0);
    double change = 0.0;
    for (size_t i = 0; i < plain.size(); ++i) {
      const DeviceConfig& dc = config.devices[i];
      Setpoint target = EvalSetpoint(curves[i].volt_var, curves[i].volt_watt,
                                     dc.rating, v(dc.node - 1));
      change = std::max({change, std::abs(target.p - plain[i].p),
                         std::abs(target.q - plain[i].q)});
      plain[i].p += beta * (target.p - plain[i].p);
      plain[i].q += beta * (target.q - plain[i].q);
    }
    if (change <= 1e-14) {
      for (size_t i = 0; i < devices.size(); ++i) {
        devices[i].p = plain[i].p;
        devices[i].q = plain[i].q;
      }
      return;
    }
  }
  throw NumericalError("initial equilibrium did not converge", kMaxIter);
}

}  // namespace

NodeLipschitz AggregateLipschitz(const ScenarioConfig& config,
                                 const std::vector<CurvePair>& curves) {
  const int n = config.num_nodes();
  NodeLipschitz out;
  out.c_p = Eigen::VectorXd::Zero(n);
  out.c_q = Eigen::VectorXd::Zero(n);
  out.t = Eigen::VectorXd::Constant(2 * n, 1.0);
  std::vector<bool> seen(n, false);
  for (size_t i = 0; i < config.devices.size(); ++i) {
    const DeviceConfig& dev = config.devices[i];
    const int node = dev.node - 1;
    out.c_p(node) += LipschitzConstant(curves[i].volt_watt, dev.rating.p_bar());
    out.c_q(node) += LipschitzConstant(curves[i].volt_var, dev.rating.q_max());
    if (!seen[node]) {
      out.t(node) = dev.t_p;
      out.t(n + node) = dev.t_q;
      seen[node] = true;
    } else {
      out.t(node) = std::min(out.t(node), dev.t_p);
      out.t(n + node) = std::min(out.t(n + node), dev.t_q);
    }
  }
  return out;
}

StabilityReport CurveSetReport(const ScenarioConfig& config,
                               const ImpedanceMatrices& mats,
                               const std::vector<CurvePair>& curves) {
  NodeLipschitz lip = AggregateLipschitz(config, curves);
  CertificateInputs inputs;
  inputs.Z = mats.Z;
  inputs.C_s = lip.C_s();
  inputs.T = lip.t;
  return CheckSigmaBound(inputs);
}

SimulationTrace RunScenario(const ScenarioConfig& config) {
  if (auto errors = ValidateScenario(config); !errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += e + "\n";
    throw ConfigError("invalid scenario:\n" + joined);
  }
  const int n = config.num_nodes();
  const SimulationParams& sp = config.simulation;
  const double dt = sp.dt;
  const ImpedanceMatrices mats = BuildImpedanceMatrices(config.feeder);

  SimulationTrace trace;
  trace.node_names = config.feeder.node_names;
  trace.parameter_echo = SerializeScenario(config);
  trace.scenario_hash = HashText(trace.parameter_echo);
  trace.attack_time = config.events.empty() ? 0.0 : config.events.front().time;

  std::vector<CurvePair> curves;
  std::vector<DeviceRuntime> devices(config.devices.size());
  for (size_t i = 0; i < config.devices.size(); ++i) {
    curves.push_back(config.devices[i].curves);
    devices[i].p = config.devices[i].p0;
    devices[i].q = config.devices[i].q0;
  }
  const std::vector<ResolvedController> resolved =
      sp.adaptive_enabled ? ResolveControllers(config)
                          : std::vector<ResolvedController>{};
  std::vector<AdaptiveControllerState> ctrl(resolved.size());
  std::vector<int> node_ctrl(n, -1);
  for (size_t c = 0; c < resolved.size(); ++c) {
    devices[resolved[c].device].controller = static_cast<int>(c);
    node_ctrl[config.devices[resolved[c].device].node - 1] = static_cast<int>(c);
  }

  if (sp.initial_state == InitialState::kEquilibrium) {
    SolveInitialEquilibrium(config, mats, curves, devices);
  }

  std::vector<OscillationObserver> observers(
      n, OscillationObserver(config.observer, dt));
  std::vector<double> base_p = config.load_p;
  std::vector<double> base_q = config.load_q;
  std::vector<double> load_p = base_p;
  std::vector<double> load_q = base_q;
  std::mt19937_64 rng(sp.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const long steps = std::lround(sp.horizon / dt);
  const double time_tol = 1e-9 * dt;
  size_t next_event = 0;
  size_t next_load = 0;
  long mixed_steps = 0;
  bool first_step = true;

  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt;

    // (1) events and load changes due at this step.
    while (next_event < config.events.size() &&
           config.events[next_event].time <= t + time_tol) {
      const CurveEvent& ev = config.events[next_event++];
      EventRecord record;
      record.time = t;
      if (auto problem = CheckEventCurves(ev)) {
        record.rejected = true;
        record.description = "event rejected: " + *problem;
      } else {
        CurvePair replacement{PiecewiseCurve(ev.volt_var),
                              PiecewiseCurve(ev.volt_watt)};
        for (const auto& name : ev.devices) {
          curves[config.FindDevice(name)] = replacement;
        }
        record.report = CurveSetReport(config, mats, curves);
        record.description = "curves replaced on " +
                             std::to_string(ev.devices.size()) +
                             " device(s); " + DescribeReport(*record.report);
      }
      trace.events.push_back(record);
    }
    while (next_load < config.load_steps.size() &&
           config.load_steps[next_load].time <= t + time_tol) {
      const LoadStep& ls = config.load_steps[next_load++];
      base_p[ls.node - 1] = ls.p;
      base_q[ls.node - 1] = ls.q;
    }
    for (int i = 0; i < n; ++i) {
      double scale = 1.0;
      if (sp.load_noise > 0.0) scale += sp.load_noise * noise(rng);
      load_p[i] = base_p[i] * scale;
      load_q[i] = base_q[i] * scale;
    }

    // (2) power flow.
    const Eigen::VectorXd s =
        NetInjection(config, devices, ctrl, resolved, load_p, load_q);
    const Eigen::VectorXd v = SolveVoltages(mats, s, config.feeder.v0);
    if (!v.allFinite() || v.minCoeff() < kVoltageFloor ||
        v.maxCoeff() > kVoltageCeiling) {
      trace.diverged = true;
      trace.divergence_time = t;
      std::ostringstream note;
      note << "voltage left [" << kVoltageFloor << ", " << kVoltageCeiling
           << "] pu at t=" << t << "; trace truncated";
      trace.divergence_note = note.str();
      break;
    }

    TraceRow row;
    row.t = t;
    row.v.assign(v.data(), v.data() + n);
    row.p.resize(n);
    row.q.resize(n);
    for (int i = 0; i < n; ++i) {
      row.p[i] = s(i) + load_p[i];
      row.q[i] = s(n + i) + load_q[i];
    }

    // (3) observers.
    row.y.resize(n);
    for (int i = 0; i < n; ++i) row.y[i] = observers[i].Step(v(i));

    // (4) adaptive controllers.
    if (first_step) {
      for (size_t c = 0; c < ctrl.size(); ++c) {
        ctrl[c].xi = v(config.devices[resolved[c].device].node - 1);
      }
      first_step = false;
    }
    int sign_sum = 0;
    for (size_t c = 0; c < ctrl.size(); ++c) {
      const double vc = v(config.devices[resolved[c].device].node - 1);
      StepController(ctrl[c], resolved[c].mode, vc, resolved[c].params, dt);
      sign_sum += ctrl[c].c;
    }
    if (std::abs(sign_sum) != static_cast<int>(ctrl.size())) {
      if (mixed_steps == 0) {
        std::ostringstream msg;
        msg << "adaptive controllers disagree on the sign selector at t=" << t;
        trace.warnings.push_back(msg.str());
      }
      ++mixed_steps;
    }

    row.xi.assign(n, std::nan(""));
    row.up.assign(n, 0.0);
    row.uq.assign(n, 0.0);
    row.w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const int c = node_ctrl[i];
      if (c < 0) continue;
      row.xi[i] = ctrl[c].xi;
      row.up[i] = ctrl[c].u_p;
      row.uq[i] = ctrl[c].u_q;
      row.w[i] = ctrl[c].w;
    }
    trace.rows.push_back(std::move(row));

    // (5) curve evaluation and (6) filter step.
    for (size_t i = 0; i < devices.size(); ++i) {
      const DeviceConfig& dc = config.devices[i];
      const double vin = CurveInput(devices[i], ctrl, resolved, v(dc.node - 1));
      const Setpoint target =
          EvalSetpoint(curves[i].volt_var, curves[i].volt_watt, dc.rating, vin);
      InverterState st{devices[i].p, devices[i].q, dc.t_p, dc.t_q};
      st = StepFilter(st, target.p, target.q, dt);
      devices[i].p = st.p;
      devices[i].q = st.q;
    }
  }
  if (mixed_steps > 0) {
    trace.warnings.push_back("sign selectors were mixed on " +
                             std::to_string(mixed_steps) + " step(s)");
  }

  FinalState& fs = trace.final_state;
  const size_t m = devices.size();
  fs.dev_p.resize(m);
  fs.dev_q.resize(m);
  fs.u_p.assign(m, 0.0);
  fs.u_q.assign(m, 0.0);
  fs.w.assign(m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    fs.dev_p[i] = devices[i].p;
    fs.dev_q[i] = devices[i].q;
    const int c = devices[i].controller;
    if (c < 0) continue;
    if (resolved[c].mode == AdaptiveMode::kBias) {
      fs.w[i] = ctrl[c].w;
    } else {
      fs.u_p[i] = ctrl[c].u_p;
      fs.u_q[i] = ctrl[c].u_q;
    }
  }
  fs.load_p = load_p;
  fs.load_q = load_q;
  fs.curves = curves;
  return trace;
}

double EquilibriumResidual(const ScenarioConfig& config,
                           const SimulationTrace& trace) {
  const int n = config.num_nodes();
  const FinalState& fs = trace.final_state;
  const ImpedanceMatrices mats = BuildImpedanceMatrices(config.feeder);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * n);
  for (size_t i = 0; i < fs.dev_p.size(); ++i) {
    const int node = config.devices[i].node - 1;
    s(node) += fs.dev_p[i] + fs.u_p[i];
    s(n + node) += fs.dev_q[i] + fs.u_q[i];
  }
  for (int i = 0; i < n; ++i) {
    s(i) -= fs.load_p[i];
    s(n + i) -= fs.load_q[i];
  }
  const Eigen::VectorXd v = SolveVoltages(mats, s, config.feeder.v0);
  double worst = 0.0;
  for (size_t i = 0; i < fs.dev_p.size(); ++i) {
    const DeviceConfig& dc = config.devices[i];
    const Setpoint target =
        EvalSetpoint(fs.curves[i].volt_var, fs.curves[i].volt_watt, dc.rating,
                     v(dc.node - 1) + fs.w[i]);
    worst = std::max({worst, std::abs(target.p - fs.dev_p[i]),
                      std::abs(target.q - fs.dev_q[i])});
  }
  return worst;
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

TraceSummary ComputeSummary(const SimulationTrace& trace,
                            double threshold_fraction, double hold) {
  TraceSummary out;
  out.attack_time = trace.attack_time;
  out.threshold_fraction = threshold_fraction;
  out.hold = hold;
  out.diverged = trace.diverged;
  const size_t n = trace.node_names.size();
  const auto& rows = trace.rows;
  for (const TraceRow& row : rows) {
    out.t.push_back(row.t);
    out.p25.push_back(Percentile(row.y, 0.25));
    out.p50.push_back(Percentile(row.y, 0.50));
    out.p75.push_back(Percentile(row.y, 0.75));
  }
  const double tol = 1e-9;
  for (size_t i = 0; i < n; ++i) {
    NodeSummary ns;
    ns.node = trace.node_names[i];
    ns.peak_time = trace.attack_time;
    for (const TraceRow& row : rows) {
      if (row.t + tol < trace.attack_time) continue;
      if (row.y[i] > ns.peak_y) {
        ns.peak_y = row.y[i];
        ns.peak_time = row.t;
      }
    }
    if (ns.peak_y <= 1e-12) {
      ns.settling_time = trace.attack_time;
    } else if (!trace.diverged) {
      const double threshold = threshold_fraction * ns.peak_y;
      // Walk backwards tracking how long y has stayed below threshold.
      double below_until = -1.0;  // end of the current below-threshold run
      for (size_t k = rows.size(); k-- > 0;) {
        if (rows[k].t + tol < trace.attack_time) break;
        if (rows[k].y[i] < threshold) {
          if (below_until < 0.0) below_until = rows[k].t;
          if (below_until - rows[k].t >= hold - tol) {
            ns.settling_time = rows[k].t;
          }
        } else {
          below_until = -1.0;
        }
      }
    }
    out.nodes.push_back(ns);
  }
  return out;
}

}  // namespace vvstab
