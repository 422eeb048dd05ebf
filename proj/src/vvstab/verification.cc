#include "vvstab/verification.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vvstab/errors.h"
#include "vvstab/feeder.h"
#include "vvstab/sim.h"

namespace vvstab {

namespace {

constexpr double kConvergedError = 1e-4;

StabilityReport LocalReport(const HarnessModel& model,
                            const Eigen::VectorXd& argument) {
  CertificateInputs in;
  in.Z = model.Z;
  in.C_s = model.LocalLipschitz(argument);
  in.T = model.T;
  return CheckSigmaBound(in);
}

double DampingFor(const HarnessModel& model) {
  return 1.0 / (1.0 + SpectralNorm(model.C_s * model.Z));
}

}  // namespace

const char* HarnessModeName(HarnessMode mode) {
  return mode == HarnessMode::kInjection ? "injection" : "bias";
}

Eigen::VectorXd HarnessModel::Targets(const Eigen::VectorXd& argument) const {
  const int nn = n();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * nn);
  for (int i = 0; i < nn; ++i) {
    for (const Member& m : node_devices[i]) {
      Setpoint sp = EvalSetpoint(m.curves.volt_var, m.curves.volt_watt,
                                 m.rating, argument(i));
      s(i) += sp.p;
      s(nn + i) += sp.q;
    }
  }
  return s;
}

Eigen::MatrixXd HarnessModel::LocalLipschitz(
    const Eigen::VectorXd& argument) const {
  const int nn = n();
  Eigen::VectorXd c_p = Eigen::VectorXd::Zero(nn);
  Eigen::VectorXd c_q = Eigen::VectorXd::Zero(nn);
  for (int i = 0; i < nn; ++i) {
    for (const Member& m : node_devices[i]) {
      c_p(i) += std::abs(m.curves.volt_watt.SlopeAt(argument(i))) * m.rating.p_bar();
      c_q(i) += std::abs(m.curves.volt_var.SlopeAt(argument(i))) * m.rating.q_max();
    }
  }
  return StackLipschitz(c_p, c_q);
}

HarnessModel BuildHarnessModel(const ScenarioConfig& config) {
  const int n = config.num_nodes();
  const ImpedanceMatrices mats = BuildImpedanceMatrices(config.feeder);
  const std::vector<CurvePair> curves = CurvesAfterEvents(config);
  HarnessModel model;
  model.Z = mats.Z;
  Eigen::VectorXd load(2 * n);
  for (int i = 0; i < n; ++i) {
    load(i) = config.load_p[i];
    load(n + i) = config.load_q[i];
  }
  model.v_bar = Eigen::VectorXd::Constant(n, config.feeder.v0) - mats.Z * load;
  model.node_devices.resize(n);
  model.T = Eigen::VectorXd::Constant(2 * n, 1.0);
  std::vector<bool> seen(n, false);
  for (size_t k = 0; k < config.devices.size(); ++k) {
    const DeviceConfig& dev = config.devices[k];
    const int i = dev.node - 1;
    if (seen[i] && (model.T(i) != dev.t_p || model.T(n + i) != dev.t_q)) {
      throw ConfigError("device '" + dev.name +
                        "' shares a node with different filter constants");
    }
    seen[i] = true;
    model.T(i) = dev.t_p;
    model.T(n + i) = dev.t_q;
    model.node_devices[i].push_back({dev.rating, curves[k]});
  }
  model.C_s = AggregateLipschitz(config, curves).C_s();
  model.gains = config.adaptive.defaults;
  return model;
}

Eigen::VectorXd ForcedEquilibrium(const HarnessModel& model,
                                  const Eigen::VectorXd& forcing) {
  const double beta = DampingFor(model);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * model.n());
  constexpr int kMaxIter = 500000;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd step =
        model.Targets(model.Z * s + model.v_bar + forcing) - s;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-14) return s;
    s += beta * step;
  }
  throw NumericalError("forced equilibrium did not converge", kMaxIter);
}

Eigen::VectorXd ModeForcing(HarnessMode mode, const SignPair& signs,
                            const Eigen::VectorXd& offset) {
  if (mode == HarnessMode::kInjection) {
    const Eigen::Index n = offset.size() / 2;
    return signs.c * (offset.head(n) + offset.tail(n));
  }
  return signs.d * offset;
}

OffsetResult OffsetWithMagnitude(const HarnessModel& model, HarnessMode mode,
                                 const OffsetResult& base, double magnitude) {
  OffsetResult r = base;
  const int n = model.n();
  r.magnitude = magnitude;
  if (mode == HarnessMode::kInjection) {
    r.offset = Eigen::VectorXd::Constant(2 * n, -base.signs.c * magnitude);
  } else {
    r.offset = Eigen::VectorXd::Constant(n, -base.signs.d * magnitude);
  }
  const Eigen::VectorXd forcing = ModeForcing(mode, r.signs, r.offset);
  r.equilibrium = ForcedEquilibrium(model, forcing);
  r.argument = model.Z * r.equilibrium + model.v_bar + forcing;
  r.local_report = LocalReport(model, r.argument);
  return r;
}

OffsetResult FindStabilizingOffset(const HarnessModel& model, HarnessMode mode,
                                   double cap, int grid) {
  OffsetResult base;
  const int n = model.n();
  const Eigen::VectorXd zero_forcing = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd s0 = ForcedEquilibrium(model, zero_forcing);
  const Eigen::VectorXd v_unforced = model.Z * s0 + model.v_bar;
  const double vc = model.gains.v_crit;
  const int above = static_cast<int>((v_unforced.array() > vc).count());
  base.mixed_signs = above != 0 && above != n;
  base.signs = SignHeuristic(v_unforced.maxCoeff(), vc);
  base.unforced_report = LocalReport(model, v_unforced);

  auto eval = [&](double m) { return OffsetWithMagnitude(model, mode, base, m); };
  OffsetResult at = eval(0.0);
  if (at.local_report.satisfied) {
    at.found = true;
    at.note = "unforced equilibrium already satisfies the local certificate";
    return at;
  }
  double lo = 0.0;
  double hi = -1.0;
  for (int k = 1; k <= grid; ++k) {
    const double m = cap * k / grid;
    if (eval(m).local_report.satisfied) {
      hi = m;
      lo = cap * (k - 1) / grid;
      break;
    }
  }
  if (hi < 0.0) {
    OffsetResult fail = eval(cap);
    fail.found = false;
    std::ostringstream note;
    note << "no offset up to " << cap
         << " reaches a locally certified region; at the cap sigma_local="
         << fail.local_report.sigma << ", steep nodes:";
    const Eigen::MatrixXd C = model.LocalLipschitz(fail.argument);
    for (int i = 0; i < n; ++i) {
      if (C(i, i) > 0.0 || C(n + i, i) > 0.0) {
        note << " " << (i + 1) << "(v=" << fail.argument(i) << ")";
      }
    }
    fail.note = note.str();
    return fail;
  }
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid).local_report.satisfied ? hi : lo) = mid;
  }
  OffsetResult found = eval(hi);
  found.found = true;
  found.note = "offset found by grid and bisection";
  return found;
}

PairedRunResult RunPaired(const HarnessModel& model, HarnessMode mode,
                          const OffsetResult& offset,
                          const PairedRunOptions& options) {
  const int n = model.n();
  if (!(options.dt > 0.0) || !(options.dt < 2.0 * model.T.minCoeff())) {
    throw ConfigError("paired run needs 0 < dt < 2 min(T)");
  }
  PairedRunResult out;
  out.mode = mode;

  CertificateInputs in;
  in.Z = model.Z;
  in.C_s = model.C_s;
  in.T = model.T;
  Eigen::VectorXd gamma;
  if (mode == HarnessMode::kInjection) {
    gamma.resize(2 * n);
    gamma << Eigen::VectorXd::Constant(n, model.gains.gamma_p),
        Eigen::VectorXd::Constant(n, model.gains.gamma_q);
    in.Gamma = gamma.asDiagonal();
    out.certificate = SearchLambdaCertificate(
        in, Eigen::MatrixXd::Identity(2 * n, 2 * n), options.h_cap);
  } else {
    gamma = Eigen::VectorXd::Constant(n, model.gains.gamma_v);
    in.Gamma = gamma.asDiagonal();
    out.certificate = SearchThetaCertificate(
        in, Eigen::MatrixXd::Identity(n, n), options.h_cap);
  }
  out.certified = out.certificate.found;
  out.exploratory = !out.certified;
  const Eigen::MatrixXd& H = out.certificate.H;

  const SignPair signs = offset.signs;
  const int sign = mode == HarnessMode::kInjection ? signs.c : signs.d;
  const Eigen::VectorXd ref_forcing = ModeForcing(mode, signs, offset.offset);
  Eigen::VectorXd s_r = ForcedEquilibrium(model, ref_forcing);
  Eigen::VectorXd s = s_r;
  if (options.plant_perturbation.size() == 2 * n) s += options.plant_perturbation;
  // u(0) = 0 means mu(0) = -u*.
  Eigen::VectorXd mu = options.start_at_offset
                           ? Eigen::VectorXd::Zero(offset.offset.size())
                           : Eigen::VectorXd(-offset.offset);
  const Eigen::VectorXd a = model.T.cwiseInverse() * options.dt;

  const long steps = std::lround(options.horizon / options.dt);
  for (long k = 0; k <= steps; ++k) {
    const Eigen::VectorXd plant_forcing =
        ModeForcing(mode, signs, mu + offset.offset);
    const Eigen::VectorXd v = model.Z * s + model.v_bar;
    const Eigen::VectorXd v_r = model.Z * s_r + model.v_bar;
    const Eigen::VectorXd e_s = s - s_r;
    const Eigen::VectorXd e_v = v - v_r;
    const Eigen::VectorXd z_e = model.Z * e_s;
    out.max_identity_error = std::max(out.max_identity_error,
                                      (e_v - z_e).lpNorm<Eigen::Infinity>());
    out.t.push_back(k * options.dt);
    out.e_inf.push_back(e_s.lpNorm<Eigen::Infinity>());
    out.V.push_back(0.5 * (z_e.squaredNorm() + mu.dot(H * mu)));
    if (k == steps) break;

    s += a.cwiseProduct(model.Targets(v + plant_forcing) - s);
    s_r += a.cwiseProduct(model.Targets(v_r + ref_forcing) - s_r);
    if (!options.freeze_adaptation) {
      const Eigen::VectorXd abs_ev = e_v.cwiseAbs();
      // B^T I |e_v| with B = I is [|e_v|; |e_v|]; D^T |e_v| is |e_v|.
      Eigen::VectorXd drive(mu.size());
      if (mode == HarnessMode::kInjection) {
        drive << abs_ev, abs_ev;
      } else {
        drive = abs_ev;
      }
      mu += options.dt * (-sign) * gamma.cwiseProduct(drive);
    }
  }
  out.mu_final = mu;
  return out;
}

namespace {

LyapunovCheck CheckDeltas(const PairedRunResult& run, double band,
                          bool strict) {
  LyapunovCheck out;
  for (size_t k = 0; k + 1 < run.V.size(); ++k) {
    if (!(run.e_inf[k] > band)) continue;
    ++out.checked;
    const double delta = run.V[k + 1] - run.V[k];
    const bool bad = strict ? !(delta < 0.0) : delta > 0.0;
    if (bad) {
      ++out.violations;
      out.worst_increase = std::max(out.worst_increase, delta);
      if (!out.first_violation_time) out.first_violation_time = run.t[k];
    }
  }
  return out;
}

}  // namespace

LyapunovCheck CheckVdotNegative(const PairedRunResult& run, double band) {
  return CheckDeltas(run, band, true);
}

LyapunovCheck CheckVNonincreasing(const PairedRunResult& run, double band) {
  return CheckDeltas(run, band, false);
}

TheoremReport VerifyTheorem(const ScenarioConfig& config, HarnessMode mode,
                            PairedRunOptions options) {
  TheoremReport report;
  report.mode = mode;
  const HarnessModel model = BuildHarnessModel(config);
  const double cap = mode == HarnessMode::kInjection
                         ? 0.5 * model.gains.w_cap
                         : model.gains.w_cap;
  report.offset = FindStabilizingOffset(model, mode, cap);
  if (!report.offset.found) return report;
  report.run = RunPaired(model, mode, report.offset, options);
  report.lyapunov = CheckVNonincreasing(report.run);
  const auto& e = report.run.e_inf;
  report.final_error = e.back();
  report.max_error = *std::max_element(e.begin(), e.end());
  if (report.final_error < kConvergedError) {
    double t_conv = report.run.t.front();
    for (size_t k = 0; k < e.size(); ++k) {
      if (e[k] >= kConvergedError && k + 1 < e.size()) t_conv = report.run.t[k + 1];
    }
    report.converged_time = t_conv;
  }
  report.passed = report.run.certified && report.lyapunov.passed() &&
                  report.converged_time.has_value() &&
                  report.run.max_identity_error <= 1e-12;
  return report;
}

std::string TheoremReport::Describe() const {
  std::ostringstream out;
  out << "mode: " << HarnessModeName(mode) << "\n";
  out << "unforced_sigma_local: " << offset.unforced_report.sigma << "\n";
  out << "sign_selectors: c=" << offset.signs.c << " d=" << offset.signs.d
      << (offset.mixed_signs ? " (voltages straddle v_crit)" : "") << "\n";
  out << "offset_found: " << (offset.found ? "true" : "false") << "\n";
  out << "offset_magnitude: " << offset.magnitude << "\n";
  out << "offset_note: " << offset.note << "\n";
  if (!offset.found) {
    out << "verdict: FAIL (no stabilizing offset)\n";
    return out.str();
  }
  out << "forced_sigma_local: " << offset.local_report.sigma << "\n";
  out << "certificate: " << (run.certified ? "non-positive" : "not found")
      << " h=" << run.certificate.h
      << " worst_entry=" << run.certificate.check.worst << "\n";
  if (run.exploratory) out << "trace: exploratory (theorem not asserted)\n";
  out << "identity_error_max: " << run.max_identity_error << "\n";
  out << "lyapunov_checked_steps: " << lyapunov.checked << "\n";
  out << "lyapunov_increases: " << lyapunov.violations;
  if (lyapunov.first_violation_time) {
    out << " (first at t=" << *lyapunov.first_violation_time
        << ", worst +" << lyapunov.worst_increase << ")";
  }
  out << "\n";
  out << "max_error_inf: " << max_error << "\n";
  out << "final_error_inf: " << final_error << "\n";
  out << "error_below_1e-4_from: "
      << (converged_time ? std::to_string(*converged_time) : "never") << "\n";
  out << "verdict: " << (passed ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace vvstab
