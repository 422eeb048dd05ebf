// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.h"
#include "vvstab/adaptive.h"
#include "vvstab/feeder.h"
#include "vvstab/inverter.h"
#include "vvstab/io.h"
#include "vvstab/sim.h"
#include "vvstab/stability.h"
#include "vvstab/verification.h"

namespace vvstab {
namespace {

using testing::LoadScenario;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<void(Outcome&)> body;
};

// Criterion 1 ---------------------------------------------------------------

void SingleNodeThreshold(Outcome& out) {
  const ScenarioConfig stable = LoadScenario("single_node_sigma0p5");
  const ScenarioConfig unstable = LoadScenario("single_node_sigma3");

  // Analytic 2x2 norm of C_s Z for one node: sqrt((Cp^2 + Cq^2)(r^2 + x^2)).
  auto analytic_sigma = [](const ScenarioConfig& c) {
    const DeviceConfig& d = c.devices[0];
    const double cq = d.curves.volt_var.MaxAbsSlope() * d.rating.q_max();
    const double cp = d.curves.volt_watt.MaxAbsSlope() * d.rating.p_bar();
    const Line& l = c.feeder.lines[0];
    return std::sqrt((cp * cp + cq * cq) * (l.r * l.r + l.x * l.x));
  };
  const double s_lo = analytic_sigma(stable);
  const double s_hi = analytic_sigma(unstable);
  const ImpedanceMatrices m_lo = BuildImpedanceMatrices(stable.feeder);
  const ImpedanceMatrices m_hi = BuildImpedanceMatrices(unstable.feeder);
  const StabilityReport r_lo = CurveSetReport(
      stable, m_lo, {stable.devices[0].curves});
  const StabilityReport r_hi = CurveSetReport(
      unstable, m_hi, {unstable.devices[0].curves});
  out.Require(std::abs(s_lo - 0.5) < 1e-12 && std::abs(s_hi - 3.0) < 1e-12,
              "scenario sigma values");
  out.Require(std::abs(r_lo.sigma - s_lo) < 1e-9 * s_lo &&
                  std::abs(r_hi.sigma - s_hi) < 1e-9 * s_hi,
              "spectral norm vs analytic");
  out.Require(r_lo.satisfied && !r_hi.satisfied, "criterion verdicts");

  // Fixed point of the droop: q = 0 at the curve centre, v* = v0.
  const SimulationTrace t_lo = RunScenario(stable);
  const double v_star = stable.feeder.v0;
  const double initial = std::abs(t_lo.rows.front().v[0] - v_star);
  double worst_after = 0.0;
  std::optional<double> decayed;
  for (const TraceRow& row : t_lo.rows) {
    const double dv = std::abs(row.v[0] - v_star);
    if (row.t >= 200.0) worst_after = std::max(worst_after, dv);
    if (!decayed && dv < 1e-6) decayed = row.t;
  }
  out.Require(std::abs(initial - 0.05) < 1e-12, "0.05 pu perturbation");
  out.Require(worst_after < 1e-6 && decayed && *decayed <= 200.0,
              "decay below 1e-6 by 200 s");

  const SimulationTrace t_hi = RunScenario(unstable);
  const TraceSummary sum_lo = ComputeSummary(t_lo);
  double steady = 1e300;
  for (const TraceRow& row : t_hi.rows) {
    if (row.t >= unstable.simulation.horizon - 100.0) {
      steady = std::min(steady, row.y[0]);
    }
  }
  const double ratio = steady / sum_lo.nodes[0].peak_y;
  out.Require(!t_hi.diverged && ratio >= 100.0, "steady energy >= 100x");
  out.detail << "sigma 0.5: |dv|<1e-6 at t=" << (decayed ? *decayed : -1.0)
             << " s; sigma 3: steady y=" << steady << ", stable peak y="
             << sum_lo.nodes[0].peak_y << ", ratio=" << ratio;
}

// Criterion 2 ---------------------------------------------------------------

void FixedPointConsistency(Outcome& out) {
  int runs = 0;
  double worst_residual = 0.0;
  double worst_oracle = 0.0;
  for (const char* name :
       {"single_node_sigma0p5", "ieee37_scenario1_bias",
        "ieee37_scenario1_injection", "ieee37_scenario2_bias",
        "ieee37_scenario2_injection", "theorem_star5", "vdot_star5"}) {
    const ScenarioConfig c = LoadScenario(name);
    out.Require(c.num_nodes() <= 40, std::string(name) + " size");
    const SimulationTrace t = RunScenario(c);
    const TraceSummary s = ComputeSummary(t);
    bool settled = !t.diverged;
    for (const NodeSummary& node : s.nodes) {
      settled = settled && node.settling_time.has_value();
    }
    if (!settled) {
      out.detail << name << " skipped (not settled); ";
      continue;
    }
    ++runs;
    const double residual = EquilibriumResidual(c, t);
    const testing::OracleEquilibrium eq =
        testing::DampedFixedPoint(c, t.final_state);
    out.Require(eq.converged, std::string(name) + " oracle convergence");
    double gap = 0.0;
    for (size_t d = 0; d < c.devices.size(); ++d) {
      gap = std::max({gap, std::abs(eq.p[d] - t.final_state.dev_p[d]),
                      std::abs(eq.q[d] - t.final_state.dev_q[d])});
    }
    worst_residual = std::max(worst_residual, residual);
    worst_oracle = std::max(worst_oracle, gap);
  }
  out.Require(runs >= 5, "at least five stable runs");
  out.Require(worst_residual <= 1e-6, "residual <= 1e-6");
  out.Require(worst_oracle <= 1e-6, "oracle agreement <= 1e-6");
  out.detail << runs << " stable runs; max residual=" << worst_residual
             << ", max |s - s_oracle|=" << worst_oracle;
}

// Criteria 3 and 4 ----------------------------------------------------------

std::optional<double> LatestSettling(const TraceSummary& s) {
  double latest = 0.0;
  for (const NodeSummary& node : s.nodes) {
    if (!node.settling_time) return std::nullopt;
    latest = std::max(latest, *node.settling_time);
  }
  return latest;
}

void DeskReplica(Outcome& out, const std::string& scenario, double window) {
  ScenarioConfig bias = LoadScenario("ieee37_" + scenario + "_bias");
  ScenarioConfig inj = LoadScenario("ieee37_" + scenario + "_injection");
  const double ta = bias.events.front().time;

  // (a) open loop energy rise.
  ScenarioConfig open = bias;
  open.simulation.adaptive_enabled = false;
  const SimulationTrace t_open = RunScenario(open);
  const double pre = testing::MedianFeederEnergy(t_open, ta - 30.0, ta);
  const double post = testing::MedianFeederEnergy(
      t_open, ta, open.simulation.horizon + 1.0);
  const double ratio = post / std::max(pre, 1e-300);
  out.Require(!t_open.diverged && post >= 50.0 * pre,
              "(a) post-attack median >= 50x pre-attack");
  out.detail << "(a) pre=" << pre << " post=" << post << " ratio="
             << (pre > 0.0 ? ratio : INFINITY);

  // The equilibrium start makes the pre-attack level exactly zero; repeat
  // with 1% load noise so the ratio is taken against a nonzero floor.
  open.simulation.load_noise = 0.01;
  open.simulation.seed = 1;
  const SimulationTrace t_noisy = RunScenario(open);
  const double pre_n = testing::MedianFeederEnergy(t_noisy, ta - 30.0, ta);
  const double post_n = testing::MedianFeederEnergy(
      t_noisy, ta, open.simulation.horizon + 1.0);
  out.Require(!t_noisy.diverged && pre_n > 0.0 && post_n >= 50.0 * pre_n,
              "(a) with load noise");
  out.detail << ", with 1% load noise ratio=" << post_n / pre_n;

  // (b) bias and (c) injection settle within the window.
  const char* labels[] = {"(b) bias", "(c) injection"};
  const ScenarioConfig* configs[] = {&bias, &inj};
  for (int k = 0; k < 2; ++k) {
    const SimulationTrace t = RunScenario(*configs[k]);
    const TraceSummary s = ComputeSummary(t, 0.01, 30.0);
    const std::optional<double> latest = LatestSettling(s);
    const bool ok = !t.diverged && latest && *latest <= ta + window;
    out.Require(ok, std::string(labels[k]) + " settles within window");
    out.detail << "; " << labels[k] << " all nodes below 1% of peak by t=";
    if (latest) {
      out.detail << *latest << " (" << *latest - ta << " s after attack)";
    } else {
      out.detail << "never";
    }
  }
}

// Criterion 5 ---------------------------------------------------------------

void TheoremHarness(Outcome& out) {
  const ScenarioConfig c = LoadScenario("theorem_star5");
  out.Require(c.num_nodes() == 5, "5-node instance");
  PairedRunOptions options;
  options.horizon = 200.0;
  for (HarnessMode mode : {HarnessMode::kInjection, HarnessMode::kBias}) {
    const TheoremReport r = VerifyTheorem(c, mode, options);
    const LyapunovCheck nonincr = CheckVNonincreasing(r.run, 1e-8);
    const bool ok = r.run.certified && nonincr.passed() &&
                    !r.run.e_inf.empty() && r.run.e_inf.back() < 1e-4 &&
                    r.converged_time.has_value();
    out.Require(ok, std::string(HarnessModeName(mode)) + " run");
    out.detail << HarnessModeName(mode) << ": h=" << r.run.certificate.h
               << " offset=" << r.offset.magnitude
               << " V increases=" << nonincr.violations << "/"
               << nonincr.checked << " |e_s|<1e-4 from t="
               << (r.converged_time ? *r.converged_time : -1.0) << "; ";
  }
}

// Criterion 6 ---------------------------------------------------------------

void VdotNegativity(Outcome& out) {
  const ScenarioConfig c = LoadScenario("vdot_star5");
  const HarnessModel model = BuildHarnessModel(c);
  const int n = model.n();
  Eigen::VectorXd kick = Eigen::VectorXd::Zero(2 * n);
  kick.tail(n).setConstant(0.02);
  PairedRunOptions o;
  o.horizon = 30.0;
  o.freeze_adaptation = true;
  o.start_at_offset = true;
  o.plant_perturbation = kick;
  for (HarnessMode mode : {HarnessMode::kInjection, HarnessMode::kBias}) {
    const double cap = mode == HarnessMode::kInjection
                           ? 0.5 * c.adaptive.defaults.w_cap
                           : c.adaptive.defaults.w_cap;
    const OffsetResult minimal = FindStabilizingOffset(model, mode, cap);
    out.Require(minimal.found, "stabilizing offset");
    if (!minimal.found) return;
    // The smallest offset leaves one curve argument on a breakpoint, at the
    // edge of the stable region; the check runs strictly inside it.
    const OffsetResult stable =
        OffsetWithMagnitude(model, mode, minimal, 1.5 * minimal.magnitude);
    out.Require(stable.local_report.satisfied, "interior offset certified");
    const LyapunovCheck good =
        CheckVdotNegative(RunPaired(model, mode, stable, o));
    const OffsetResult none = OffsetWithMagnitude(model, mode, minimal, 0.0);
    const LyapunovCheck bad = CheckVdotNegative(RunPaired(model, mode, none, o));
    out.Require(good.checked > 0 && good.passed(),
                std::string(HarnessModeName(mode)) + " stable region");
    out.Require(!none.local_report.satisfied && bad.violations >= 1,
                std::string(HarnessModeName(mode)) + " control run");
    out.detail << HarnessModeName(mode) << ": offset " << stable.magnitude
               << " (1.5x minimal), stable region " << good.violations
               << "/" << good.checked << " violations, control run "
               << bad.violations << "/" << bad.checked << "; ";
  }
}

// Criterion 7 ---------------------------------------------------------------

void NumericalKernels(Outcome& out) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  std::uniform_real_distribution<double> imp(0.001, 0.3);
  double worst_norm = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double cp = u(rng), cq = u(rng), r = imp(rng), x = imp(rng);
    Eigen::MatrixXd a(2, 2);
    a << cp * r, cp * x, cq * r, cq * x;
    const double oracle = std::sqrt((cp * cp + cq * cq) * (r * r + x * x));
    worst_norm = std::max(worst_norm, std::abs(SpectralNorm(a) - oracle) / oracle);
    Eigen::VectorXd diag(5);
    for (int i = 0; i < 5; ++i) diag(i) = u(rng) - 20.0;
    const double d_oracle = diag.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd dm = diag.asDiagonal();
    worst_norm = std::max(worst_norm,
                          std::abs(SpectralNorm(dm) - d_oracle) / d_oracle);
  }
  out.Require(worst_norm <= 1e-9, "spectral norm within 1e-9 relative");

  double worst_lip = 0.0;
  int curves = 0;
  for (const char* name : {"ieee37_scenario1_bias", "ieee37_scenario2_bias",
                           "single_node_sigma0p5", "single_node_sigma3",
                           "theorem_star5"}) {
    const ScenarioConfig c = LoadScenario(name);
    std::vector<PiecewiseCurve> set;
    for (const DeviceConfig& d : c.devices) {
      set.push_back(d.curves.volt_var);
      set.push_back(d.curves.volt_watt);
    }
    for (const CurveEvent& ev : c.events) {
      set.emplace_back(ev.volt_var);
      set.emplace_back(ev.volt_watt);
    }
    for (const PiecewiseCurve& curve : set) {
      const double analytic = LipschitzConstant(curve, 0.7);
      const double sampled = testing::DenseSamplingLipschitz(curve, 0.7);
      const double rel = analytic == 0.0
                             ? std::abs(sampled)
                             : std::abs(sampled - analytic) / analytic;
      worst_lip = std::max(worst_lip, rel);
      ++curves;
    }
  }
  out.Require(worst_lip <= 1e-6, "Lipschitz within 1e-6 relative");

  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const FeederTopology t = testing::RandomTree(1 + trial % 20, rng);
    const ImpedanceMatrices m = BuildImpedanceMatrices(t);
    Eigen::MatrixXd R, X;
    testing::BruteForceImpedance(t, &R, &X);
    if (m.R == R && m.X == X) ++exact;
  }
  out.Require(exact == 100, "impedance matrices exact on 100 trees");
  out.detail << "spectral norm max rel err=" << worst_norm
             << "; Lipschitz max rel err=" << worst_lip << " over " << curves
             << " curves; impedance exact on " << exact << "/100 trees";
}

// Criterion 8 ---------------------------------------------------------------

void InvariantSuites(Outcome& out) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> volt(0.85, 1.15);

  // Curve monotonicity and Lipschitz soundness.
  int curve_fail = 0;
  int curves = 0;
  for (const char* name : {"ieee37_scenario1_bias", "single_node_sigma3",
                           "theorem_star5"}) {
    const ScenarioConfig c = LoadScenario(name);
    std::vector<PiecewiseCurve> set;
    for (const DeviceConfig& d : c.devices) set.push_back(d.curves.volt_var);
    for (const CurveEvent& ev : c.events) set.emplace_back(ev.volt_var);
    for (const PiecewiseCurve& curve : set) {
      ++curves;
      const double lip = LipschitzConstant(curve, 1.0);
      for (int k = 0; k < 1000; ++k) {
        double a = volt(rng), b = volt(rng);
        if (a > b) std::swap(a, b);
        const double fa = EvalVoltVar(curve, a, 1.0);
        const double fb = EvalVoltVar(curve, b, 1.0);
        if (fa < fb || std::abs(fa - fb) > lip * (b - a) * (1 + 1e-12) + 1e-15) {
          ++curve_fail;
        }
      }
    }
  }
  out.Require(curve_fail == 0, "curve monotonicity/Lipschitz");

  // Filter contraction.
  int filter_fail = 0;
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_real_distribution<double> tc(0.5, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const InverterState s{val(rng), val(rng), tc(rng), tc(rng)};
    const double dt = std::min(s.t_p, s.t_q);
    const double tp = val(rng), tq = val(rng);
    const InverterState n = StepFilter(s, tp, tq, dt);
    if (std::abs(n.p - tp) > std::abs(s.p - tp) ||
        std::abs(n.q - tq) > std::abs(s.q - tq)) {
      ++filter_fail;
    }
  }
  out.Require(filter_fail == 0, "filter contraction");

  // Indicator deadband at |v - xi| = eps and one ulp either side.
  const double eps = std::ldexp(1.0, -14);
  const double v = 1.0 + eps;
  const bool indicator_ok =
      !AdaptationActive(v, 1.0, eps) &&
      AdaptationActive(v, 1.0, std::nextafter(eps, 0.0)) &&
      !AdaptationActive(v, 1.0, std::nextafter(eps, 1.0)) &&
      AdaptationActive(std::nextafter(v, 2.0), 1.0, eps);
  out.Require(indicator_ok, "indicator deadband exactness");

  // Determinism.
  ScenarioConfig det = LoadScenario("ieee37_scenario1_bias");
  det.simulation.load_noise = 0.005;
  det.simulation.seed = 99;
  const bool deterministic =
      TraceCsv(RunScenario(det)) == TraceCsv(RunScenario(det));
  out.Require(deterministic, "byte-identical repeat traces");

  // Timestep refinement on stable scenarios.
  double drift = 0.0;
  ScenarioConfig feeder = LoadScenario("ieee37_scenario2_bias");
  feeder.events.clear();
  feeder.simulation.adaptive_enabled = false;
  feeder.simulation.horizon = 200.0;
  feeder.load_steps = {{20.0, 5, 0.2, 0.06}, {20.0, 30, 0.15, 0.05}};
  for (ScenarioConfig c : {LoadScenario("single_node_sigma0p5"), feeder}) {
    const SimulationTrace coarse = RunScenario(c);
    c.simulation.dt /= 2.0;
    const SimulationTrace fine = RunScenario(c);
    for (size_t i = 0; i < coarse.node_names.size(); ++i) {
      drift = std::max(drift, std::abs(coarse.rows.back().v[i] -
                                       fine.rows.back().v[i]));
    }
  }
  out.Require(drift < 1e-4, "timestep refinement drift < 1e-4");

  // Scenario round-trip.
  int round_trip = 0;
  const char* bundled[] = {"ieee37_scenario1_bias", "ieee37_scenario1_injection",
                           "ieee37_scenario2_bias", "ieee37_scenario2_injection",
                           "single_node_sigma0p5",  "single_node_sigma3",
                           "theorem_star5",         "vdot_star5",
                           "theorem_chain5_counterexample"};
  const int total = static_cast<int>(std::size(bundled));
  for (const char* name : bundled) {
    const ScenarioConfig c = LoadScenario(name);
    if (ParseScenarioText(SerializeScenario(c)) == c) ++round_trip;
  }
  out.Require(round_trip == total, "scenario round-trip");

  out.detail << curves << " curves x 1000 pairs, " << curve_fail
             << " failures; filter failures " << filter_fail
             << "; indicator " << (indicator_ok ? "exact" : "wrong")
             << "; deterministic " << (deterministic ? "yes" : "no")
             << "; dt drift " << drift << " pu; round-trip " << round_trip
             << "/" << total;
}

}  // namespace
}  // namespace vvstab

int main() {
  using vvstab::Criterion;
  using vvstab::Outcome;
  const std::vector<Criterion> criteria = {
      {1, "single-node stability threshold", 1.0, vvstab::SingleNodeThreshold},
      {2, "fixed-point consistency", 5.0, vvstab::FixedPointConsistency},
      {3, "37-node scenario 1 replica", 30.0,
       [](Outcome& o) { vvstab::DeskReplica(o, "scenario1", 150.0); }},
      {4, "37-node scenario 2 replica", 30.0,
       [](Outcome& o) { vvstab::DeskReplica(o, "scenario2", 180.0); }},
      {5, "theorem harness", 10.0, vvstab::TheoremHarness},
      {6, "V-dot negativity", 5.0, vvstab::VdotNegativity},
      {7, "numerical kernels", 60.0, vvstab::NumericalKernels},
      {8, "invariant suites", 60.0, vvstab::InvariantSuites},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    if (elapsed > c.budget_s) {
      out.pass = false;
      out.detail << " [runtime " << elapsed << " s over " << c.budget_s
                 << " s budget]";
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %d (%s, %.3f s): %s\n",
                out.pass ? "PASS" : "FAIL", c.id, c.title, elapsed,
                out.detail.str().c_str());
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
