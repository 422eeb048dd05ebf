// Command-line front end: run, check and verify scenarios.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vvstab/errors.h"
#include "vvstab/feeder.h"
#include "vvstab/io.h"
#include "vvstab/scenario.h"
#include "vvstab/sim.h"
#include "vvstab/stability.h"
#include "vvstab/verification.h"

namespace {

using vvstab::ScenarioConfig;

struct Overrides {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  bool disable_adaptive = false;
};

ScenarioConfig Load(const std::string& path, const Overrides& o) {
  ScenarioConfig cfg = vvstab::ParseScenario(path);
  if (o.dt) cfg.simulation.dt = *o.dt;
  if (o.horizon) cfg.simulation.horizon = *o.horizon;
  if (o.seed) cfg.simulation.seed = *o.seed;
  if (o.disable_adaptive) cfg.simulation.adaptive_enabled = false;
  if (auto errors = vvstab::ValidateScenario(cfg); !errors.empty()) {
    throw vvstab::ScenarioError(errors);
  }
  return cfg;
}

int Run(const std::string& path, const std::string& out_dir, const Overrides& o) {
  ScenarioConfig cfg = Load(path, o);
  vvstab::SimulationTrace trace = vvstab::RunScenario(cfg);
  vvstab::TraceSummary summary = vvstab::ComputeSummary(trace);
  vvstab::WriteTrace(trace, summary, out_dir);
  std::cout << vvstab::FormatSummary(trace, summary);
  return trace.diverged ? 3 : 0;
}

void PrintCertificate(const char* label, const vvstab::CertificateSearch& c) {
  std::cout << "  " << label << ": "
            << (c.found ? "non-positive" : "not non-positive within cap")
            << " h=" << c.h << " worst_entry=" << c.check.worst << "\n";
}

int Check(const std::string& path, const Overrides& o) {
  ScenarioConfig cfg = Load(path, o);
  const vvstab::ImpedanceMatrices mats = vvstab::BuildImpedanceMatrices(cfg.feeder);
  const int n = cfg.num_nodes();
  std::vector<vvstab::CurvePair> pre;
  for (const auto& d : cfg.devices) pre.push_back(d.curves);
  const std::pair<const char*, std::vector<vvstab::CurvePair>> sets[] = {
      {"pre-attack", pre}, {"post-attack", vvstab::CurvesAfterEvents(cfg)}};
  for (const auto& [label, curves] : sets) {
    std::cout << "[" << label << "]\n";
    std::cout << vvstab::FormatStabilityReport(
        vvstab::CurveSetReport(cfg, mats, curves));
    vvstab::NodeLipschitz lip = vvstab::AggregateLipschitz(cfg, curves);
    vvstab::CertificateInputs in;
    in.Z = mats.Z;
    in.C_s = lip.C_s();
    in.T = lip.t;
    const auto& g = cfg.adaptive.defaults;
    Eigen::VectorXd gamma(2 * n);
    gamma << Eigen::VectorXd::Constant(n, g.gamma_p),
        Eigen::VectorXd::Constant(n, g.gamma_q);
    in.Gamma = gamma.asDiagonal();
    PrintCertificate("lambda", vvstab::SearchLambdaCertificate(
                                   in, Eigen::MatrixXd::Identity(2 * n, 2 * n)));
    in.Gamma = Eigen::MatrixXd::Identity(n, n) * g.gamma_v;
    PrintCertificate("theta", vvstab::SearchThetaCertificate(
                                  in, Eigen::MatrixXd::Identity(n, n)));
  }
  return 0;
}

int Verify(const std::string& path, const std::string& mode,
           const Overrides& o) {
  ScenarioConfig cfg = Load(path, o);
  vvstab::PairedRunOptions opts;
  opts.horizon = cfg.simulation.horizon;
  if (o.dt) opts.dt = *o.dt;
  const auto m = mode == "bias" ? vvstab::HarnessMode::kBias
                                : vvstab::HarnessMode::kInjection;
  vvstab::TheoremReport report = vvstab::VerifyTheorem(cfg, m, opts);
  std::cout << report.Describe();
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-static feeder simulator with Volt-VAR/Volt-Watt inverters"};
  app.require_subcommand(1);
  Overrides o;
  std::string scenario;
  std::string out_dir;
  std::string mode = "injection";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario, "Scenario JSON file")->required();
    sub->add_option("--dt", o.dt, "Override time step (s)");
    sub->add_option("--horizon", o.horizon, "Override horizon (s)");
    sub->add_option("--seed", o.seed, "Seed for optional load noise");
    sub->add_flag("--disable-adaptive", o.disable_adaptive,
                  "Run adaptive devices as plain droop devices");
  };
  CLI::App* run = app.add_subcommand("run", "Simulate and write trace + summary");
  add_common(run);
  run->add_option("--out", out_dir, "Output directory")->required();
  CLI::App* check = app.add_subcommand("check", "Stability certificates");
  add_common(check);
  CLI::App* verify = app.add_subcommand("verify", "Theorem harness report");
  add_common(verify);
  verify->add_option("--mode", mode, "injection or bias")
      ->check(CLI::IsMember({"injection", "bias"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return Run(scenario, out_dir, o);
    if (*check) return Check(scenario, o);
    if (*verify) return Verify(scenario, mode, o);
  } catch (const vvstab::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
