#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vvstab/adaptive.h"
#include "vvstab/scenario.h"
#include "vvstab/stability.h"

namespace vvstab {

enum class HarnessMode { kInjection, kBias };

// Node-aggregated plant T s_dot = f(Z s + v_bar + forcing) - s built from a
// scenario's post-event curve set.
struct HarnessModel {
  struct Member {
    InverterRating rating;
    CurvePair curves;
  };

  Eigen::MatrixXd Z;      // n x 2n
  Eigen::VectorXd v_bar;  // v0 1 - Z s_load
  Eigen::VectorXd T;      // 2n
  Eigen::MatrixXd C_s;    // 2n x n, conservative global constants
  std::vector<std::vector<Member>> node_devices;
  AdaptiveParams gains;

  int n() const { return static_cast<int>(Z.rows()); }
  // Stacked aggregate setpoints [p; q] for per-node curve arguments.
  Eigen::VectorXd Targets(const Eigen::VectorXd& argument) const;
  // Local Lipschitz matrix (2n x n) from the segment slopes at the arguments.
  Eigen::MatrixXd LocalLipschitz(const Eigen::VectorXd& argument) const;
};

// Throws ConfigError when devices sharing a node have different filter
// constants (the node state would not be a single first-order lag).
HarnessModel BuildHarnessModel(const ScenarioConfig& config);

// Damped fixed point of s = f(Z s + v_bar + forcing). Throws NumericalError.
Eigen::VectorXd ForcedEquilibrium(const HarnessModel& model,
                                  const Eigen::VectorXd& forcing);

// Per-node curve-argument shift: c I^T B u with B = I (injection, u of
// length 2n) or d D w with D = I (bias, w of length n).
Eigen::VectorXd ModeForcing(HarnessMode mode, const SignPair& signs,
                            const Eigen::VectorXd& offset);

struct OffsetResult {
  bool found = false;
  double magnitude = 0.0;
  SignPair signs;
  bool mixed_signs = false;  // unforced voltages straddle v_crit
  Eigen::VectorXd offset;       // u* (2n) or w* (n)
  Eigen::VectorXd equilibrium;  // forced equilibrium state
  Eigen::VectorXd argument;     // curve arguments at that equilibrium
  StabilityReport unforced_report;
  StabilityReport local_report;
  std::string note;
};

// Smallest uniform offset magnitude on [0, cap] (grid then bisection) whose
// forced equilibrium has local Lipschitz constants satisfying sigma <= 1
// with M = T. The offset points where the adaptation law drives u or w
// from zero: u* = -c m 1, w* = -d m 1.
OffsetResult FindStabilizingOffset(const HarnessModel& model, HarnessMode mode,
                                   double cap = 0.1, int grid = 400);

// Offset of the given magnitude with the signs of an existing search.
OffsetResult OffsetWithMagnitude(const HarnessModel& model, HarnessMode mode,
                                 const OffsetResult& base, double magnitude);

struct PairedRunOptions {
  double dt = 0.1;
  double horizon = 200.0;
  bool freeze_adaptation = false;
  // mu(0) = 0 (plant forced exactly like the reference) instead of -u*.
  bool start_at_offset = false;
  Eigen::VectorXd plant_perturbation;  // added to the plant's initial state
  double h_cap = 1e6;
};

struct PairedRunResult {
  HarnessMode mode = HarnessMode::kInjection;
  bool certified = false;    // Lambda / Theta non-positive at the found H
  bool exploratory = false;  // !certified
  CertificateSearch certificate;
  std::vector<double> t, V, e_inf;
  double max_identity_error = 0.0;  // max |e_v - Z e_s|
  Eigen::VectorXd mu_final;
};

PairedRunResult RunPaired(const HarnessModel& model, HarnessMode mode,
                          const OffsetResult& offset,
                          const PairedRunOptions& options);

struct LyapunovCheck {
  int checked = 0;
  int violations = 0;
  double worst_increase = 0.0;
  std::optional<double> first_violation_time;
  bool passed() const { return violations == 0; }
};

// Delta V < 0 at every step with ||e_s||_inf > band.
LyapunovCheck CheckVdotNegative(const PairedRunResult& run, double band = 1e-8);

// Delta V <= 0 at every step with ||e_s||_inf > band.
LyapunovCheck CheckVNonincreasing(const PairedRunResult& run,
                                  double band = 1e-8);

struct TheoremReport {
  HarnessMode mode = HarnessMode::kInjection;
  OffsetResult offset;
  PairedRunResult run;
  LyapunovCheck lyapunov;
  double final_error = 0.0;
  double max_error = 0.0;
  std::optional<double> converged_time;  // last time ||e_s|| >= 1e-4, plus dt
  bool passed = false;
  std::string Describe() const;
};

// Offset search, certified paired run and the V / convergence checks.
TheoremReport VerifyTheorem(const ScenarioConfig& config, HarnessMode mode,
                            PairedRunOptions options);

const char* HarnessModeName(HarnessMode mode);

}  // namespace vvstab
