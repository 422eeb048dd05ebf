#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vvstab/adaptive.h"
#include "vvstab/feeder.h"
#include "vvstab/inverter.h"
#include "vvstab/observer.h"

namespace vvstab {

enum class DeviceRole { kStable, kCompromised, kAdaptiveBias, kAdaptiveInjection };

struct CurvePair {
  PiecewiseCurve volt_var;
  PiecewiseCurve volt_watt;

  bool operator==(const CurvePair&) const = default;
};

struct DeviceConfig {
  std::string name;
  int node = 1;  // feeder node id, 1..n
  InverterRating rating;
  double t_p = 1.0;
  double t_q = 1.0;
  CurvePair curves;
  DeviceRole role = DeviceRole::kStable;
  double p0 = 0.0;  // initial filter state for initial_state = "given"
  double q0 = 0.0;

  bool is_adaptive() const {
    return role == DeviceRole::kAdaptiveBias ||
           role == DeviceRole::kAdaptiveInjection;
  }
  bool operator==(const DeviceConfig&) const = default;
};

struct AdaptiveOverride {
  std::string device;
  std::optional<AdaptiveMode> mode;
  std::optional<double> tau, gamma_p, gamma_q, gamma_v, epsilon, v_crit,
      hysteresis, w_cap;

  bool operator==(const AdaptiveOverride&) const = default;
};

struct AdaptiveSection {
  AdaptiveParams defaults;
  AdaptiveMode injection_mode = AdaptiveMode::kInjectionQ;
  std::vector<AdaptiveOverride> overrides;

  bool operator==(const AdaptiveSection&) const = default;
};

// Replacement curves swapped into every listed device at `time`. Kept as
// raw breakpoints so an invalid replacement is rejected when it fires rather
// than at load time.
struct CurveEvent {
  double time = 0.0;
  std::vector<std::string> devices;
  std::vector<Breakpoint> volt_var;
  std::vector<Breakpoint> volt_watt;

  bool operator==(const CurveEvent&) const = default;
};

// Load change at one node, effective from `time` on.
struct LoadStep {
  double time = 0.0;
  int node = 1;
  double p = 0.0;
  double q = 0.0;

  bool operator==(const LoadStep&) const = default;
};

enum class InitialState { kEquilibrium, kGiven };

struct SimulationParams {
  double dt = 1.0;
  double horizon = 400.0;
  InitialState initial_state = InitialState::kEquilibrium;
  bool adaptive_enabled = true;
  std::uint64_t seed = 0;
  double load_noise = 0.0;  // relative std-dev of per-step load noise

  bool operator==(const SimulationParams&) const = default;
};

struct ScenarioConfig {
  int version = 1;
  std::string name;
  FeederTopology feeder;
  std::vector<double> load_p;  // per node, consumption positive
  std::vector<double> load_q;
  std::vector<LoadStep> load_steps;
  std::vector<DeviceConfig> devices;
  AdaptiveSection adaptive;
  ObserverParams observer;
  std::vector<CurveEvent> events;
  SimulationParams simulation;

  int num_nodes() const { return feeder.num_nodes(); }
  int FindDevice(const std::string& name) const;
  bool operator==(const ScenarioConfig&) const = default;
};

// Controller parameters for one adaptive device after applying overrides.
struct ResolvedController {
  int device = -1;
  AdaptiveMode mode = AdaptiveMode::kBias;
  AdaptiveParams params;
};

std::vector<ResolvedController> ResolveControllers(const ScenarioConfig& config);

// Semantic checks beyond the file schema. Empty when valid.
std::vector<std::string> ValidateScenario(const ScenarioConfig& config);

// Empty when the event's replacement curves satisfy the curve invariants
// (Volt-VAR outputs in [-1, 1], Volt-Watt outputs in [0, 1]).
std::optional<std::string> CheckEventCurves(const CurveEvent& event);

// Device curves after applying every event whose curves are valid.
std::vector<CurvePair> CurvesAfterEvents(const ScenarioConfig& config);

const char* RoleName(DeviceRole role);
const char* ModeName(AdaptiveMode mode);

}  // namespace vvstab
