#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vvstab/scenario.h"
#include "vvstab/stability.h"

namespace vvstab {

inline constexpr int kScenarioVersion = 1;

// Every problem found while reading a scenario, each with field context.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Never throws anything but ScenarioError for malformed content; the result
// has passed ValidateScenario.
ScenarioConfig ParseScenarioText(const std::string& text);
ScenarioConfig ParseScenario(const std::filesystem::path& path);

std::string SerializeScenario(const ScenarioConfig& config);

// 64-bit FNV-1a of the text, as 16 hex digits.
std::string HashText(const std::string& text);

struct SimulationTrace;
struct TraceSummary;

std::string TraceCsv(const SimulationTrace& trace);
std::string FormatSummary(const SimulationTrace& trace,
                          const TraceSummary& summary);
std::string FormatStabilityReport(const StabilityReport& report);

// Writes trace.csv, energy_percentiles.csv, summary.txt and scenario.json
// into dir (created if needed). Throws std::runtime_error with the path.
void WriteTrace(const SimulationTrace& trace, const TraceSummary& summary,
                const std::filesystem::path& dir);

}  // namespace vvstab
