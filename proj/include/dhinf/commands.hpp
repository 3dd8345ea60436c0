#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "dhinf/config.hpp"

namespace dhinf {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitInfeasible = 2, kExitRuntime = 3 };

struct SynthRequest {
  enum class Mode { Central, Distributed };
  Mode mode = Mode::Distributed;
  /// "fixed:<value>" or "opt"; empty keeps the config's choice.
  std::string beta;
  /// Run directory; empty uses the config's output entry.
  std::string out;
  std::optional<int> max_iter;
  bool messages = false;
  /// Record measured wall time in trace.csv (otherwise written as 0 so that
  /// repeated runs are byte-identical).
  bool wall_time = false;
};

/// Parses "fixed:<v>" / "opt" into the synthesis section. Throws ConfigError.
void apply_beta_option(SynthesisConfig& s, const std::string& beta);

/// Each command writes its part of report.txt and mirrors it to `log`.
int cmd_check(const ScenarioConfig& cfg, std::ostream& log);
int cmd_synth(const ScenarioConfig& cfg, const SynthRequest& req, std::ostream& log);
/// Writes decay.csv, battery.csv, trajectory.csv and a verification section
/// of report.txt into `out_dir`.
int cmd_verify(const ScenarioConfig& cfg, const std::string& gains_dir, const std::string& out_dir,
               std::ostream& log);
/// fig1.csv (iteration, error) always; fig2.csv (iteration, error, beta_ave)
/// when beta varies along the trace.
int cmd_export_figures(const std::string& trace_dir, std::ostream& log);

}  // namespace dhinf
