#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhinf/distributed.hpp"
#include "dhinf/filter_sim.hpp"

namespace dhinf {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

struct SynthesisConfig {
  LmiParams lmi;
  double c = 1.0;
  /// nullopt optimizes beta.
  std::optional<double> fixed_beta = 100.0;
  double beta0 = 100.0;
  int max_iter = 200;
  double tol = 1e-2;
  double beta_step_tol = 0.0;
  CopyMode copies = CopyMode::Full;
  FusionRule fusion = FusionRule::Exact;
  ConsensusProtocol consensus;
  SolverOptions solver;
  int threads = 1;

  DistributedOptions distributed_options() const;
};

struct SimulationConfig {
  int realizations = 20;
  double horizon = 50.0;
  double dt = 1e-3;
  double x0_radius = 1.0;
  SignalSpec xi = SignalSpec::damped_noise(1.0, 0.2);
  SignalSpec eta = SignalSpec::damped_noise(1.0, 0.2);
  int decay_count = 10;
  double decay_horizon = 20.0;
  double decay_factor = 1e-3;
  double margin = 1.05;
  int threads = 1;
};

/// A complete run description. All random streams derive from `seed`:
/// the battery uses seed + battery_seed_offset, the decay check
/// seed + decay_seed_offset.
struct ScenarioConfig {
  std::string name;
  Plant plant;
  std::vector<SensorNode> nodes;
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  SynthesisConfig synthesis;
  SimulationConfig simulation;
  std::uint64_t seed = 1;
  std::string output_dir;
  /// When set and some (Atilde_k, Btilde_k) is not controllable, eps * I
  /// disturbance columns are appended to B and every Dbar_k.
  std::optional<double> padding;

  static constexpr std::uint64_t battery_seed_offset = 1000;
  static constexpr std::uint64_t decay_seed_offset = 2000;

  CommGraph graph() const { return CommGraph(node_count, edges); }
  /// Copy with the disturbance padding applied when it is configured and
  /// controllability fails; otherwise an unchanged copy.
  ScenarioConfig padded() const;
  /// Validates and derives (after padding); throws the model-building errors.
  NetworkModel model() const;
  BatterySpec battery() const;

  bool operator==(const ScenarioConfig& o) const;
};

/// `base_dir` resolves `file <path>` matrix references.
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// The six-sensor example: the printed A, B = [0.1 I6, 0] (one zero column),
/// C_k reading coordinates k and k mod 6 + 1, D_k = 0, Dbar_k = 0.01 I2,
/// directed cycle k -> k+1, alpha_k = 4, rho = 1e4, delta = 1e-4, c = 1.
ScenarioConfig reference_scenario();
/// Three nodes on an undirected cycle observing a 2-state plant through
/// scalar outputs; small enough for exhaustive oracle comparisons.
ScenarioConfig toy_scenario();

}  // namespace dhinf
