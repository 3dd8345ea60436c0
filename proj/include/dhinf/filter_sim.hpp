#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "dhinf/lmi.hpp"

namespace dhinf {

/// Disturbance shape. Pulses are constant with norm `amplitude` on [t0, t1);
/// damped noise is piecewise-constant Gaussian noise (pieces of length
/// `piece`) scaled by amplitude * exp(-decay t).
struct SignalSpec {
  enum class Kind { Zero, Pulse, DampedNoise };
  Kind kind = Kind::Zero;
  double t0 = 0.0;
  double t1 = 1.0;
  double amplitude = 1.0;
  double decay = 0.5;
  double piece = 0.1;

  bool operator==(const SignalSpec&) const = default;

  static SignalSpec zero() { return {}; }
  static SignalSpec pulse(double t0, double t1, double amplitude) {
    SignalSpec s;
    s.kind = Kind::Pulse;
    s.t0 = t0;
    s.t1 = t1;
    s.amplitude = amplitude;
    return s;
  }
  static SignalSpec damped_noise(double amplitude, double decay, double piece = 0.1) {
    SignalSpec s;
    s.kind = Kind::DampedNoise;
    s.amplitude = amplitude;
    s.decay = decay;
    s.piece = piece;
    return s;
  }
};

class SignalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A realized vector signal on [0, horizon].
class Signal {
 public:
  Signal() = default;
  /// Throws SignalError when decay <= 0 or piece <= 0 for damped noise.
  Signal(const SignalSpec& spec, int dim, double horizon, std::uint64_t seed);

  int dim() const { return dim_; }
  Vec value(double t) const;
  /// Value at time t with the noise piece fixed to `piece_index` (used by the
  /// integrator so that a step never straddles two pieces).
  Vec value(double t, int piece_index) const;
  int piece_index(double t) const;
  /// Exact L2 energy on [0, horizon].
  double energy() const;

 private:
  SignalSpec spec_;
  int dim_ = 0;
  double horizon_ = 0.0;
  std::vector<Vec> pieces_;
};

/// xi for the plant and one eta_k per node.
struct DisturbanceSet {
  Signal xi;
  std::vector<Signal> eta;
};

/// Deterministic given the seed; each signal draws from its own stream.
DisturbanceSet disturbance_signals(const NetworkModel& model, const SignalSpec& xi,
                                   const SignalSpec& eta, double horizon, std::uint64_t seed);

struct Scenario {
  const NetworkModel* model = nullptr;
  Gains gains;
  Vec x0;
  double horizon = 50.0;
  double dt = 1e-3;
  /// Samples kept every `stride` steps (integrals always use every step).
  int stride = 10;
  DisturbanceSet disturbances;
};

struct SimulationTrace {
  std::vector<double> time;
  std::vector<Vec> x;
  std::vector<std::vector<Vec>> xhat;  // [sample][node]
  std::vector<std::vector<Vec>> e;     // [sample][node], e_k = x - xhat_k
  std::vector<double> psi;
  Vec x0;
  // Integrals over [0, horizon].
  double psi_integral = 0.0;
  std::vector<double> error_energy;  // per node, integral of ||e_k||^2
  double xi_energy = 0.0;
  std::vector<double> eta_energy;
  // Running integrals at each sample, for the trajectory export.
  std::vector<double> running_psi;
  std::vector<double> running_error;  // (1/N) sum_k integral ||e_k||^2
  std::vector<double> running_disturbance;  // (1/N) sum ||eta_k||^2 + ||xi||^2

  const Vec& error(int sample, int node) const { return e[sample][node - 1]; }
  /// Writes time, x, per-node estimates, psi, running ratios (x0'Px0 is
  /// supplied by the caller through `x0_weight`).
  void write_csv(std::ostream& os, double x0_weight) const;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(double t, const std::string& what) : std::runtime_error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Psi = (1/N) sum_k sum_{j in N_k} ||xhat_j - xhat_k||^2.
double disagreement(const std::vector<Vec>& xhat, const CommGraph& g);

/// Fixed-step RK4 on the joint plant/estimator system, with xhat_k(0) = 0.
/// Stiff gains split each step into a fixed number of substeps.
/// Throws SimulationError when an estimation error becomes non-finite (the
/// plant state itself may grow without bound).
SimulationTrace integrate(const Scenario& s);

struct HinfMetrics {
  double consensus_ratio = 0.0;
  double error_ratio = 0.0;
  double gamma = 0.0;  // 1 / beta
  double denominator = 0.0;
  bool pass = false;
};

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// consensus_ratio = int Psi / (x0'Px0 + (1/N) sum ||eta_k||^2 + ||xi||^2);
/// pass iff consensus_ratio <= margin / beta. Throws MetricsError on a zero
/// denominator.
HinfMetrics hinf_metrics(const SimulationTrace& trace, const SymMat& P, double beta,
                         double margin = 1.05);

struct BatterySpec {
  int realizations = 20;
  SignalSpec xi = SignalSpec::damped_noise(1.0, 0.2);
  SignalSpec eta = SignalSpec::damped_noise(1.0, 0.2);
  double horizon = 50.0;
  double dt = 1e-3;
  double x0_radius = 1.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BatteryRun {
  std::uint64_t seed = 0;
  Vec x0;
  HinfMetrics metrics;
};

/// Random x0 with ||x0|| <= radius: Gaussian direction, radius * U^(1/n).
Vec sample_x0(int n, double radius, std::uint64_t seed);

/// Realization i uses seed + i for both x0 and the disturbances.
std::vector<BatteryRun> run_battery(const NetworkModel& model, const Gains& gains,
                                    const BatterySpec& spec);

struct DecayCheck {
  Vec x0;
  double worst_ratio = 0.0;  // max_k ||e_k(T)|| / ||x0||
  bool pass = false;
};

/// Zero disturbances from seeded x0 (seed + i), pass iff
/// max_k ||e_k(horizon)|| <= factor * ||x0||.
std::vector<DecayCheck> decay_checks(const NetworkModel& model, const Gains& gains, int count,
                                     double horizon, double factor, std::uint64_t seed,
                                     double dt = 1e-3);

}  // namespace dhinf
