#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhinf/lmi.hpp"

namespace dhinf {

enum class CopyMode { Full, Neighborhood };
/// Exact averages every holder's copy (the minimizer of the augmented
/// Lagrangian in X~); OutNeighbor averages only the copies of j held by its
/// out-neighbours M_j.
enum class FusionRule { Exact, OutNeighbor };

struct ConsensusProtocol {
  enum class Kind { Exact, Linear };
  Kind kind = Kind::Exact;
  int rounds = 200;
  double weight = 0.4;

  bool operator==(const ConsensusProtocol&) const = default;

  static ConsensusProtocol exact() { return {}; }
  static ConsensusProtocol linear(int rounds, double weight) {
    return {Kind::Linear, rounds, weight};
  }
};

/// Y_k: the gain variable F_k, the local beta^k and the held copies X_j^k.
struct LocalVars {
  int node = 0;
  Mat F;
  double beta = 0.0;
  std::map<int, SymMat> X;
};

struct Multipliers {
  double lambda = 1.0;
  std::map<int, SymMat> Lambda;
};

/// Fusion point as seen by one node. With exact consensus every node sees the
/// same values; with the linear protocol each node has its own approximation.
struct FusionState {
  double beta_tilde = 0.0;
  std::map<int, SymMat> X_tilde;
};

struct NodeMessage {
  int iteration = 0;
  int sender = 0;
  int receiver = 0;
  std::string tag;
  std::size_t bytes = 0;
};

class MessageLog {
 public:
  void record(NodeMessage m) { entries_.push_back(std::move(m)); }
  const std::vector<NodeMessage>& entries() const { return entries_; }
  /// Messages whose (sender, receiver) pair is not an edge of g.
  std::vector<NodeMessage> non_local(const CommGraph& g) const;
  void write_csv(std::ostream& os) const;

 private:
  std::vector<NodeMessage> entries_;
};

struct ConsensusResult {
  std::vector<Vec> values;   // per node
  double max_deviation = 0;  // max |value - true mean| over nodes and entries
};

class ConsensusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Average of one vector per node. Exact mode floods every value along the
/// edges for N-1 rounds and then sums in node order, so all nodes obtain the
/// same bits. Linear mode runs x_k += w * sum_{j in N_k} (x_j - x_k).
/// Throws ConsensusError for an unbalanced or disconnected graph in linear
/// mode and for a disconnected graph in exact mode.
ConsensusResult consensus_average(const std::vector<Vec>& values, const CommGraph& g,
                                  const ConsensusProtocol& protocol, MessageLog* log = nullptr,
                                  int iteration = 0, const std::string& tag = "consensus");

struct IterationRecord {
  int iteration = 0;
  double error = 0.0;
  double beta_ave = 0.0;
  double max_feas_violation = 0.0;
  std::vector<double> node_violation;
  double wall_ms = 0.0;
  /// Nodes whose local solve did not return Optimal at this iteration.
  std::vector<int> flagged;
};

struct IterationTrace {
  std::vector<IterationRecord> records;

  int size() const { return static_cast<int>(records.size()); }
  /// Columns iteration, error, beta_ave, max_feas_violation, wall_ms.
  void write_csv(std::ostream& os, bool zero_wall_time = false) const;
};

struct DistributedOptions {
  double c = 1.0;
  int max_iter = 200;
  double tol = 1e-2;
  /// Pinned beta for the pure feasibility variant; nullopt optimizes beta.
  std::optional<double> fixed_beta;
  double beta0 = 100.0;
  CopyMode copies = CopyMode::Full;
  FusionRule fusion = FusionRule::Exact;
  ConsensusProtocol consensus;
  LmiParams lmi;
  SolverOptions solver;
  int threads = 1;
  /// When positive and beta is optimized, stopping additionally needs
  /// |beta^ave(t) - beta^ave(t-1)| <= beta_step_tol.
  double beta_step_tol = 0.0;
  /// Abort when Error rises in each of `divergence_window` consecutive
  /// iterations by a total factor above `divergence_factor` and ends above
  /// every Error recorded before the window.
  int divergence_window = 20;
  double divergence_factor = 10.0;
  /// Growth below this Error level is not treated as divergence.
  double divergence_floor = 1e-2;
  bool log_messages = false;
};

class InitError : public std::runtime_error {
 public:
  InitError(int node, const std::string& what) : std::runtime_error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Indices held by node k (sorted).
std::vector<int> copy_set(const NetworkModel& model, int k, CopyMode mode);
/// Nodes holding a copy of X_j (sorted).
std::vector<int> holder_set(const NetworkModel& model, int j, CopyMode mode);

/// One node of the network: its local problem, persistent solver and state.
class NodeAgent {
 public:
  NodeAgent(const NetworkModel& model, int k, const DistributedOptions& opts);

  int index() const { return k_; }
  const std::vector<int>& copies() const { return copies_; }
  /// Copies entering the node's inequalities ({k} and N_k).
  const std::vector<int>& active() const { return active_; }

  /// Strictly feasible Y_k(0) with beta pinned to beta0; lambda = 1, Lambda = I.
  /// Throws InitError when the decoupled inequalities admit no point.
  void init_feasible(double beta0);

  /// Minimizes the node's augmented Lagrangian over Omega_k, warm-started from
  /// the previous iterate. Returns false when the solver did not reach
  /// Optimal; a non-feasible result is discarded in favour of the previous Y_k.
  /// Changing c between calls rebuilds the quadratic part of the subproblem.
  bool local_step(const FusionState& fusion, double c);
  void dual_step(const FusionState& fusion, double c);

  const LocalVars& vars() const { return vars_; }
  const Multipliers& multipliers() const { return mult_; }
  void set_state(LocalVars vars, Multipliers mult);

  /// Largest violation of the node's decoupled inequalities and of X_j^k >= delta_pd I.
  double feasibility_violation() const;
  const ConicProblem& local_problem() const { return solver_->problem(); }
  const VarLayout& layout() const { return layout_; }
  Vec pack() const;

 private:
  void unpack(const Vec& x);
  void build_solver(double c);

  const NetworkModel* model_;
  int k_;
  DistributedOptions opts_;
  std::vector<int> copies_;
  std::vector<int> active_;
  std::vector<int> passive_;
  VarLayout layout_;
  std::vector<AffineBlock> blocks_;
  std::unique_ptr<ConicSolver> solver_;
  double solver_c_ = 0.0;
  LocalVars vars_;
  Multipliers mult_;
};

/// Step 1 for every node. Per-node results coincide under exact consensus.
std::vector<FusionState> fusion_step(const NetworkModel& model, const std::vector<LocalVars>& vars,
                                     const std::vector<Multipliers>& mult, double c,
                                     const DistributedOptions& opts, MessageLog* log = nullptr,
                                     int iteration = 0);

/// Error = sum_j sum_{k in H_j} ||X_j^k - X_j^ave||^2 (+ sum_k |beta^k - beta^ave|^2
/// when beta is optimized); also returns beta^ave.
struct Disagreement {
  double error = 0.0;
  double beta_ave = 0.0;
};
Disagreement disagreement_error(const NetworkModel& model, const std::vector<LocalVars>& vars,
                                 CopyMode mode, bool include_beta);

struct DistributedResult {
  IterationTrace trace;
  std::vector<LocalVars> vars;
  std::vector<Multipliers> multipliers;
  Gains gains;
  MessageLog messages;
  bool converged = false;
};

class DistributedSolver {
 public:
  DistributedSolver(const NetworkModel& model, DistributedOptions opts);
  DistributedSolver(const DistributedSolver&) = delete;
  DistributedSolver& operator=(const DistributedSolver&) = delete;

  /// Runs init_feasible on every node.
  void initialize();
  /// One fusion / local / dual round; appends to the trace.
  const IterationRecord& iterate();
  /// initialize() then iterate() until max_iter or Error < tol.
  DistributedResult run();

  const std::vector<NodeAgent>& agents() const { return agents_; }
  std::vector<LocalVars> vars() const;
  std::vector<Multipliers> multipliers() const;
  const IterationTrace& trace() const { return trace_; }
  const MessageLog& messages() const { return log_; }
  Gains gains() const;

 private:
  void check_divergence() const;

  NetworkModel model_;
  DistributedOptions opts_;
  std::vector<NodeAgent> agents_;
  IterationTrace trace_;
  MessageLog log_;
  int t_ = 0;
};

DistributedResult run_distributed(const NetworkModel& model, const DistributedOptions& opts);

}  // namespace dhinf
