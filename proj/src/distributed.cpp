#include "dhinf/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace dhinf {

std::vector<NodeMessage> MessageLog::non_local(const CommGraph& g) const {
  std::vector<NodeMessage> out;
  for (const auto& m : entries_) {
    if (!g.has_edge(m.sender, m.receiver)) out.push_back(m);
  }
  return out;
}

void MessageLog::write_csv(std::ostream& os) const {
  os << "iteration,sender,receiver,bytes\n";
  for (const auto& m : entries_) {
    os << m.iteration << ',' << m.sender << ',' << m.receiver << ',' << m.bytes << '\n';
  }
}

ConsensusResult consensus_average(const std::vector<Vec>& values, const CommGraph& g,
                                  const ConsensusProtocol& protocol, MessageLog* log,
                                  int iteration, const std::string& tag) {
  const int N = g.size();
  if (static_cast<int>(values.size()) != N) {
    throw DimensionError("consensus: one value per node required");
  }
  if (N == 0) return {};
  const Eigen::Index d = values[0].size();
  for (const auto& v : values) {
    if (v.size() != d) throw DimensionError("consensus: values differ in length");
  }
  if (!g.strongly_connected()) throw ConsensusError("consensus: graph is not strongly connected");

  Vec mean = Vec::Zero(d);
  for (const auto& v : values) mean += v;
  mean /= N;

  ConsensusResult res;
  const std::size_t payload = static_cast<std::size_t>(d) * sizeof(double);

  if (protocol.kind == ConsensusProtocol::Kind::Exact) {
    // known[k] holds the set of origin nodes whose value k has received.
    std::vector<std::set<int>> known(N);
    for (int k = 0; k < N; ++k) known[k].insert(k);
    for (int round = 0; round + 1 < N; ++round) {
      std::vector<std::set<int>> next = known;
      for (const auto& [from, to] : g.edges()) {
        std::size_t fresh = 0;
        for (int origin : known[from - 1]) {
          if (next[to - 1].insert(origin).second) ++fresh;
        }
        if (log && fresh > 0) log->record({iteration, from, to, tag, fresh * payload});
      }
      known = std::move(next);
    }
    res.values.assign(N, Vec::Zero(d));
    for (int k = 0; k < N; ++k) {
      Vec sum = Vec::Zero(d);
      for (int origin = 0; origin < N; ++origin) sum += values[origin];
      res.values[k] = sum / N;
    }
  } else {
    if (!g.balanced()) throw ConsensusError("consensus: linear protocol needs a balanced graph");
    if (!(protocol.weight > 0.0) || protocol.weight * g.max_in_degree() >= 1.0) {
      throw ConsensusError("consensus: weight must satisfy 0 < w < 1/max_degree");
    }
    std::vector<Vec> x = values;
    for (int round = 0; round < protocol.rounds; ++round) {
      std::vector<Vec> next = x;
      for (int k = 1; k <= N; ++k) {
        for (int j : g.in_neighbors(k)) {
          next[k - 1] += protocol.weight * (x[j - 1] - x[k - 1]);
          if (log) log->record({iteration, j, k, tag, payload});
        }
      }
      x = std::move(next);
    }
    res.values = std::move(x);
  }
  for (const auto& v : res.values) {
    if (d > 0) res.max_deviation = std::max(res.max_deviation, (v - mean).cwiseAbs().maxCoeff());
  }
  return res;
}

void IterationTrace::write_csv(std::ostream& os, bool zero_wall_time) const {
  os << "iteration,error,beta_ave,max_feas_violation,wall_ms\n";
  os << std::setprecision(17);
  for (const auto& r : records) {
    os << r.iteration << ',' << r.error << ',' << r.beta_ave << ',' << r.max_feas_violation << ','
       << (zero_wall_time ? 0.0 : r.wall_ms) << '\n';
  }
}

std::vector<int> copy_set(const NetworkModel& model, int k, CopyMode mode) {
  std::vector<int> out;
  if (mode == CopyMode::Full) {
    for (int j = 1; j <= model.size(); ++j) out.push_back(j);
  } else {
    out = model.graph.in_neighbors(k);
    out.push_back(k);
    std::sort(out.begin(), out.end());
  }
  return out;
}

std::vector<int> holder_set(const NetworkModel& model, int j, CopyMode mode) {
  std::vector<int> out;
  if (mode == CopyMode::Full) {
    for (int k = 1; k <= model.size(); ++k) out.push_back(k);
  } else {
    out = model.graph.out_neighbors(j);
    out.push_back(j);
    std::sort(out.begin(), out.end());
  }
  return out;
}

namespace {

SymMat identity_like(int n) { return SymMat::identity(n); }

// Minimizer of -tr(Lambda X) + c/2 ||T - X||^2 over X >= delta I.
SymMat passive_update(const SymMat& target, const SymMat& Lambda, double c, double delta) {
  const int n = target.dim();
  const SymMat v(target.mat() + Lambda.mat() / c - delta * Mat::Identity(n, n));
  return SymMat(project_psd(v).mat() + delta * Mat::Identity(n, n));
}

}  // namespace

NodeAgent::NodeAgent(const NetworkModel& model, int k, const DistributedOptions& opts)
    : model_(&model), k_(k), opts_(opts) {
  copies_ = copy_set(model, k, opts.copies);
  active_ = model.graph.in_neighbors(k);
  active_.push_back(k);
  std::sort(active_.begin(), active_.end());
  for (int j : copies_) {
    if (!std::binary_search(active_.begin(), active_.end(), j)) passive_.push_back(j);
  }

  const int n = model.n();
  layout_.add_matrix(f_name(k), n, n);
  if (!opts.fixed_beta) layout_.add_scalar(beta_name(), 0.0);
  for (int j : active_) layout_.add_symmetric(x_name(j), n);

  blocks_ = build_decoupled(model, k, layout_, opts.lmi, opts.fixed_beta);
  auto pd = positivity_blocks(layout_, active_, opts.lmi.delta_pd);
  blocks_.insert(blocks_.end(), pd.begin(), pd.end());
  build_solver(opts.c);

  vars_.node = k;
  vars_.F = Mat::Zero(n, n);
  vars_.beta = opts.fixed_beta.value_or(opts.beta0);
  for (int j : copies_) {
    vars_.X[j] = identity_like(n);
    mult_.Lambda[j] = identity_like(n);
  }
}

void NodeAgent::build_solver(double c) {
  // The quadratic part c/2 ||.||^2 is fixed for a given c; only the linear
  // cost moves between iterations.
  const int n = model_->n();
  QuadraticObjective obj;
  for (int j : active_) obj.proximal.push_back({x_name(j), Mat::Zero(n, n), c});
  if (!opts_.fixed_beta) obj.proximal.push_back({beta_name(), Mat::Zero(1, 1), c});
  solver_ = std::make_unique<ConicSolver>(canonicalize(obj, blocks_, layout_), opts_.solver);
  solver_c_ = c;
}

Vec NodeAgent::pack() const {
  Vec x = Vec::Zero(layout_.size());
  layout_.insert(x, f_name(k_), vars_.F);
  if (!opts_.fixed_beta) layout_.insert_scalar(x, beta_name(), vars_.beta);
  for (int j : active_) layout_.insert(x, x_name(j), vars_.X.at(j).mat());
  return x;
}

void NodeAgent::unpack(const Vec& x) {
  vars_.F = layout_.extract(x, f_name(k_));
  if (!opts_.fixed_beta) vars_.beta = layout_.extract_scalar(x, beta_name());
  for (int j : active_) vars_.X[j] = SymMat(layout_.extract(x, x_name(j)));
}

void NodeAgent::set_state(LocalVars vars, Multipliers mult) {
  vars_ = std::move(vars);
  mult_ = std::move(mult);
  solver_->set_start(pack());
}

void NodeAgent::init_feasible(double beta0) {
  const int n = model_->n();
  VarLayout lay;
  lay.add_matrix(f_name(k_), n, n);
  for (int j : active_) lay.add_symmetric(x_name(j), n);
  auto blocks = build_decoupled(*model_, k_, lay, opts_.lmi, beta0);
  auto pd = positivity_blocks(lay, active_, opts_.lmi.delta_pd);
  blocks.insert(blocks.end(), pd.begin(), pd.end());
  const ConicProblem prob = canonicalize(QuadraticObjective{}, std::move(blocks), lay);
  const ConicSolution sol = solve(prob, opts_.solver);
  const FeasibilityReport rep = check_feasible(sol.x, prob, opts_.solver.feas_tol);
  if (!rep.ok) {
    std::ostringstream msg;
    msg << "beta0 = " << beta0 << " outside the feasible range at node " << k_ << " (solver "
        << to_string(sol.status) << ", violation " << rep.worst_violation << ")";
    throw InitError(k_, msg.str());
  }
  vars_.F = lay.extract(sol.x, f_name(k_));
  vars_.beta = beta0;
  for (int j : copies_) vars_.X[j] = identity_like(n);
  for (int j : active_) vars_.X[j] = SymMat(lay.extract(sol.x, x_name(j)));
  mult_.lambda = 1.0;
  for (int j : copies_) mult_.Lambda[j] = identity_like(n);
  solver_->set_start(pack());
}

bool NodeAgent::local_step(const FusionState& fusion, double c) {
  if (c != solver_c_) {
    build_solver(c);
    solver_->set_start(pack());
  }
  QuadraticObjective obj;
  for (int j : active_) {
    obj.linear.push_back({x_name(j), -mult_.Lambda.at(j).mat()});
    obj.proximal.push_back({x_name(j), fusion.X_tilde.at(j).mat(), c});
  }
  if (!opts_.fixed_beta) {
    obj.linear.push_back({beta_name(), Mat::Constant(1, 1, -1.0 - mult_.lambda)});
    obj.proximal.push_back({beta_name(), Mat::Constant(1, 1, fusion.beta_tilde), c});
  }
  const ConicProblem cost = canonicalize(obj, {}, layout_);
  solver_->set_linear_cost(cost.q, cost.constant);
  const ConicSolution sol = solver_->solve();

  bool ok = sol.status == SolveStatus::Optimal;
  if (check_feasible(sol.x, solver_->problem(), opts_.solver.feas_tol).ok) {
    unpack(sol.x);
  } else {
    ok = false;
    solver_->set_start(pack());
  }
  for (int j : passive_) {
    vars_.X[j] = passive_update(fusion.X_tilde.at(j), mult_.Lambda.at(j), c, opts_.lmi.delta_pd);
  }
  return ok;
}

void NodeAgent::dual_step(const FusionState& fusion, double c) {
  if (!opts_.fixed_beta) mult_.lambda += c * (fusion.beta_tilde - vars_.beta);
  for (int j : copies_) {
    mult_.Lambda[j] = mult_.Lambda[j] + SymMat((fusion.X_tilde.at(j).mat() - vars_.X.at(j).mat()) * c);
  }
}

double NodeAgent::feasibility_violation() const {
  double worst = check_feasible(pack(), solver_->problem(), 0.0).worst_violation;
  for (int j : passive_) {
    worst = std::max(worst, opts_.lmi.delta_pd - min_eigenvalue(vars_.X.at(j)));
  }
  return worst;
}

std::vector<FusionState> fusion_step(const NetworkModel& model, const std::vector<LocalVars>& vars,
                                     const std::vector<Multipliers>& mult, double c,
                                     const DistributedOptions& opts, MessageLog* log,
                                     int iteration) {
  const int N = model.size();
  const int n = model.n();
  const int sv = svec_size(n);
  std::vector<FusionState> out(N);

  // beta~ = mean(beta^k - lambda^k / c).
  {
    std::vector<Vec> v(N, Vec(1));
    for (int k = 0; k < N; ++k) v[k](0) = vars[k].beta - mult[k].lambda / c;
    const auto avg = consensus_average(v, model.graph, opts.consensus, log, iteration, "beta");
    for (int k = 0; k < N; ++k) out[k].beta_tilde = avg.values[k](0);
  }

  auto contribution = [&](int k, int j) {
    return svec(SymMat(vars[k - 1].X.at(j).mat() - mult[k - 1].Lambda.at(j).mat() / c));
  };

  if (opts.fusion == FusionRule::OutNeighbor) {
    // (1/q_j) sum over M_j, gathered from the out-neighbours and broadcast back.
    for (int j = 1; j <= N; ++j) {
      const auto& M = model.graph.out_neighbors(j);
      if (M.empty()) throw ConsensusError("out-neighbor fusion needs q_j > 0");
      Vec sum = Vec::Zero(sv);
      for (int k : M) sum += contribution(k, j);
      const SymMat Xt = smat(sum / static_cast<double>(M.size()), n);
      for (int k = 1; k <= N; ++k) {
        if (vars[k - 1].X.count(j)) out[k - 1].X_tilde[j] = Xt;
      }
    }
    return out;
  }

  if (opts.copies == CopyMode::Full) {
    std::vector<Vec> v(N, Vec(N * sv));
    for (int k = 1; k <= N; ++k) {
      for (int j = 1; j <= N; ++j) v[k - 1].segment((j - 1) * sv, sv) = contribution(k, j);
    }
    const auto avg = consensus_average(v, model.graph, opts.consensus, log, iteration, "X");
    for (int k = 0; k < N; ++k) {
      for (int j = 1; j <= N; ++j) out[k].X_tilde[j] = smat(avg.values[k].segment((j - 1) * sv, sv), n);
    }
    return out;
  }

  // Neighbourhood mode: node j gathers from its holders and sends X~_j back.
  const std::size_t bytes = static_cast<std::size_t>(sv) * sizeof(double);
  for (int j = 1; j <= N; ++j) {
    const auto H = holder_set(model, j, CopyMode::Neighborhood);
    Vec sum = Vec::Zero(sv);
    for (int k : H) {
      sum += contribution(k, j);
      if (log && k != j) log->record({iteration, k, j, "gather", bytes});
    }
    const SymMat Xt = smat(sum / static_cast<double>(H.size()), n);
    for (int k : H) {
      out[k - 1].X_tilde[j] = Xt;
      if (log && k != j) log->record({iteration, j, k, "fusion", bytes});
    }
  }
  return out;
}

Disagreement disagreement_error(const NetworkModel& model, const std::vector<LocalVars>& vars,
                                CopyMode mode, bool include_beta) {
  const int N = model.size();
  Disagreement d;
  for (int j = 1; j <= N; ++j) {
    const auto H = holder_set(model, j, mode);
    Mat ave = Mat::Zero(model.n(), model.n());
    for (int k : H) ave += vars[k - 1].X.at(j).mat();
    ave /= static_cast<double>(H.size());
    for (int k : H) d.error += (vars[k - 1].X.at(j).mat() - ave).squaredNorm();
  }
  for (const auto& v : vars) d.beta_ave += v.beta;
  d.beta_ave /= N;
  if (include_beta) {
    for (const auto& v : vars) d.error += (v.beta - d.beta_ave) * (v.beta - d.beta_ave);
  }
  return d;
}

DistributedSolver::DistributedSolver(const NetworkModel& model, DistributedOptions opts)
    : model_(model), opts_(std::move(opts)) {
  if (!(opts_.c > 0.0)) throw std::invalid_argument("penalty c must be positive");
  if (opts_.copies == CopyMode::Neighborhood && !model_.graph.symmetric()) {
    throw std::invalid_argument("neighbourhood copy mode needs an undirected graph");
  }
  if (!opts_.fixed_beta && model_.size() == 1) {
    throw std::invalid_argument(
        "a single node has no coupling term, so beta is unbounded; fix beta instead");
  }
  agents_.reserve(model_.size());
  for (int k = 1; k <= model_.size(); ++k) agents_.emplace_back(model_, k, opts_);
}

void DistributedSolver::initialize() {
  const double beta0 = opts_.fixed_beta.value_or(opts_.beta0);
  for (auto& a : agents_) a.init_feasible(beta0);
  trace_.records.clear();
  log_ = MessageLog{};
  t_ = 0;
}

std::vector<LocalVars> DistributedSolver::vars() const {
  std::vector<LocalVars> out;
  for (const auto& a : agents_) out.push_back(a.vars());
  return out;
}

std::vector<Multipliers> DistributedSolver::multipliers() const {
  std::vector<Multipliers> out;
  for (const auto& a : agents_) out.push_back(a.multipliers());
  return out;
}

namespace {

template <class F>
void for_each_node(int count, int threads, F&& f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

const IterationRecord& DistributedSolver::iterate() {
  const auto start = std::chrono::steady_clock::now();
  ++t_;
  MessageLog* log = opts_.log_messages ? &log_ : nullptr;
  const auto fusion = fusion_step(model_, vars(), multipliers(), opts_.c, opts_, log, t_);

  const int N = model_.size();
  std::vector<char> ok(N, 1);
  for_each_node(N, opts_.threads, [&](int i) { ok[i] = agents_[i].local_step(fusion[i], opts_.c); });
  for (int i = 0; i < N; ++i) agents_[i].dual_step(fusion[i], opts_.c);

  IterationRecord rec;
  rec.iteration = t_;
  const auto d = disagreement_error(model_, vars(), opts_.copies, !opts_.fixed_beta);
  rec.error = d.error;
  rec.beta_ave = d.beta_ave;
  rec.node_violation.resize(N);
  rec.max_feas_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    rec.node_violation[i] = agents_[i].feasibility_violation();
    rec.max_feas_violation = std::max(rec.max_feas_violation, rec.node_violation[i]);
    if (!ok[i]) rec.flagged.push_back(i + 1);
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  trace_.records.push_back(std::move(rec));
  check_divergence();
  return trace_.records.back();
}

void DistributedSolver::check_divergence() const {
  const int w = opts_.divergence_window;
  const auto& r = trace_.records;
  if (w <= 0 || static_cast<int>(r.size()) <= w) return;
  const std::size_t last = r.size() - 1;
  const std::size_t first = last - w;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (!(r[i].error > r[i - 1].error)) return;
  }
  // With beta moving, Error can swing up and down by large factors while
  // staying bounded; only growth past every earlier level counts.
  double earlier = 0.0;
  for (std::size_t i = 0; i < first; ++i) earlier = std::max(earlier, r[i].error);
  if (r[last].error > opts_.divergence_factor * r[first].error &&
      r[last].error > std::max(opts_.divergence_floor, earlier)) {
    std::ostringstream msg;
    msg << "Error grew from " << r[first].error << " to " << r[last].error << " between iterations "
        << r[first].iteration << " and " << r[last].iteration;
    throw DivergenceError(msg.str());
  }
}

Gains DistributedSolver::gains() const {
  std::vector<SymMat> X;
  std::vector<Mat> F;
  double beta = 0.0;
  for (const auto& a : agents_) {
    X.push_back(a.vars().X.at(a.index()));
    F.push_back(a.vars().F);
    beta += a.vars().beta;
  }
  Gains g = extract_gains(X, F, model_);
  g.beta = beta / static_cast<double>(agents_.size());
  return g;
}

DistributedResult DistributedSolver::run() {
  initialize();
  DistributedResult res;
  double prev_beta = std::numeric_limits<double>::quiet_NaN();
  for (int t = 0; t < opts_.max_iter; ++t) {
    const IterationRecord& r = iterate();
    bool done = r.error < opts_.tol;
    if (done && !opts_.fixed_beta && opts_.beta_step_tol > 0.0) {
      done = std::abs(r.beta_ave - prev_beta) <= opts_.beta_step_tol;
    }
    prev_beta = r.beta_ave;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.trace = trace_;
  res.vars = vars();
  res.multipliers = multipliers();
  res.gains = gains();
  res.messages = log_;
  return res;
}

DistributedResult run_distributed(const NetworkModel& model, const DistributedOptions& opts) {
  DistributedSolver solver(model, opts);
  return solver.run();
}

}  // namespace dhinf
