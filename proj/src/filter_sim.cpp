#include "dhinf/filter_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>

namespace dhinf {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Signal::Signal(const SignalSpec& spec, int dim, double horizon, std::uint64_t seed)
    : spec_(spec), dim_(dim), horizon_(horizon) {
  if (dim < 0) throw SignalError("signal dimension must be nonnegative");
  if (spec.kind == SignalSpec::Kind::DampedNoise) {
    if (!(spec.decay > 0.0)) throw SignalError("damped noise needs decay > 0");
    if (!(spec.piece > 0.0)) throw SignalError("damped noise needs a positive piece length");
    auto gen = stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int count = static_cast<int>(std::ceil(horizon / spec.piece)) + 1;
    pieces_.reserve(count);
    for (int i = 0; i < count; ++i) {
      Vec w(dim);
      for (int j = 0; j < dim; ++j) w(j) = normal(gen);
      pieces_.push_back(std::move(w));
    }
  } else if (spec.kind == SignalSpec::Kind::Pulse && spec.t1 < spec.t0) {
    throw SignalError("pulse needs t0 <= t1");
  }
}

int Signal::piece_index(double t) const {
  if (spec_.kind != SignalSpec::Kind::DampedNoise) return 0;
  const int i = static_cast<int>(std::floor(t / spec_.piece));
  return std::clamp(i, 0, static_cast<int>(pieces_.size()) - 1);
}

Vec Signal::value(double t) const { return value(t, piece_index(t)); }

Vec Signal::value(double t, int piece) const {
  switch (spec_.kind) {
    case SignalSpec::Kind::Zero:
      return Vec::Zero(dim_);
    case SignalSpec::Kind::Pulse:
      if (dim_ == 0 || t < spec_.t0 || t >= spec_.t1) return Vec::Zero(dim_);
      return Vec::Constant(dim_, spec_.amplitude / std::sqrt(static_cast<double>(dim_)));
    case SignalSpec::Kind::DampedNoise:
      return spec_.amplitude * std::exp(-spec_.decay * t) * pieces_.at(piece);
  }
  return Vec::Zero(dim_);
}

double Signal::energy() const {
  switch (spec_.kind) {
    case SignalSpec::Kind::Zero:
      return 0.0;
    case SignalSpec::Kind::Pulse: {
      if (dim_ == 0) return 0.0;
      const double a = std::clamp(spec_.t0, 0.0, horizon_);
      const double b = std::clamp(spec_.t1, 0.0, horizon_);
      return spec_.amplitude * spec_.amplitude * (b - a);
    }
    case SignalSpec::Kind::DampedNoise: {
      const double two_d = 2.0 * spec_.decay;
      double e = 0.0;
      for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const double a = i * spec_.piece;
        if (a >= horizon_) break;
        const double b = std::min(horizon_, (i + 1) * spec_.piece);
        e += pieces_[i].squaredNorm() * (std::exp(-two_d * a) - std::exp(-two_d * b)) / two_d;
      }
      return spec_.amplitude * spec_.amplitude * e;
    }
  }
  return 0.0;
}

DisturbanceSet disturbance_signals(const NetworkModel& model, const SignalSpec& xi,
                                   const SignalSpec& eta, double horizon, std::uint64_t seed) {
  DisturbanceSet d;
  auto sub = [&](std::uint64_t index) { return stream(seed, index)(); };
  d.xi = Signal(xi, model.plant.m(), horizon, sub(0));
  for (int k = 1; k <= model.size(); ++k) {
    d.eta.emplace_back(eta, model.node(k).s(), horizon, sub(static_cast<std::uint64_t>(k)));
  }
  return d;
}

double disagreement(const std::vector<Vec>& xhat, const CommGraph& g) {
  const int N = g.size();
  if (static_cast<int>(xhat.size()) != N) throw DimensionError("disagreement: one estimate per node");
  double psi = 0.0;
  for (int k = 1; k <= N; ++k) {
    for (int j : g.in_neighbors(k)) psi += (xhat[j - 1] - xhat[k - 1]).squaredNorm();
  }
  return N > 0 ? psi / N : 0.0;
}

namespace {

// The plant state grows without bound when A is unstable, so estimates are
// carried as errors e_k = x - xhat_k, whose dynamics do not involve x:
//   de_k/dt = (A - L_k C_k) e_k - K_k sum_{j in N_k} (e_k - e_j)
//             + (B - L_k D_k) xi - L_k Dbar_k eta_k.
struct JointSystem {
  Mat M;  // d/dt z = M z + G w, z = [x; e_1; ...; e_N]
  Mat G;  // w = [xi; eta_1; ...; eta_N]
  std::vector<int> eta_offset;
};

JointSystem joint_system(const NetworkModel& model, const Gains& g) {
  const int n = model.n();
  const int N = model.size();
  const int m = model.plant.m();
  JointSystem js;
  int w = m;
  for (int k = 1; k <= N; ++k) {
    js.eta_offset.push_back(w);
    w += model.node(k).s();
  }
  js.M = Mat::Zero(n * (N + 1), n * (N + 1));
  js.G = Mat::Zero(n * (N + 1), w);
  const Mat& A = model.plant.A;
  const Mat& B = model.plant.B;
  js.M.topLeftCorner(n, n) = A;
  js.G.topLeftCorner(n, m) = B;
  if (static_cast<int>(g.K.size()) != N || static_cast<int>(g.L.size()) != N) {
    throw DimensionError("gains: one K and one L per node required");
  }
  for (int k = 1; k <= N; ++k) {
    const SensorNode& node = model.node(k);
    const Mat& K = g.K[k - 1];
    const Mat& L = g.L[k - 1];
    if (K.rows() != n || K.cols() != n || L.rows() != n || L.cols() != node.r()) {
      throw DimensionError("gains of node " + std::to_string(k) + " have the wrong shape");
    }
    const int row = n * k;
    const auto& in = model.graph.in_neighbors(k);
    js.M.block(row, row, n, n) = A - L * node.C - static_cast<double>(in.size()) * K;
    for (int j : in) js.M.block(row, n * j, n, n) += K;
    js.G.block(row, 0, n, m) = B - L * node.D;
    js.G.block(row, js.eta_offset[k - 1], n, node.s()) = -L * node.Dbar;
  }
  return js;
}

}  // namespace

SimulationTrace integrate(const Scenario& s) {
  if (!s.model) throw std::invalid_argument("scenario has no model");
  const NetworkModel& model = *s.model;
  if (!(s.dt > 0.0) || s.horizon < s.dt) throw std::invalid_argument("need dt > 0 and T >= dt");
  const int n = model.n();
  const int N = model.size();
  if (s.x0.size() != n) throw DimensionError("x0 has the wrong length");
  if (static_cast<int>(s.disturbances.eta.size()) != N) {
    throw DimensionError("one eta signal per node required");
  }
  const JointSystem js = joint_system(model, s.gains);
  const int steps = static_cast<int>(std::llround(s.horizon / s.dt));
  const int stride = std::max(1, s.stride);

  const Signal& xi = s.disturbances.xi;
  const auto& eta = s.disturbances.eta;
  auto input = [&](double t, const std::vector<int>& piece) {
    Vec w(js.G.cols());
    w.head(model.plant.m()) = xi.value(t, piece[0]);
    for (int k = 0; k < N; ++k) {
      w.segment(js.eta_offset[k], model.node(k + 1).s()) = eta[k].value(t, piece[k + 1]);
    }
    return w;
  };

  SimulationTrace tr;
  tr.x0 = s.x0;
  tr.error_energy.assign(N, 0.0);
  tr.eta_energy.assign(N, 0.0);

  Vec z = Vec::Zero(n * (N + 1));
  for (int k = 0; k <= N; ++k) z.segment(n * k, n) = s.x0;  // xhat_k(0) = 0
  // Psi only sees differences, and xhat_j - xhat_k = e_k - e_j.
  std::vector<Vec> e(N);
  auto unpack = [&](const Vec& v) {
    for (int k = 0; k < N; ++k) e[k] = v.segment(n * (k + 1), n);
  };
  auto error_sum = [&](const Vec& v, std::vector<double>& out) {
    for (int k = 0; k < N; ++k) out[k] = v.segment(n * (k + 1), n).squaredNorm();
  };

  unpack(z);
  double psi = disagreement(e, model.graph);
  std::vector<double> err(N), err_next(N);
  error_sum(z, err);
  double run_err = 0.0;
  double run_dist = 0.0;

  auto sample = [&](double t) {
    tr.time.push_back(t);
    tr.x.push_back(z.head(n));
    std::vector<Vec> xh(N);
    for (int k = 0; k < N; ++k) xh[k] = z.head(n) - e[k];
    tr.xhat.push_back(std::move(xh));
    tr.e.push_back(e);
    tr.psi.push_back(psi);
    tr.running_psi.push_back(tr.psi_integral);
    tr.running_error.push_back(run_err);
    tr.running_disturbance.push_back(run_dist);
  };
  sample(0.0);

  // Large injection gains make the error dynamics stiff; each step is split
  // into enough RK4 substeps to keep h * |lambda|max inside the stability
  // region. The count depends only on the gains, so runs stay reproducible.
  int substeps = 1;
  {
    const Mat Me = js.M.bottomRightCorner(n * N, n * N);
    const double radius = Me.size() ? Me.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    substeps = std::max(1, static_cast<int>(std::ceil(radius * s.dt / 2.0)));
  }
  const double hs = s.dt / substeps;

  std::vector<int> piece(N + 1);
  for (int step = 0; step < steps; ++step) {
    const double t_step = step * s.dt;
    const double mid_step = t_step + 0.5 * s.dt;
    piece[0] = xi.piece_index(mid_step);
    for (int k = 0; k < N; ++k) piece[k + 1] = eta[k].piece_index(mid_step);

    for (int sub = 0; sub < substeps; ++sub) {
      const double t = t_step + sub * hs;
      const double mid = t + 0.5 * hs;
      const Vec w0 = input(t, piece);
      const Vec wm = input(mid, piece);
      const Vec w1 = input(t + hs, piece);
      const Vec k1 = js.M * z + js.G * w0;
      const Vec k2 = js.M * (z + 0.5 * hs * k1) + js.G * wm;
      const Vec k3 = js.M * (z + 0.5 * hs * k2) + js.G * wm;
      const Vec k4 = js.M * (z + hs * k3) + js.G * w1;
      z += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!z.tail(n * N).allFinite()) {
        throw SimulationError(t + hs, "state became non-finite at t = " + std::to_string(t + hs));
      }

      unpack(z);
      const double psi_next = disagreement(e, model.graph);
      error_sum(z, err_next);
      const double h = 0.5 * hs;
      tr.psi_integral += h * (psi + psi_next);
      double err_mean = 0.0;
      for (int k = 0; k < N; ++k) {
        const double inc = h * (err[k] + err_next[k]);
        tr.error_energy[k] += inc;
        err_mean += inc;
      }
      run_err += err_mean / N;

      const double xi_inc = h * (w0.head(model.plant.m()).squaredNorm() + w1.head(model.plant.m()).squaredNorm());
      tr.xi_energy += xi_inc;
      double eta_mean = 0.0;
      for (int k = 0; k < N; ++k) {
        const int off = js.eta_offset[k];
        const int len = model.node(k + 1).s();
        const double inc = h * (w0.segment(off, len).squaredNorm() + w1.segment(off, len).squaredNorm());
        tr.eta_energy[k] += inc;
        eta_mean += inc;
      }
      run_dist += eta_mean / N + xi_inc;

      psi = psi_next;
      std::swap(err, err_next);
    }
    if ((step + 1) % stride == 0 || step + 1 == steps) sample((step + 1) * s.dt);
  }
  return tr;
}

void SimulationTrace::write_csv(std::ostream& os, double x0_weight) const {
  if (time.empty()) return;
  const int n = static_cast<int>(x.front().size());
  const int N = static_cast<int>(xhat.front().size());
  os << "time";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int k = 1; k <= N; ++k) {
    for (int i = 1; i <= n; ++i) os << ",xhat" << k << '_' << i;
  }
  os << ",psi,consensus_ratio,error_ratio\n";
  os << std::setprecision(17);
  for (std::size_t s = 0; s < time.size(); ++s) {
    os << time[s];
    for (int i = 0; i < n; ++i) os << ',' << x[s](i);
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < n; ++i) os << ',' << xhat[s][k](i);
    }
    const double den = x0_weight + running_disturbance[s];
    os << ',' << psi[s] << ',' << (den > 0 ? running_psi[s] / den : 0.0) << ','
       << (den > 0 ? running_error[s] / den : 0.0) << '\n';
  }
}

HinfMetrics hinf_metrics(const SimulationTrace& trace, const SymMat& P, double beta, double margin) {
  const int N = static_cast<int>(trace.eta_energy.size());
  if (N == 0) throw MetricsError("trace has no nodes");
  if (P.dim() != trace.x0.size()) throw DimensionError("P does not match x0");
  if (!(beta > 0.0)) throw MetricsError("beta must be positive");
  double eta = 0.0;
  for (double e : trace.eta_energy) eta += e;
  double err = 0.0;
  for (double e : trace.error_energy) err += e;
  HinfMetrics m;
  m.denominator = trace.x0.dot(P.mat() * trace.x0) + eta / N + trace.xi_energy;
  if (!(m.denominator > 0.0)) {
    throw MetricsError("zero denominator: no initial state and no disturbance energy");
  }
  m.consensus_ratio = trace.psi_integral / m.denominator;
  m.error_ratio = (err / N) / m.denominator;
  m.gamma = 1.0 / beta;
  m.pass = m.consensus_ratio <= margin * m.gamma;
  return m;
}

Vec sample_x0(int n, double radius, std::uint64_t seed) {
  auto gen = stream(seed, 0x78300000ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec v(n);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < n; ++i) v(i) = normal(gen);
    norm = v.norm();
  }
  return v / norm * radius * std::pow(unit(gen), 1.0 / n);
}

namespace {

template <class F>
void parallel_for(int count, int threads, F&& f) {
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

std::vector<BatteryRun> run_battery(const NetworkModel& model, const Gains& gains,
                                    const BatterySpec& spec) {
  std::vector<BatteryRun> out(spec.realizations);
  parallel_for(spec.realizations, spec.threads, [&](int i) {
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(i);
    Scenario s;
    s.model = &model;
    s.gains = gains;
    s.x0 = sample_x0(model.n(), spec.x0_radius, seed);
    s.horizon = spec.horizon;
    s.dt = spec.dt;
    s.stride = 1000;
    s.disturbances = disturbance_signals(model, spec.xi, spec.eta, spec.horizon, seed);
    const SimulationTrace tr = integrate(s);
    out[i].seed = seed;
    out[i].x0 = s.x0;
    out[i].metrics = hinf_metrics(tr, gains.P, gains.beta);
  });
  return out;
}

std::vector<DecayCheck> decay_checks(const NetworkModel& model, const Gains& gains, int count,
                                     double horizon, double factor, std::uint64_t seed, double dt) {
  std::vector<DecayCheck> out;
  for (int i = 0; i < count; ++i) {
    Scenario s;
    s.model = &model;
    s.gains = gains;
    s.x0 = sample_x0(model.n(), 1.0, seed + static_cast<std::uint64_t>(i));
    s.horizon = horizon;
    s.dt = dt;
    s.stride = std::max(1, static_cast<int>(std::llround(horizon / dt)));
    s.disturbances = disturbance_signals(model, SignalSpec::zero(), SignalSpec::zero(), horizon, 0);
    const SimulationTrace tr = integrate(s);
    DecayCheck d;
    d.x0 = s.x0;
    const int last = static_cast<int>(tr.time.size()) - 1;
    for (int k = 1; k <= model.size(); ++k) {
      d.worst_ratio = std::max(d.worst_ratio, tr.error(last, k).norm() / s.x0.norm());
    }
    d.pass = d.worst_ratio <= factor;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace dhinf
