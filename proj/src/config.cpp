#include "dhinf/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dhinf {

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

DistributedOptions SynthesisConfig::distributed_options() const {
  DistributedOptions o;
  o.c = c;
  o.max_iter = max_iter;
  o.tol = tol;
  o.fixed_beta = fixed_beta;
  o.beta0 = beta0;
  o.copies = copies;
  o.fusion = fusion;
  o.consensus = consensus;
  o.lmi = lmi;
  o.solver = solver;
  o.threads = threads;
  o.beta_step_tol = beta_step_tol;
  return o;
}

ScenarioConfig ScenarioConfig::padded() const {
  ScenarioConfig out = *this;
  if (padding && !check_assumptions(plant, nodes, graph()).all_controllable()) {
    pad_disturbances(out.plant, out.nodes, *padding);
  }
  return out;
}

NetworkModel ScenarioConfig::model() const {
  const ScenarioConfig p = padded();
  return NetworkModel::build(p.plant, p.nodes, p.graph());
}

BatterySpec ScenarioConfig::battery() const {
  BatterySpec b;
  b.realizations = simulation.realizations;
  b.xi = simulation.xi;
  b.eta = simulation.eta;
  b.horizon = simulation.horizon;
  b.dt = simulation.dt;
  b.x0_radius = simulation.x0_radius;
  b.seed = seed + battery_seed_offset;
  b.threads = simulation.threads;
  return b;
}

namespace {

bool same(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  if (name != o.name || node_count != o.node_count || edges != o.edges || seed != o.seed ||
      output_dir != o.output_dir || padding != o.padding || nodes.size() != o.nodes.size()) {
    return false;
  }
  if (!same(plant.A, o.plant.A) || !same(plant.B, o.plant.B)) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& a = nodes[i];
    const auto& b = o.nodes[i];
    if (a.index != b.index || a.alpha != b.alpha || !same(a.C, b.C) || !same(a.D, b.D) ||
        !same(a.Dbar, b.Dbar)) {
      return false;
    }
  }
  const auto& s = synthesis;
  const auto& t = o.synthesis;
  if (!(s.lmi == t.lmi) || s.c != t.c || s.fixed_beta != t.fixed_beta || s.beta0 != t.beta0 ||
      s.max_iter != t.max_iter || s.tol != t.tol || s.beta_step_tol != t.beta_step_tol ||
      s.copies != t.copies || s.fusion != t.fusion || !(s.consensus == t.consensus) ||
      !(s.solver == t.solver) || s.threads != t.threads) {
    return false;
  }
  const auto& u = simulation;
  const auto& v = o.simulation;
  return u.realizations == v.realizations && u.horizon == v.horizon && u.dt == v.dt &&
         u.x0_radius == v.x0_radius && u.xi == v.xi && u.eta == v.eta &&
         u.decay_count == v.decay_count && u.decay_horizon == v.decay_horizon &&
         u.decay_factor == v.decay_factor && u.margin == v.margin && u.threads == v.threads;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(line, "not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s, int line) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(line, "not an integer: '" + s + "'");
  return v;
}

bool numeric_row(const std::string& s) {
  const auto w = words(s);
  if (w.empty()) return false;
  for (const auto& x : w) {
    double v;
    auto [p, ec] = std::from_chars(x.data(), x.data() + x.size(), v);
    if (ec != std::errc() || p != x.data() + x.size()) return false;
  }
  return true;
}

Mat rows_to_matrix(const std::vector<std::vector<double>>& rows, int line) {
  if (rows.empty()) throw ConfigError(line, "matrix has no rows");
  const std::size_t cols = rows[0].size();
  Mat m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ConfigError(line, "matrix rows differ in length");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Mat read_csv_matrix(const std::filesystem::path& path, int line) {
  std::ifstream in(path);
  if (!in) throw ConfigError(line, "cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string text;
  while (std::getline(in, text)) {
    text = trim(text);
    if (text.empty()) continue;
    for (char& ch : text) {
      if (ch == ',') ch = ' ';
    }
    std::vector<double> row;
    for (const auto& w : words(text)) row.push_back(to_double(w, line));
    rows.push_back(std::move(row));
  }
  return rows_to_matrix(rows, line);
}

SignalSpec parse_signal(const std::vector<std::string>& w, int line) {
  if (w.empty()) throw ConfigError(line, "empty signal");
  auto arg = [&](std::size_t i) {
    if (i >= w.size()) throw ConfigError(line, "signal '" + w[0] + "' is missing arguments");
    return to_double(w[i], line);
  };
  if (w[0] == "zero") return SignalSpec::zero();
  if (w[0] == "pulse") return SignalSpec::pulse(arg(1), arg(2), arg(3));
  if (w[0] == "damped_noise") {
    const double piece = w.size() > 3 ? arg(3) : 0.1;
    if (!(arg(2) > 0.0)) throw ConfigError(line, "damped_noise needs decay > 0");
    return SignalSpec::damped_noise(arg(1), arg(2), piece);
  }
  throw ConfigError(line, "unknown signal kind '" + w[0] + "'");
}

struct Parser {
  std::vector<std::string> lines;
  std::filesystem::path base;
  ScenarioConfig cfg;
  std::string section;
  int node = 0;
  std::map<int, SensorNode> nodes;
  bool have_plant_a = false;
  bool have_plant_b = false;

  explicit Parser(const std::string& text, std::filesystem::path b) : base(std::move(b)) {
    std::istringstream is(text);
    std::string l;
    while (std::getline(is, l)) {
      const auto hash = l.find('#');
      if (hash != std::string::npos) l = l.substr(0, hash);
      lines.push_back(l);
    }
    cfg.synthesis = SynthesisConfig{};
    cfg.simulation = SimulationConfig{};
  }

  // Reads the matrix starting at lines[i] ("NAME: ..."); returns the index of
  // the last line consumed.
  std::size_t matrix(std::size_t i, const std::string& rest, Mat& out) {
    const int line = static_cast<int>(i) + 1;
    const auto w = words(rest);
    if (!w.empty()) {
      if (w[0] == "zeros" && w.size() == 3) {
        out = Mat::Zero(to_int(w[1], line), to_int(w[2], line));
      } else if (w[0] == "identity" && (w.size() == 2 || w.size() == 3)) {
        const double scale = w.size() == 3 ? to_double(w[2], line) : 1.0;
        const auto d = to_int(w[1], line);
        out = scale * Mat::Identity(d, d);
      } else if (w[0] == "file" && w.size() == 2) {
        out = read_csv_matrix(base / w[1], line);
      } else {
        throw ConfigError(line, "expected 'zeros r c', 'identity n [scale]', 'file path' or rows");
      }
      return i;
    }
    std::vector<std::vector<double>> rows;
    std::size_t j = i + 1;
    for (; j < lines.size() && numeric_row(lines[j]); ++j) {
      std::vector<double> row;
      for (const auto& x : words(lines[j])) row.push_back(to_double(x, static_cast<int>(j) + 1));
      rows.push_back(std::move(row));
    }
    out = rows_to_matrix(rows, line);
    return j - 1;
  }

  void key_value(const std::string& key, const std::string& value, int line) {
    const auto w = words(value);
    auto one = [&]() -> const std::string& {
      if (w.size() != 1) throw ConfigError(line, "'" + key + "' expects one value");
      return w[0];
    };
    auto num = [&] { return to_double(one(), line); };
    auto integer = [&] { return static_cast<int>(to_int(one(), line)); };

    if (section.empty()) {
      if (key == "name") cfg.name = trim(value);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(one(), line));
      else if (key == "output") cfg.output_dir = trim(value);
      else throw ConfigError(line, "unknown top-level key '" + key + "'");
      return;
    }
    if (section == "plant") {
      if (key == "pad_disturbances") cfg.padding = num();
      else throw ConfigError(line, "unknown plant key '" + key + "'");
      return;
    }
    if (section == "node") {
      if (key == "alpha") nodes[node].alpha = num();
      else throw ConfigError(line, "unknown node key '" + key + "'");
      return;
    }
    if (section == "graph") {
      if (key == "nodes") {
        cfg.node_count = integer();
      } else if (key == "edge") {
        if (w.size() != 2) throw ConfigError(line, "edge expects 'from to'");
        cfg.edges.emplace_back(static_cast<int>(to_int(w[0], line)), static_cast<int>(to_int(w[1], line)));
      } else {
        throw ConfigError(line, "unknown graph key '" + key + "'");
      }
      return;
    }
    if (section == "synthesis") {
      auto& s = cfg.synthesis;
      auto& so = s.solver;
      static const std::map<std::string, std::function<void(SynthesisConfig&, double)>> reals = {
          {"rho", [](SynthesisConfig& c, double v) { c.lmi.rho = v; }},
          {"delta", [](SynthesisConfig& c, double v) { c.lmi.delta = v; }},
          {"delta_pd", [](SynthesisConfig& c, double v) { c.lmi.delta_pd = v; }},
          {"c", [](SynthesisConfig& c, double v) { c.c = v; }},
          {"beta0", [](SynthesisConfig& c, double v) { c.beta0 = v; }},
          {"tol", [](SynthesisConfig& c, double v) { c.tol = v; }},
          {"beta_step_tol", [](SynthesisConfig& c, double v) { c.beta_step_tol = v; }},
          {"solver.feas_tol", [](SynthesisConfig& c, double v) { c.solver.feas_tol = v; }},
          {"solver.eps_abs", [](SynthesisConfig& c, double v) { c.solver.eps_abs = v; }},
          {"solver.eps_rel", [](SynthesisConfig& c, double v) { c.solver.eps_rel = v; }},
          {"solver.rho", [](SynthesisConfig& c, double v) { c.solver.rho = v; }},
          {"solver.sigma", [](SynthesisConfig& c, double v) { c.solver.sigma = v; }},
          {"solver.relaxation", [](SynthesisConfig& c, double v) { c.solver.relaxation = v; }},
          {"solver.adapt_ratio", [](SynthesisConfig& c, double v) { c.solver.adapt_ratio = v; }},
          {"solver.interior_shift", [](SynthesisConfig& c, double v) { c.solver.interior_shift = v; }},
          {"solver.infeasible_floor", [](SynthesisConfig& c, double v) { c.solver.infeasible_floor = v; }},
      };
      if (auto it = reals.find(key); it != reals.end()) {
        it->second(s, num());
      } else if (key == "max_iter") {
        s.max_iter = integer();
      } else if (key == "threads") {
        s.threads = integer();
      } else if (key == "solver.max_iter") {
        so.max_iter = integer();
      } else if (key == "solver.adapt_interval") {
        so.adapt_interval = integer();
      } else if (key == "solver.check_interval") {
        so.check_interval = integer();
      } else if (key == "solver.infeasible_window") {
        so.infeasible_window = integer();
      } else if (key == "solver.scaling_passes") {
        so.scaling_passes = integer();
      } else if (key == "beta") {
        if (w.size() == 1 && w[0] == "opt") s.fixed_beta.reset();
        else if (w.size() == 2 && w[0] == "fixed") s.fixed_beta = to_double(w[1], line);
        else throw ConfigError(line, "beta expects 'opt' or 'fixed <value>'");
      } else if (key == "copies") {
        if (one() == "full") s.copies = CopyMode::Full;
        else if (one() == "neighborhood") s.copies = CopyMode::Neighborhood;
        else throw ConfigError(line, "copies expects 'full' or 'neighborhood'");
      } else if (key == "fusion") {
        if (one() == "exact") s.fusion = FusionRule::Exact;
        else if (one() == "out-neighbor") s.fusion = FusionRule::OutNeighbor;
        else throw ConfigError(line, "fusion expects 'exact' or 'out-neighbor'");
      } else if (key == "consensus") {
        if (w.size() == 1 && w[0] == "exact") s.consensus = ConsensusProtocol::exact();
        else if (w.size() == 3 && w[0] == "linear")
          s.consensus = ConsensusProtocol::linear(static_cast<int>(to_int(w[1], line)), to_double(w[2], line));
        else throw ConfigError(line, "consensus expects 'exact' or 'linear <rounds> <weight>'");
      } else {
        throw ConfigError(line, "unknown synthesis key '" + key + "'");
      }
      return;
    }
    if (section == "simulation") {
      auto& s = cfg.simulation;
      if (key == "realizations") s.realizations = integer();
      else if (key == "horizon") s.horizon = num();
      else if (key == "dt") s.dt = num();
      else if (key == "x0_radius") s.x0_radius = num();
      else if (key == "xi") s.xi = parse_signal(w, line);
      else if (key == "eta") s.eta = parse_signal(w, line);
      else if (key == "decay_count") s.decay_count = integer();
      else if (key == "decay_horizon") s.decay_horizon = num();
      else if (key == "decay_factor") s.decay_factor = num();
      else if (key == "margin") s.margin = num();
      else if (key == "threads") s.threads = integer();
      else throw ConfigError(line, "unknown simulation key '" + key + "'");
      return;
    }
    throw ConfigError(line, "key '" + key + "' outside a known section");
  }

  void matrix_entry(const std::string& nm, const Mat& m, int line) {
    if (section == "plant") {
      if (nm == "A") {
        cfg.plant.A = m;
        have_plant_a = true;
      } else if (nm == "B") {
        cfg.plant.B = m;
        have_plant_b = true;
      } else {
        throw ConfigError(line, "unknown plant matrix '" + nm + "'");
      }
    } else if (section == "node") {
      SensorNode& s = nodes[node];
      if (nm == "C") s.C = m;
      else if (nm == "D") s.D = m;
      else if (nm == "Dbar") s.Dbar = m;
      else throw ConfigError(line, "unknown node matrix '" + nm + "'");
    } else {
      throw ConfigError(line, "matrix '" + nm + "' outside [plant] or [node k]");
    }
  }

  ScenarioConfig run() {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const int line = static_cast<int>(i) + 1;
      const std::string l = trim(lines[i]);
      if (l.empty()) continue;
      if (l.front() == '[') {
        if (l.back() != ']') throw ConfigError(line, "unterminated section header");
        const auto w = words(l.substr(1, l.size() - 2));
        if (w.empty()) throw ConfigError(line, "empty section header");
        section = w[0];
        if (section == "node") {
          if (w.size() != 2) throw ConfigError(line, "expected [node k]");
          node = static_cast<int>(to_int(w[1], line));
          if (node < 1) throw ConfigError(line, "node indices start at 1");
          if (nodes.count(node)) throw ConfigError(line, "node " + w[1] + " defined twice");
          nodes[node].index = node;
        } else if (w.size() != 1 || (section != "plant" && section != "graph" &&
                                     section != "synthesis" && section != "simulation")) {
          throw ConfigError(line, "unknown section '" + l + "'");
        }
        continue;
      }
      const auto colon = l.find(':');
      const auto eq = l.find('=');
      if (colon != std::string::npos && (eq == std::string::npos || colon < eq)) {
        const std::string nm = trim(l.substr(0, colon));
        Mat m;
        i = matrix(i, l.substr(colon + 1), m);
        matrix_entry(nm, m, line);
        continue;
      }
      if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value' or 'NAME:'");
      key_value(trim(l.substr(0, eq)), trim(l.substr(eq + 1)), line);
    }

    std::sort(cfg.edges.begin(), cfg.edges.end());
    cfg.edges.erase(std::unique(cfg.edges.begin(), cfg.edges.end()), cfg.edges.end());
    if (!have_plant_a || !have_plant_b) throw ConfigError(0, "[plant] needs matrices A and B");
    if (cfg.node_count <= 0) throw ConfigError(0, "[graph] needs nodes = N > 0");
    for (int k = 1; k <= cfg.node_count; ++k) {
      if (!nodes.count(k)) throw ConfigError(0, "missing [node " + std::to_string(k) + "]");
    }
    if (static_cast<int>(nodes.size()) != cfg.node_count) {
      throw ConfigError(0, "node sections do not match nodes = " + std::to_string(cfg.node_count));
    }
    for (auto& [k, s] : nodes) {
      if (s.C.size() == 0 || s.Dbar.size() == 0) {
        throw ConfigError(0, "[node " + std::to_string(k) + "] needs C and Dbar");
      }
      if (s.D.size() == 0) s.D = Mat::Zero(s.C.rows(), cfg.plant.B.cols());
      cfg.nodes.push_back(s);
    }
    return cfg;
  }
};

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

void write_matrix(std::ostringstream& os, const std::string& name, const Mat& m) {
  if (m.size() > 0 && m.isZero(0.0)) {
    os << name << ": zeros " << m.rows() << ' ' << m.cols() << '\n';
    return;
  }
  if (m.rows() == m.cols() && m.rows() > 0 && m == m(0, 0) * Mat::Identity(m.rows(), m.cols())) {
    os << name << ": identity " << m.rows();
    if (m(0, 0) != 1.0) os << ' ' << fmt(m(0, 0));
    os << '\n';
    return;
  }
  os << name << ":\n";
  for (int i = 0; i < m.rows(); ++i) {
    os << ' ';
    for (int j = 0; j < m.cols(); ++j) os << ' ' << fmt(m(i, j));
    os << '\n';
  }
}

std::string signal_text(const SignalSpec& s) {
  switch (s.kind) {
    case SignalSpec::Kind::Zero:
      return "zero";
    case SignalSpec::Kind::Pulse:
      return "pulse " + fmt(s.t0) + ' ' + fmt(s.t1) + ' ' + fmt(s.amplitude);
    case SignalSpec::Kind::DampedNoise:
      return "damped_noise " + fmt(s.amplitude) + ' ' + fmt(s.decay) + ' ' + fmt(s.piece);
  }
  return "zero";
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  return Parser(text, base_dir).run();
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  if (!cfg.name.empty()) os << "name = " << cfg.name << '\n';
  os << "seed = " << cfg.seed << '\n';
  if (!cfg.output_dir.empty()) os << "output = " << cfg.output_dir << '\n';

  os << "\n[plant]\n";
  write_matrix(os, "A", cfg.plant.A);
  write_matrix(os, "B", cfg.plant.B);
  if (cfg.padding) os << "pad_disturbances = " << fmt(*cfg.padding) << '\n';
  for (const auto& s : cfg.nodes) {
    os << "\n[node " << s.index << "]\nalpha = " << fmt(s.alpha) << '\n';
    write_matrix(os, "C", s.C);
    write_matrix(os, "D", s.D);
    write_matrix(os, "Dbar", s.Dbar);
  }
  os << "\n[graph]\nnodes = " << cfg.node_count << '\n';
  for (const auto& [a, b] : cfg.edges) os << "edge = " << a << ' ' << b << '\n';

  const auto& s = cfg.synthesis;
  const SolverOptions& so = s.solver;
  os << "\n[synthesis]\n";
  os << "rho = " << fmt(s.lmi.rho) << "\ndelta = " << fmt(s.lmi.delta) << "\ndelta_pd = " << fmt(s.lmi.delta_pd)
     << "\nc = " << fmt(s.c) << '\n';
  os << "beta = " << (s.fixed_beta ? "fixed " + fmt(*s.fixed_beta) : std::string("opt")) << '\n';
  os << "beta0 = " << fmt(s.beta0) << "\nmax_iter = " << s.max_iter << "\ntol = " << fmt(s.tol)
     << "\nbeta_step_tol = " << fmt(s.beta_step_tol) << '\n';
  os << "copies = " << (s.copies == CopyMode::Full ? "full" : "neighborhood") << '\n';
  os << "fusion = " << (s.fusion == FusionRule::Exact ? "exact" : "out-neighbor") << '\n';
  if (s.consensus.kind == ConsensusProtocol::Kind::Exact) {
    os << "consensus = exact\n";
  } else {
    os << "consensus = linear " << s.consensus.rounds << ' ' << fmt(s.consensus.weight) << '\n';
  }
  os << "threads = " << s.threads << '\n';
  os << "solver.max_iter = " << so.max_iter << "\nsolver.feas_tol = " << fmt(so.feas_tol)
     << "\nsolver.eps_abs = " << fmt(so.eps_abs) << "\nsolver.eps_rel = " << fmt(so.eps_rel)
     << "\nsolver.rho = " << fmt(so.rho) << "\nsolver.sigma = " << fmt(so.sigma)
     << "\nsolver.relaxation = " << fmt(so.relaxation) << "\nsolver.adapt_interval = " << so.adapt_interval
     << "\nsolver.adapt_ratio = " << fmt(so.adapt_ratio) << "\nsolver.interior_shift = " << fmt(so.interior_shift)
     << "\nsolver.check_interval = " << so.check_interval << "\nsolver.infeasible_window = " << so.infeasible_window
     << "\nsolver.infeasible_floor = " << fmt(so.infeasible_floor)
     << "\nsolver.scaling_passes = " << so.scaling_passes << '\n';

  const auto& m = cfg.simulation;
  os << "\n[simulation]\n";
  os << "realizations = " << m.realizations << "\nhorizon = " << fmt(m.horizon) << "\ndt = " << fmt(m.dt)
     << "\nx0_radius = " << fmt(m.x0_radius) << "\nxi = " << signal_text(m.xi) << "\neta = " << signal_text(m.eta)
     << "\ndecay_count = " << m.decay_count << "\ndecay_horizon = " << fmt(m.decay_horizon)
     << "\ndecay_factor = " << fmt(m.decay_factor) << "\nmargin = " << fmt(m.margin)
     << "\nthreads = " << m.threads << '\n';
  return os.str();
}

ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.name = "section4";
  c.seed = 1;
  c.output_dir = "runs/section4";
  const int n = 6;
  const int m = 7;
  c.plant.A.resize(n, n);
  c.plant.A << 0.3775, 0, 0, 0, 0, 0,
               0.2959, 0.3510, 0, 0, 0, 0,
               1.4751, 0.6232, 1.0078, 0, 0, 0,
               0.2340, 0, 0, 0.5596, 0, 0,
               0, 0, 0, 0.4437, 1.1878, -0.0215,
               0, 0, 0, 0, 2.2023, 1.0039;
  c.plant.B = Mat::Zero(n, m);
  c.plant.B.leftCols(n) = 0.1 * Mat::Identity(n, n);
  c.node_count = n;
  for (int k = 1; k <= n; ++k) {
    SensorNode s;
    s.index = k;
    s.alpha = 4.0;
    s.C = Mat::Zero(2, n);
    s.C(0, k - 1) = 1.0;
    s.C(1, k % n) = 1.0;
    s.D = Mat::Zero(2, m);
    s.Dbar = 0.01 * Mat::Identity(2, 2);
    c.nodes.push_back(s);
    c.edges.emplace_back(k, k % n + 1);
  }
  std::sort(c.edges.begin(), c.edges.end());
  c.synthesis.fixed_beta = 100.0;
  c.synthesis.beta0 = 100.0;
  c.synthesis.max_iter = 70;
  c.synthesis.tol = 0.0;
  return c;
}

ScenarioConfig toy_scenario() {
  ScenarioConfig c;
  c.name = "toy3";
  c.seed = 1;
  c.output_dir = "runs/toy3";
  c.plant.A.resize(2, 2);
  c.plant.A << 0, 1, -1, 0.5;
  c.plant.B = 0.1 * Mat::Identity(2, 2);
  c.node_count = 3;
  const double rows[3][2] = {{1, 0}, {0, 1}, {1, 1}};
  for (int k = 1; k <= 3; ++k) {
    SensorNode s;
    s.index = k;
    s.alpha = 1.0;
    s.C = Mat(1, 2);
    s.C << rows[k - 1][0], rows[k - 1][1];
    s.D = Mat::Zero(1, 2);
    s.Dbar = 0.1 * Mat::Identity(1, 1);
    c.nodes.push_back(s);
  }
  c.edges = CommGraph::undirected_cycle(3).edges();
  c.synthesis.lmi.rho = 10.0;
  c.synthesis.c = 0.3;
  c.synthesis.fixed_beta.reset();
  c.synthesis.beta0 = 1.0;
  c.synthesis.max_iter = 2000;
  c.synthesis.tol = 1e-6;
  c.synthesis.beta_step_tol = 1e-6;
  c.simulation.horizon = 20.0;
  return c;
}

}  // namespace dhinf
