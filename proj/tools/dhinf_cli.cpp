#include <iostream>

#include "CLI11.hpp"
#include "dhinf/commands.hpp"

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const dhinf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return dhinf::kExitValidation;
  } catch (const dhinf::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return dhinf::kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dhinf::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed H-infinity consensus filter synthesis and verification"};
  app.require_subcommand(1);

  std::string config;
  auto* check = app.add_subcommand("check", "Check the network assumptions of a scenario");
  check->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

  dhinf::SynthRequest req;
  std::string mode = "distributed";
  auto* synth = app.add_subcommand("synth", "Synthesize filter gains");
  synth->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  synth->add_option("--mode", mode, "central or distributed")
      ->check(CLI::IsMember({"central", "distributed"}));
  synth->add_option("--beta", req.beta, "fixed:<value> or opt (default: as configured)");
  synth->add_option("--out", req.out, "Run directory (default: the config's output entry)");
  synth->add_option("--max-iter", req.max_iter, "Iteration limit for the distributed run");
  synth->add_flag("--messages", req.messages, "Write messages.csv");
  synth->add_flag("--wall-time", req.wall_time, "Record wall time in trace.csv");

  std::string gains_dir;
  std::string out_dir;
  auto* verify = app.add_subcommand("verify", "Simulate the closed loop with saved gains");
  verify->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  verify->add_option("--gains", gains_dir, "Directory holding K*.csv, L*.csv, P.csv, beta.csv")
      ->required();
  verify->add_option("--out", out_dir, "Output directory (default: parent of --gains)");

  std::string trace_dir;
  auto* figs = app.add_subcommand("export-figures", "Write figure data from a run directory");
  figs->add_option("trace_dir", trace_dir, "Run directory holding trace.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dhinf::kExitValidation;
  }

  if (*figs) return guarded([&] { return dhinf::cmd_export_figures(trace_dir, std::cout); });
  return guarded([&] {
    const dhinf::ScenarioConfig cfg = dhinf::load_config(config);
    if (*check) return dhinf::cmd_check(cfg, std::cout);
    if (*synth) {
      req.mode = mode == "central" ? dhinf::SynthRequest::Mode::Central
                                   : dhinf::SynthRequest::Mode::Distributed;
      return dhinf::cmd_synth(cfg, req, std::cout);
    }
    return dhinf::cmd_verify(cfg, gains_dir, out_dir, std::cout);
  });
}
