#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "shearq/harness.hpp"
#include "shearq/io.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> horizon;
  std::optional<double> cap;
};

int execute(shearq::Experiment experiment, const Overrides& o) {
  using namespace shearq;
  RunConfig cfg;
  try {
    if (!o.config.empty()) {
      cfg = config_from_json(read_file(o.config));
    }
    cfg.experiment = experiment;
    if (!o.out.empty()) cfg.output = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.cap) cfg.cap = *o.cap;
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const int code = run(cfg, std::cout);
    if (code != kExitOk) std::cerr << "exit status " << code << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quenching experiments for reaction-diffusion in shear flows"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  int threads = 0;
  double horizon = 0.0, cap = 0.0;

  const std::vector<std::pair<shearq::Experiment, std::string>> commands = {
      {shearq::Experiment::Simulate, "evolve T, Phi or Psi and write snapshots"},
      {shearq::Experiment::CriticalAmplitude, "bracket A0(L) for each configured L"},
      {shearq::Experiment::MaxL, "bracket the largest quenchable L at each configured A"},
      {shearq::Experiment::CriticalLength, "compute ell_tilde from the time map"},
      {shearq::Experiment::McVerify, "cross-check Monte Carlo Psi against the PDE solver"},
      {shearq::Experiment::AlphaSweep, "critical amplitudes across profile scales alpha"},
      {shearq::Experiment::Dichotomy, "quench outcomes for plateau lengths around ell_tilde"},
  };
  std::vector<std::pair<CLI::App*, shearq::Experiment>> subs;
  for (const auto& [exp, help] : commands) {
    CLI::App* sub = app.add_subcommand(shearq::experiment_name(exp), help);
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "RNG seed (overrides config)");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", horizon, "time horizon")->check(CLI::PositiveNumber);
    sub->add_option("--cap", cap, "amplitude cap")->check(CLI::PositiveNumber);
    subs.emplace_back(sub, exp);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : shearq::kExitConfig;
  }
  for (const auto& [sub, exp] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--threads")) o.threads = threads;
    if (sub->count("--horizon")) o.horizon = horizon;
    if (sub->count("--cap")) o.cap = cap;
    return execute(exp, o);
  }
  return shearq::kExitConfig;
}
