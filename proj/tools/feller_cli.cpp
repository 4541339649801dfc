// feller: run experiment configs and print or write a report.
//
//   feller <command> --config PATH [--seed U64] [--out PATH] [--format json|csv] [--threads N]
//
// Exit codes: 0 every check terminated, 2 config error, 3 resource cap hit.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "feller/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "experiment config (JSON)")->required();
  sub->add_option("--seed", o.seed, "override the config seed");
  sub->add_option("--out", o.out, "write the report here instead of the config path or stdout");
  sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--threads", o.threads, "worker threads for sampling")->check(CLI::PositiveNumber);
}

int execute(feller::Command command, const Options& o) {
  feller::ExperimentConfig cfg = feller::load_config(o.config, o.seed);
  if (!o.format.empty()) cfg.format = o.format;
  if (!o.out.empty()) cfg.output_path = o.out;
  if (o.threads > 0) cfg.threads = o.threads;

  const feller::Json report = feller::run_experiment(cfg, command);
  const std::string text = cfg.format == "csv" ? feller::report_to_csv(report) : report.dump(2) + "\n";
  if (cfg.output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.output_path);
    if (!out || !(out << text)) throw feller::InputError("cannot write report to '" + cfg.output_path + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feller property and invariant measure checks for Markov systems", "feller"};
  app.require_subcommand(1);
  app.set_version_flag("--version", feller::kToolVersion);

  Options o;
  std::optional<feller::Command> chosen;
  const std::pair<feller::Command, const char*> commands[] = {
      {feller::Command::run, "run every check in the config"},
      {feller::Command::simulate, "evolve the system from a start point or measure"},
      {feller::Command::estimate_invariant, "estimate the invariant measure"},
      {feller::Command::check_conditions, "check contraction, probability and flow hypotheses"},
      {feller::Command::check_criteria, "run the criterion estimators"},
      {feller::Command::couple_verify, "build and verify coupling decompositions on a chain"},
      {feller::Command::oracle_chain, "exact finite-chain verifications"},
  };
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(feller::to_string(cmd), help);
    add_common(sub, o);
    sub->callback([&chosen, cmd = cmd] { chosen = cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    return execute(*chosen, o);
  } catch (const feller::InputError& e) {
    std::cerr << "feller: " << e.what() << "\n";
    return kExitConfig;
  } catch (const feller::ResourceError& e) {
    std::cerr << "feller: resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "feller: " << e.what() << "\n";
    return 1;
  }
}
