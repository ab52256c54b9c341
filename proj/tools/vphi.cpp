#include "vphi/cli.hpp"

#include <iostream>

#include "CLI11.hpp"

int main(int argc, char **argv) {
  CLI::App app{"vphi: global value numbering with value phi-functions"};
  app.require_subcommand(1);
  vphi::RunConfig cfg;

  std::string format = "text";
  std::string dump = "redundant";

  auto *analyze = app.add_subcommand("analyze", "Report redundant expressions");
  analyze->add_option("file", cfg.input_path, "IR source")->required();
  analyze->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));
  analyze->add_option("--dot", cfg.dot_path, "Write a Graphviz CFG here");
  analyze->add_option("--dump", dump)
      ->check(CLI::IsMember({"redundant", "all-points"}));
  analyze->add_option("--max-iters", cfg.max_iters, "Sweep cap");

  auto *check = app.add_subcommand(
      "check", "Compare the analysis against the path-enumeration oracle");
  check->add_option("file", cfg.input_path, "IR source");
  check->add_flag("--random", cfg.random, "Check generated programs");
  check->add_option("--seeds", cfg.seeds, "Number of generated programs");
  check->add_option("--unroll", cfg.unroll, "Back-edge unroll bound");
  check->add_flag("--acyclic", cfg.acyclic,
                  "Generate acyclic programs (exact mode)");
  check->add_option("--max-iters", cfg.max_iters, "Sweep cap");

  auto *stress = app.add_subcommand("stress", "Analyze a chain of diamonds");
  stress->add_option("--diamonds", cfg.diamonds, "Number of diamonds")
      ->required();
  stress->add_option("--format", format)->check(CLI::IsMember({"text", "json"}));

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed())
    cfg.command = vphi::Command::Analyze;
  else if (check->parsed())
    cfg.command = vphi::Command::Check;
  else
    cfg.command = vphi::Command::Stress;
  cfg.format = format == "json" ? vphi::Format::Json : vphi::Format::Text;
  cfg.dump = dump == "all-points" ? vphi::Dump::AllPoints : vphi::Dump::Redundant;
  if (cfg.command == vphi::Command::Check && cfg.input_path.empty())
    cfg.random = true;

  auto result = vphi::run(cfg);
  std::cout << result.out;
  std::cerr << result.err;
  return result.exit_code;
}
