// ttchaos: stochastic Galerkin pipeline in tensor-train format.
//
//   ttchaos expand|assemble|solve|stats|run --config <file>
//           [--path tt|sparse|both] [--seed k] [--trace] [--out dir]
//
// Exit codes: 0 success, 2 non-convergence (artifacts written with a flag),
// 3 guard refusal, 4 configuration error.

#include "ttchaos/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"stochastic Galerkin pipeline in tensor-train format"};
  app.require_subcommand(1);

  std::string config_path;
  std::string path_override;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool trace = false;

  const char* stages[] = {"expand", "assemble", "solve", "stats", "run"};
  const char* about[] = {
      "random-field expansion and chaos coefficients",
      "Galerkin operator and right-hand side",
      "preconditioned solve of the Galerkin system",
      "statistics of the solution artifact",
      "all stages in sequence",
  };
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(stages[i], about[i]);
    sub->add_option("--config", config_path, "run configuration file (JSON)")->required();
    sub->add_option("--path", path_override, "tt|sparse|both, overrides the config");
    sub->add_option("--seed", seed_override, "RNG seed, overrides the config");
    sub->add_option("--out", out_override, "output directory, overrides the config");
    sub->add_flag("--trace", trace, "per-sweep and per-iteration logs on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;  // bad flags are configuration errors
  }

  CLI::App* sub = app.get_subcommands().front();
  return ttchaos::pipeline::guarded([&]() -> int {
    ttchaos::RunConfig cfg = ttchaos::load_config(config_path);
    if (!path_override.empty()) cfg.path = ttchaos::path_from_string(path_override);
    if (sub->count("--seed") > 0) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (trace) cfg.trace = true;
    cfg.validate();

    const std::string name = sub->get_name();
    if (name == "expand") return ttchaos::pipeline::cmd_expand(cfg);
    if (name == "assemble") return ttchaos::pipeline::cmd_assemble(cfg);
    if (name == "solve") return ttchaos::pipeline::cmd_solve(cfg);
    if (name == "stats") return ttchaos::pipeline::cmd_stats(cfg);
    return ttchaos::pipeline::cmd_run(cfg);
  });
}
