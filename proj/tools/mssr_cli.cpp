// Command-line front end for dataset generation, cross-validation, experiment
// runs, and solver traces. Talks to the library through its C interface only.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mssr.h"

namespace {

int finish(mssr_status status) {
  if (status == MSSR_OK) return 0;
  std::fprintf(stderr, "error: %s\n", mssr_last_error());
  switch (status) {
    case MSSR_CONFIG_ERROR: return 2;
    case MSSR_NUMERIC_ERROR: return 3;
    case MSSR_IO_ERROR: return 4;
    default: return 1;
  }
}

struct VerbArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 0;
  bool has_jobs = false;
};

void add_common(CLI::App* cmd, VerbArgs& args, bool with_seed, bool with_jobs) {
  cmd->add_option("--config", args.config, "configuration file")->required();
  cmd->add_option("--out", args.out, "output directory")->required();
  if (with_seed)
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.has_seed = true; });
  if (with_jobs)
    cmd->add_option("--jobs", args.jobs, "worker threads for per-sample solves")
        ->each([&args](const std::string&) { args.has_jobs = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("multi-sensor sparse-representation classifier harness (library ") +
               mssr_version() + ")"};
  app.require_subcommand(1);

  VerbArgs gen_args, cv_args, run_args, trace_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset directory");
  add_common(gen, gen_args, true, false);
  CLI::App* cv = app.add_subcommand("cv", "grid-search weights by k-fold cross-validation");
  add_common(cv, cv_args, true, true);
  CLI::App* run = app.add_subcommand("run", "run methods over sensor sets, write result CSVs");
  add_common(run, run_args, true, true);
  CLI::App* trace = app.add_subcommand("trace", "export one solve's convergence record");
  add_common(trace, trace_args, false, false);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed())
    return finish(mssr_cmd_gen(gen_args.config.c_str(), gen_args.out.c_str(),
                               gen_args.has_seed ? &gen_args.seed : nullptr));
  if (cv->parsed())
    return finish(mssr_cmd_cv(cv_args.config.c_str(), cv_args.out.c_str(),
                              cv_args.has_seed ? &cv_args.seed : nullptr,
                              cv_args.has_jobs ? &cv_args.jobs : nullptr));
  if (run->parsed())
    return finish(mssr_cmd_run(run_args.config.c_str(), run_args.out.c_str(),
                               run_args.has_seed ? &run_args.seed : nullptr,
                               run_args.has_jobs ? &run_args.jobs : nullptr));
  return finish(mssr_cmd_trace(trace_args.config.c_str(), trace_args.out.c_str()));
}
