#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mflab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lattice boson mean-field laboratory"};
  app.require_subcommand(1);

  mflab::RunOptions opt;
  std::uint64_t seed = 0;
  long long dense_cap = 5000;
  bool no_assert = false;

  auto* run = app.add_subcommand("run", "run one configured experiment");
  run->add_option("--config", opt.config_path, "experiment config file")
      ->required();
  run->add_option("--out", opt.out_dir, "output directory")->required();
  run->add_option("--workers", opt.workers, "worker threads");
  run->add_option("--seed", seed, "random seed recorded in the manifest");
  run->add_option("--dense-cap", dense_cap, "dense-matrix dimension cap");
  run->add_flag("--no-assert", no_assert,
                "record assertion outcomes without failing the run");

  std::vector<std::string> dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge run summaries");
  report->add_option("dirs", dirs, "run directories")->required();
  report->add_option("--out", report_out, "write merged tables here");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    opt.seed = seed;
    opt.dense_cap = static_cast<mflab::Index>(dense_cap);
    opt.check_assertions = !no_assert;
    return mflab::run_command(opt, std::cout);
  }
  return mflab::report_command(dirs, report_out, std::cout);
}
