// cds: command-line front end for the concept distillation editing engine.
//
//   cds edit          --config run.json [--source src.cdst] [--out dir] [--dump-gradients]
//   cds sweep         --config run.json --axis eta --values 0.01,0.05,1 [--parallel]
//   cds compare       --config run.json [--dump-gradients]
//   cds check-backend --backend-url http://host:port
//   cds source        --config run.json --out src.cdst

#include <iostream>

#include "CLI11.hpp"

#include "cds/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Training-free multi-concept latent editing"};
  app.require_subcommand(1);

  cds::cli::RunArgs args;
  std::string axis;
  std::string values;
  bool parallel = false;
  std::string dest;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config, "Run configuration (JSON)")->required();
    cmd->add_option("--source", args.source, "Source latent (CDST) or image for the remote backend");
    cmd->add_option("--out", args.out, "Output directory (overrides output.dir)");
    cmd->add_option("--backend-url", args.backend_url, "Remote bridge URL")->envname("CDS_BACKEND_URL");
    cmd->add_flag("--dump-gradients", args.dump_gradients, "Write every step's gradient as CDST");
  };

  auto* edit = app.add_subcommand("edit", "Run one edit");
  add_run_flags(edit);

  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over one hyperparameter");
  add_run_flags(sweep);
  sweep->add_option("--axis", axis, "eta | tau | patch | lr")->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->required();
  sweep->add_flag("--parallel", parallel, "Run sweep cells concurrently");

  auto* compare = app.add_subcommand("compare", "Run SDS, DDS and CDS from identical seeds");
  add_run_flags(compare);

  std::string url;
  auto* check = app.add_subcommand("check-backend", "Protocol conformance probe of a bridge");
  check->add_option("--backend-url", url, "Bridge URL")->envname("CDS_BACKEND_URL");

  auto* source = app.add_subcommand("source", "Write the analytic backend's source latent");
  source->add_option("--config", args.config, "Run configuration (JSON)")->required();
  source->add_option("--out", dest, "Destination CDST file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cds::cli::kExitConfig;
  }

  if (*edit) return cds::cli::cmd_edit(args, std::cout, std::cerr);
  if (*sweep) return cds::cli::cmd_sweep(args, axis, values, parallel, std::cout, std::cerr);
  if (*compare) return cds::cli::cmd_compare(args, std::cout, std::cerr);
  if (*check) return cds::cli::cmd_check_backend(url, std::cout, std::cerr);
  if (*source) return cds::cli::cmd_source(args, dest, std::cout, std::cerr);
  return cds::cli::kExitConfig;
}
