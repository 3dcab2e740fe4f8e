#include <CLI11.hpp>

#include "hsp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulation and retrieval of single-photon holograms from "
               "two-photon coincidence interference"};
  app.require_subcommand(1);

  hsp::CliOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Path to the JSON run configuration")
        ->required();
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_flag("--dry-run", opts.dry_run,
                  "Validate the config and print the resolved parameters without computing");
  };

  auto* simulate = app.add_subcommand(
      "simulate", "Write ground truth, the exact hologram and sampled count files");
  auto* retrieve = app.add_subcommand(
      "retrieve", "Reconstruct the unknown photon's phase from count files");
  auto* uncertainty = app.add_subcommand(
      "uncertainty", "Monte-Carlo resampling statistics for an existing dataset");
  auto* pipeline =
      app.add_subcommand("pipeline", "simulate + retrieve + uncertainty with one seed");
  for (auto* sub : {simulate, retrieve, uncertainty, pipeline}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  if (app.count_all() > 0) {
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--out")) opts.out_dir = out_dir;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub == simulate) return hsp::cmd_simulate(opts);
    if (sub == retrieve) return hsp::cmd_retrieve(opts);
    if (sub == uncertainty) return hsp::cmd_uncertainty(opts);
    if (sub == pipeline) return hsp::cmd_pipeline(opts);
  }
  return hsp::kExitGenericError;
}
